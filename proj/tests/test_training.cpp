#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "expc/training.hpp"
#include "oracles.hpp"

using namespace expc;

namespace {

// Images whose brightness depends on the class, plus seeded noise.
Dataset make_dataset(std::size_t per_class, std::size_t size, std::uint64_t seed, std::size_t n_exp = SIZE_MAX) {
    Dataset d;
    if (n_exp == SIZE_MAX) n_exp = per_class;
    std::size_t k = 0;
    auto add = [&](LabelClass cls, double lo, double hi) {
        ImageSample s;
        s.pixels = oracle::random_tensor<float>(Shape{size, size, 3}, seed * 1000 + k, lo, hi);
        s.label = cls;
        s.source_name = std::string(class_prefix(cls)) + "." + std::to_string(k++);
        d.samples.push_back(std::move(s));
    };
    for (std::size_t i = 0; i < n_exp; ++i) add(LabelClass::Exposure, 0.0, 0.4);
    for (std::size_t i = 0; i < per_class; ++i) add(LabelClass::Pristine, 0.3, 0.8);
    return d;
}

ModelGrads<double> zero_like(const ModelParams<double>& p) {
    ModelGrads<double> g;
    for (const auto& l : p.layers)
        g.layers.push_back({l.kind, Tensor<double>(l.weights.shape()), Tensor<double>(l.bias.shape()), l.stride});
    return g;
}

Tensor<double> rows(std::vector<double> v) {
    const auto n = v.size() / 2;
    return Tensor<double>(Shape{n, 2}, std::move(v));
}

}  // namespace

TEST_CASE("cross-entropy examples") {
    const auto r = cross_entropy_loss(rows({0.5, 0.5}), rows({1, 0}));
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.grad_logits[0] == doctest::Approx(-0.5));
    CHECK(r.grad_logits[1] == doctest::Approx(0.5));

    // mean over rows, gradient divided by n
    const auto two = cross_entropy_loss(rows({0.9, 0.1, 0.2, 0.8}), rows({1, 0, 0, 1}));
    CHECK(two.loss == doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2));
    CHECK(two.grad_logits[0] == doctest::Approx(-0.05));
    CHECK(two.grad_logits[3] == doctest::Approx(-0.1));

    // the clamp keeps a zero probability finite
    const auto clamped = cross_entropy_loss(rows({0.0, 1.0}), rows({1, 0}));
    CHECK(clamped.loss == doctest::Approx(-std::log(kLogClamp)));

    CHECK_THROWS_AS(cross_entropy_loss(rows({0.5, 0.5}), rows({0.5, 0.5})), UsageError);
    CHECK_THROWS_AS(cross_entropy_loss(rows({0.5, 0.5}), rows({1, 1})), UsageError);
    CHECK_THROWS_AS(cross_entropy_loss(rows({0.5, 0.5}), rows({1, 0, 0, 1})), ShapeError);
}

TEST_CASE("sgd_step") {
    ModelParams<double> p;
    p.layers.push_back({LayerKind::Dense, Tensor<double>(Shape{1, 2}, {1.0, -2.0}), Tensor<double>(Shape{2}, {0.5, 0.0}),
                        1});
    ModelGrads<double> g = zero_like(p);
    g.layers[0].weights = Tensor<double>(Shape{1, 2}, {0.5, 1.0});
    g.layers[0].bias = Tensor<double>(Shape{2}, {-1.0, 0.0});
    const auto q = sgd_step(p, g, 0.1);
    CHECK(q.layers[0].weights[0] == doctest::Approx(0.95));
    CHECK(q.layers[0].weights[1] == doctest::Approx(-2.1));
    CHECK(q.layers[0].bias[0] == doctest::Approx(0.6));
    CHECK(q.layers[0].bias[1] == 0.0);

    // minimising w^2 from w = 3: each step multiplies w by (1 - 2 lr)
    ModelParams<double> w = p;
    w.layers[0].weights = Tensor<double>(Shape{1, 2}, {3.0, 3.0});
    for (int i = 0; i < 2; ++i) {
        auto grad = zero_like(w);
        for (std::size_t k = 0; k < 2; ++k) grad.layers[0].weights[k] = 2 * w.layers[0].weights[k];
        w = sgd_step(w, grad, 0.25);
    }
    CHECK(w.layers[0].weights[0] == doctest::Approx(0.75));

    ModelGrads<double> wrong;
    CHECK_THROWS_AS(sgd_step(p, wrong, 0.1), UsageError);
}

TEST_CASE("split_dataset sizes") {
    // 8600 per class, as in the reference corpus
    Dataset big;
    big.samples.resize(17'200);
    for (std::size_t i = 0; i < big.size(); ++i) {
        big.samples[i].label = i < 8600 ? LabelClass::Exposure : LabelClass::Pristine;
        big.samples[i].source_name = std::to_string(i);
    }
    const auto [train, test] = split_dataset(big, 0.8, 42);
    CHECK(train.size() == 13'760);
    CHECK(test.size() == 3'440);
    CHECK(train.class_counts() == std::array<std::size_t, 2>{6880, 6880});

    const auto [a, b] = split_dataset(big, 0.5, 1);
    CHECK(a.class_counts() == std::array<std::size_t, 2>{4300, 4300});
    CHECK(b.class_counts() == std::array<std::size_t, 2>{4300, 4300});

    const auto tiny = make_dataset(1, 2, 0);
    CHECK_THROWS_AS(split_dataset(tiny, 0.01, 0), UsageError);
    CHECK_THROWS_AS(split_dataset(tiny, 1.0, 0), UsageError);
    CHECK_THROWS_AS(split_dataset(Dataset{}, 0.5, 0), UsageError);
}

TEST_CASE("split_dataset is a seeded, stratified partition") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n_exp = 3 + seed % 7, n_pri = 5 + seed % 4;
        auto d = make_dataset(n_pri, 1, seed, n_exp);
        const double f = 0.2 + 0.03 * double(seed);
        const auto [train, test] = split_dataset(d, f, seed);
        const auto [train2, test2] = split_dataset(d, f, seed);

        std::vector<std::string> tn, tn2;
        for (const auto& s : train.samples) tn.push_back(s.source_name);
        for (const auto& s : train2.samples) tn2.push_back(s.source_name);
        CHECK(tn == tn2);

        std::multiset<std::string> all;
        for (const auto& s : train.samples) all.insert(s.source_name);
        for (const auto& s : test.samples) all.insert(s.source_name);
        CHECK(all.size() == d.size());
        CHECK(std::set<std::string>(all.begin(), all.end()).size() == d.size());

        // per-class sizes follow round(f * class size) up to the largest-remainder fix-up
        const auto counts = train.class_counts();
        CHECK(std::abs(double(counts[0]) - f * double(n_exp)) <= 1.0);
        CHECK(std::abs(double(counts[1]) - f * double(n_pri)) <= 1.0);
        CHECK(train.size() == static_cast<std::size_t>(std::llround(f * double(d.size()))));
    }
}

TEST_CASE("batch_iterator") {
    const auto batches = batch_iterator(300, 128, 7);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 128);
    CHECK(batches[1].size() == 128);
    CHECK(batches[2].size() == 44);

    std::vector<std::size_t> seen;
    for (const auto& b : batches) seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 300; ++i) CHECK(seen[i] == i);

    CHECK(batch_iterator(300, 128, 7) == batches);
    CHECK(batch_iterator(300, 128, 8) != batches);
    CHECK(batch_iterator(5, 10, 0).size() == 1);
    CHECK_THROWS_AS(batch_iterator(5, 0, 0), UsageError);
}

TEST_CASE("TrainConfig validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.train_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("evaluate") {
    const auto config = ModelConfig::conv(4, {2});
    const auto data = make_dataset(3, 4, 1);
    const auto zero = zero_params<float>(config);
    const auto r = evaluate(config, zero, data);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    // uniform output: argmax ties to class 0 (Exposure), half of this set
    CHECK(r.accuracy == doctest::Approx(0.5));

    const auto params = init_params<float>(config, 2);
    const auto before = params;
    const auto e1 = evaluate(config, params, data, 2);
    const auto e2 = evaluate(config, params, data, 5);
    CHECK(params == before);
    CHECK(e1.accuracy == e2.accuracy);
    CHECK(e1.loss == doctest::Approx(e2.loss).epsilon(1e-6));
    CHECK_THROWS_AS(evaluate(config, params, Dataset{}), UsageError);
}

TEST_CASE("one epoch gives one metric row; training is deterministic") {
    const auto config = ModelConfig::conv(6, {3, 2});
    const auto data = make_dataset(10, 6, 3);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 4;
    tc.seed = 9;
    const auto a = train<float>(config, tc, data);
    REQUIRE(a.report.per_epoch.size() == 1);
    CHECK(a.report.per_epoch[0].epoch == 1);
    CHECK(a.report.train_size == 16);
    CHECK(a.report.test_size == 4);

    const auto b = train<float>(config, tc, data);
    CHECK(a.params == b.params);
    CHECK(format_report_tsv(a.report) == format_report_tsv(b.report));

    tc.seed = 10;
    CHECK_FALSE(train<float>(config, tc, data).params == a.params);
}

TEST_CASE("a small step decreases the batch loss") {
    const auto data = make_dataset(4, 5, 11);
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto [x, y] = assemble_batch<double>(data, all);
    for (const auto& config : {ModelConfig::conv(5, {4, 3}), ModelConfig::dense(5, {6})}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto params = init_params<double>(config, seed);
            const auto fwd = model_forward(config, params, x);
            const auto l0 = cross_entropy_loss(fwd.probabilities, y);
            const auto g = model_backward(config, params, fwd.cache, l0.grad_logits);
            const auto next = sgd_step(params, g, 1e-4);
            const auto l1 = cross_entropy_loss(model_forward(config, next, x).probabilities, y);
            CHECK(l1.loss < l0.loss);
        }
    }
}

TEST_CASE("divergence is reported with the batch index") {
    const auto config = ModelConfig::dense(4, {8});
    const auto data = make_dataset(8, 4, 5);
    TrainConfig tc;
    tc.learning_rate = 1e30;
    tc.batch_size = 4;
    tc.epochs = 3;
    auto params = init_params<float>(config, 0);
    try {
        fit(config, tc, data, params);
        FAIL("expected a TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.batch_index() >= 1);
        CHECK(e.batch_index() < 12);
    }
}

TEST_CASE("training needs both classes") {
    TrainConfig tc;
    CHECK_THROWS_AS(train<float>(ModelConfig::conv(2, {2}), tc, make_dataset(4, 2, 0, 0)), UsageError);
}

TEST_CASE("report format") {
    TrainReport r;
    r.per_epoch = {{1, 0.693147, 0.5}, {2, 0.25, 0.875}};
    r.test_loss = 0.123456;
    r.test_accuracy = 1.0;
    CHECK(format_report_tsv(r) ==
          "split\tepoch\tloss\tacc\n"
          "train\t1\t0.6931\t0.5000\n"
          "train\t2\t0.2500\t0.8750\n"
          "test\t-\t0.1235\t1.0000\n");
}

TEST_CASE("argmax ties go to the lower index") {
    CHECK(argmax_rows(rows({0.5, 0.5, 0.2, 0.8, 0.9, 0.1})) == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("derive_seed separates purposes") {
    CHECK(derive_seed(1, kSplitSeedPurpose) != derive_seed(1, kEpochSeedPurpose));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(5, 5) == derive_seed(5, 5));
}
