#include "expc/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace expc {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
    if (batch_size == 0) throw UsageError("batch size must be at least 1");
    if (epochs == 0) throw UsageError("epochs must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train fraction must lie in (0, 1)");
}

std::string format_report_tsv(const TrainReport& report) {
    std::ostringstream os;
    char line[128];
    os << "split\tepoch\tloss\tacc\n";
    for (const auto& m : report.per_epoch) {
        std::snprintf(line, sizeof line, "train\t%zu\t%.4f\t%.4f\n", m.epoch, m.mean_loss, m.accuracy);
        os << line;
    }
    std::snprintf(line, sizeof line, "test\t-\t%.4f\t%.4f\n", report.test_loss, report.test_accuracy);
    os << line;
    return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    // splitmix64 finaliser over (seed, purpose)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (purpose + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

template <typename T>
LossResult<T> cross_entropy_loss(const Tensor<T>& probs, const Tensor<T>& targets) {
    if (probs.rank() != 2 || probs.shape() != targets.shape())
        throw ShapeError("cross_entropy_loss: probs " + probs.shape().to_string() + " vs targets " +
                         targets.shape().to_string());
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    LossResult<T> r;
    r.grad_logits = Tensor<T>(probs.shape());
    double total = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const T y = targets[row * k + j];
            if (y == T(1)) {
                ++ones;
            } else if (y != T(0)) {
                throw UsageError("target row " + std::to_string(row) + " is not one-hot");
            }
            const double p = std::clamp(static_cast<double>(probs[row * k + j]), kLogClamp, 1.0 - kLogClamp);
            if (y == T(1)) total -= std::log(p);
            r.grad_logits[row * k + j] = (probs[row * k + j] - y) / static_cast<T>(n);
        }
        if (ones != 1) throw UsageError("target row " + std::to_string(row) + " is not one-hot");
    }
    r.loss = total / static_cast<double>(n);
    return r;
}

template <typename T>
ModelParams<T> sgd_step(ModelParams<T> params, const ModelGrads<T>& grads, double learning_rate) {
    if (params.layers.size() != grads.layers.size())
        throw UsageError("sgd_step: gradient has " + std::to_string(grads.layers.size()) + " layers, params " +
                         std::to_string(params.layers.size()));
    const T lr = static_cast<T>(learning_rate);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        const auto& g = grads.layers[l];
        if (p.weights.shape() != g.weights.shape() || p.bias.shape() != g.bias.shape())
            throw UsageError("sgd_step: gradient shape mismatch in layer " + std::to_string(l));
        for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= lr * g.weights[i];
        for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= lr * g.bias[i];
    }
    return params;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (dataset.empty()) throw UsageError("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train fraction must lie in (0, 1)");

    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        members[static_cast<std::size_t>(dataset.samples[i].label)].push_back(i);

    // Per-class quotas by largest remainder so they add up to round(f * N).
    const auto total_train = static_cast<std::size_t>(std::llround(train_fraction * dataset.size()));
    std::array<std::size_t, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double exact = train_fraction * static_cast<double>(members[c].size());
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    while (assigned < total_train) {
        std::size_t best = kNumClasses;
        for (std::size_t c = 0; c < kNumClasses; ++c)
            if (quota[c] < members[c].size() && (best == kNumClasses || remainder[c] > remainder[best])) best = c;
        if (best == kNumClasses) break;
        ++quota[best];
        remainder[best] = -1.0;
        ++assigned;
    }

    std::mt19937_64 rng(seed);
    std::vector<char> in_train(dataset.size(), 0);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto order = members[c];
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < quota[c]; ++i) in_train[order[i]] = 1;
    }

    std::pair<Dataset, Dataset> out;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (in_train[i] ? out.first : out.second).samples.push_back(dataset.samples[i]);
    if (out.first.empty() || out.second.empty())
        throw UsageError("split at fraction " + std::to_string(train_fraction) + " of " +
                         std::to_string(dataset.size()) + " samples leaves one side empty");
    return out;
}

std::vector<std::vector<std::size_t>> batch_iterator(std::size_t count, std::size_t batch_size,
                                                     std::uint64_t epoch_seed) {
    if (batch_size == 0) throw UsageError("batch size must be at least 1");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count; start += batch_size)
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(count, start + batch_size)));
    return batches;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> assemble_batch(const Dataset& dataset, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw UsageError("empty batch");
    const Shape& s = dataset.samples.at(indices.front()).pixels.shape();
    const std::size_t per = s.count();
    Tensor<T> x(Shape{indices.size(), s[0], s[1], s[2]});
    Tensor<T> y(Shape{indices.size(), kNumClasses});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& sample = dataset.samples.at(indices[b]);
        if (sample.pixels.shape() != s)
            throw ShapeError("sample " + sample.source_name + " has shape " + sample.pixels.shape().to_string() +
                             ", expected " + s.to_string());
        std::copy(sample.pixels.data().begin(), sample.pixels.data().end(), x.raw() + b * per);
        const auto hot = one_hot(sample.label);
        for (std::size_t c = 0; c < kNumClasses; ++c) y[b * kNumClasses + c] = static_cast<T>(hot[c]);
    }
    return {std::move(x), std::move(y)};
}

template <typename T>
std::vector<std::size_t> argmax_rows(const Tensor<T>& probs) {
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    std::vector<std::size_t> out(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs[r * k + j] > probs[r * k + best]) best = j;
        out[r] = best;
    }
    return out;
}

namespace {

template <typename T>
std::size_t count_correct(const Tensor<T>& probs, const Tensor<T>& targets) {
    const auto predicted = argmax_rows(probs);
    const auto truth = argmax_rows(targets);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i];
    return correct;
}

}  // namespace

template <typename T>
EvalResult evaluate(const ModelConfig& config, const ModelParams<T>& params, const Dataset& test,
                    std::size_t batch_size) {
    if (test.empty()) throw UsageError("cannot evaluate on an empty dataset");
    if (batch_size == 0) throw UsageError("batch size must be at least 1");
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < test.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(test.size(), start + batch_size); ++i) idx.push_back(i);
        auto [x, y] = assemble_batch<T>(test, idx);
        const auto fwd = model_forward(config, params, x);
        loss_sum += cross_entropy_loss(fwd.probabilities, y).loss * static_cast<double>(idx.size());
        correct += count_correct(fwd.probabilities, y);
    }
    return {loss_sum / static_cast<double>(test.size()),
            static_cast<double>(correct) / static_cast<double>(test.size())};
}

template <typename T>
std::vector<EpochMetrics> fit(const ModelConfig& model, const TrainConfig& config, const Dataset& train_set,
                              ModelParams<T>& params) {
    config.validate();
    if (train_set.empty()) throw UsageError("training set is empty");
    std::vector<EpochMetrics> history;
    std::size_t batch_index = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches =
            batch_iterator(train_set.size(), config.batch_size, derive_seed(config.seed, kEpochSeedPurpose + epoch));
        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0;
        for (const auto& idx : batches) {
            auto [x, y] = assemble_batch<T>(train_set, idx);
            const auto fwd = model_forward(model, params, x);
            const auto loss = cross_entropy_loss(fwd.probabilities, y);
            if (!std::isfinite(loss.loss) || !fwd.probabilities.all_finite())
                throw TrainingError("non-finite loss", batch_index);
            const auto grads = model_backward(model, params, fwd.cache, loss.grad_logits);
            params = sgd_step(std::move(params), grads, config.learning_rate);
            loss_sum += loss.loss * static_cast<double>(idx.size());
            correct += count_correct(fwd.probabilities, y);
            seen += idx.size();
            ++batch_index;
        }
        history.push_back({epoch + 1, loss_sum / static_cast<double>(seen),
                           static_cast<double>(correct) / static_cast<double>(seen)});
    }
    return history;
}

template <typename T>
TrainOutcome<T> train(const ModelConfig& model, const TrainConfig& config, const Dataset& dataset) {
    config.validate();
    model.validate();
    const auto counts = dataset.class_counts();
    if (counts[0] == 0 || counts[1] == 0) throw UsageError("dataset must contain both classes");

    auto [train_set, test_set] = split_dataset(dataset, config.train_fraction, derive_seed(config.seed, kSplitSeedPurpose));
    TrainOutcome<T> out;
    out.params = init_params<T>(model, config.seed);
    out.report.config = config;
    out.report.model = model;
    out.report.param_count = param_count(model);
    out.report.train_size = train_set.size();
    out.report.test_size = test_set.size();
    out.report.per_epoch = fit(model, config, train_set, out.params);
    const auto eval = evaluate(model, out.params, test_set, config.batch_size);
    out.report.test_loss = eval.loss;
    out.report.test_accuracy = eval.accuracy;
    return out;
}

#define EXPC_INSTANTIATE(T)                                                                                  \
    template LossResult<T> cross_entropy_loss(const Tensor<T>&, const Tensor<T>&);                            \
    template ModelParams<T> sgd_step(ModelParams<T>, const ModelGrads<T>&, double);                           \
    template std::pair<Tensor<T>, Tensor<T>> assemble_batch(const Dataset&, const std::vector<std::size_t>&); \
    template std::vector<std::size_t> argmax_rows(const Tensor<T>&);                                          \
    template EvalResult evaluate(const ModelConfig&, const ModelParams<T>&, const Dataset&, std::size_t);     \
    template std::vector<EpochMetrics> fit(const ModelConfig&, const TrainConfig&, const Dataset&,            \
                                           ModelParams<T>&);                                                  \
    template TrainOutcome<T> train(const ModelConfig&, const TrainConfig&, const Dataset&);

EXPC_INSTANTIATE(float)
EXPC_INSTANTIATE(double)

#undef EXPC_INSTANTIATE

}  // namespace expc
