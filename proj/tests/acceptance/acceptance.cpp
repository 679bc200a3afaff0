// Acceptance suite: one PASS/FAIL line per criterion.
//
//   expc_acceptance            run all criteria
//   expc_acceptance --only N   run criterion N (1..8)
//
// Exit status is 0 only if every selected criterion passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "expc/dataset.hpp"
#include "expc/gradcheck.hpp"
#include "expc/image.hpp"
#include "expc/layers.hpp"
#include "expc/model_io.hpp"
#include "expc/synth.hpp"
#include "expc/training.hpp"
#include "temp_dir.hpp"

using namespace expc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Runs the CLI in-process; throws with its stderr on a non-zero exit.
std::string cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) throw std::runtime_error("expc " + args[0] + " exited " + std::to_string(code) + ": " + err.str());
    return out.str();
}

// Parses "test\t-\t<loss>\t<acc>" out of a training report.
std::pair<double, double> test_row(const std::string& report) {
    const auto at = report.find("\ntest\t-\t");
    if (at == std::string::npos) throw std::runtime_error("report has no test row");
    double loss = 0.0, acc = 0.0;
    std::sscanf(report.c_str() + at + 8, "%lf\t%lf", &loss, &acc);
    return {loss, acc};
}

// The desk corpus shared by criteria 3 and 4.
void generate_desk_corpus(const fs::path& dir) {
    cli_run({"generate", "--out", dir.string(), "--count", "500", "--size", "32", "--seed", "42"});
}

std::string train_desk(const fs::path& data, const fs::path& out_dir, const std::string& split, const std::string& seed) {
    const auto model = (out_dir / ("model_" + split + "_" + seed + ".expc")).string();
    const auto report = (out_dir / ("report_" + split + "_" + seed + ".tsv")).string();
    cli_run({"train", "--data", data.string(), "--arch", "conv", "--input-size", "32", "--channels", "16,8", "--epochs",
             "5", "--batch", "128", "--split", split, "--seed", seed, "--out", model, "--report", report});
    return slurp(report);
}

Outcome gradient_fidelity() {
    Stopwatch clock;
    std::ostringstream log;
    const int code = cli::run_gradcheck(0, std::nullopt, log);
    const double secs = clock.seconds();

    double worst = 0.0;
    for (const auto& r : {layer_gradient_checks(0), gradient_check(tiny_conv_config(), 0),
                          gradient_check(tiny_dense_config(), 0)})
        worst = std::max(worst, r.max_rel_error());
    return {code == 0 && worst < 1e-4 && secs < 60.0,
            fmt("gradcheck exit %d, max rel err %.3e (< 1e-4), %.2f s (< 60 s)", code, worst, secs)};
}

Outcome overfit_sanity() {
    TempDir dir("acc_overfit");
    synth_generate(dir.path(), 16, 7, 32);
    const Dataset data = load_directory(dir.path(), 32);

    Stopwatch clock;
    const auto config = ModelConfig::conv(32, {8, 8});
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.batch_size = data.size();  // full batch: one step per epoch
    tc.epochs = 200;
    tc.seed = 7;
    auto params = init_params<float>(config, tc.seed);
    fit(config, tc, data, params);
    const auto r = evaluate(config, params, data);
    const double secs = clock.seconds();
    return {r.accuracy == 1.0 && r.loss < 0.05 && secs < 120.0,
            fmt("%zu samples, 200 steps: train acc %.4f (= 1), loss %.4f (< 0.05), %.1f s (< 120 s)", data.size(),
                r.accuracy, r.loss, secs)};
}

Outcome desk_experiment() {
    TempDir dir("acc_desk");
    Stopwatch clock;
    generate_desk_corpus(dir / "data");
    const auto report = train_desk(dir / "data", dir.path(), "0.8", "42");
    const double secs = clock.seconds();
    const auto [loss, acc] = test_row(report);
    return {acc >= 0.95 && secs < 600.0,
            fmt("test acc %.4f (>= 0.95), test loss %.4f, %.1f s (< 600 s)", acc, loss, secs)};
}

Outcome split_trend() {
    TempDir dir("acc_trend");
    generate_desk_corpus(dir / "data");
    const char* fractions[] = {"0.01", "0.1", "0.5", "0.8"};
    const char* seeds[] = {"1", "2", "3"};
    std::vector<double> means;
    for (const char* f : fractions) {
        double sum = 0.0;
        for (const char* s : seeds) sum += test_row(train_desk(dir / "data", dir.path(), f, s)).second;
        means.push_back(sum / 3.0);
    }
    bool monotone = true;
    std::string detail = "mean test acc";
    for (std::size_t i = 0; i < means.size(); ++i) {
        detail += fmt(" %s:%.4f", fractions[i], means[i]);
        if (i > 0 && means[i] < means[i - 1] - 0.02) monotone = false;
    }
    return {monotone, detail + " (non-decreasing within 0.02)"};
}

Outcome parameter_counts() {
    const ModelConfig conv;  // 128x128x3, channels [768, 384]
    const auto dense = ModelConfig::dense(128, {768});
    // Oracle: materialise every learnable and count the scalars.
    const auto conv_flat = zero_params<float>(conv).flatten().size();
    const auto dense_flat = zero_params<float>(dense).flatten().size();
    const bool conv_ok = param_count(conv) == 2'676'866 && conv_flat == 2'676'866;
    const bool dense_ok = param_count(dense) == 37'751'810 && dense_flat == 37'751'810;
    return {conv_ok && dense_ok,
            fmt("conv %llu, flattened %zu (expect 2676866) %s; dense %llu, flattened %zu (expect 37751810) %s",
                static_cast<unsigned long long>(param_count(conv)), conv_flat, conv_ok ? "ok" : "MISMATCH",
                static_cast<unsigned long long>(param_count(dense)), dense_flat, dense_ok ? "ok" : "MISMATCH")};
}

Outcome determinism() {
    TempDir dir("acc_determinism");
    generate_desk_corpus(dir / "data");
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    const auto ra = train_desk(dir / "data", dir / "a", "0.8", "42");
    const auto rb = train_desk(dir / "data", dir / "b", "0.8", "42");
    const auto ma = slurp(dir / "a" / "model_0.8_42.expc");
    const auto mb = slurp(dir / "b" / "model_0.8_42.expc");
    const bool same_model = !ma.empty() && ma == mb;
    const bool same_report = !ra.empty() && ra == rb;
    return {same_model && same_report, fmt("model files %s (%zu bytes), reports %s", same_model ? "identical" : "DIFFER",
                                           ma.size(), same_report ? "identical" : "DIFFER")};
}

Outcome round_trips() {
    TempDir dir("acc_roundtrip");
    std::mt19937_64 rng(2024);
    std::size_t ppm_ok = 0, model_ok = 0;
    for (int i = 0; i < 100; ++i) {
        RawImage img(1 + rng() % 64, 1 + rng() % 64);
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
        const auto path = dir / ("img" + std::to_string(i) + ".ppm");
        write_ppm(path, img);
        if (decode_ppm(encode_ppm(img)) == img && read_ppm(path) == img) ++ppm_ok;
    }
    for (int i = 0; i < 100; ++i) {
        const std::size_t size = 4 + rng() % 12;
        ModelConfig config;
        if (rng() % 2) {
            std::vector<std::size_t> ch(1 + rng() % 3);
            for (auto& c : ch) c = 1 + rng() % 8;
            config = ModelConfig::conv(size, ch, 1 + rng() % 3);
        } else {
            std::vector<std::size_t> hidden(rng() % 3);
            for (auto& h : hidden) h = 1 + rng() % 16;
            config = ModelConfig::dense(size, hidden, 1 + rng() % 3);
        }
        const auto params = init_params<float>(config, rng());
        const auto path = dir / ("m" + std::to_string(i) + ".expc");
        save_model(path, config, params);
        const auto loaded = load_model(path);
        if (loaded.config == config && loaded.params == params &&
            serialize_model(loaded.config, loaded.params) == serialize_model(config, params))
            ++model_ok;
    }
    return {ppm_ok == 100 && model_ok == 100, fmt("PPM %zu/100 identical, model file %zu/100 identical", ppm_ok, model_ok)};
}

Outcome loss_softmax_analytics() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> logit(-20.0, 20.0), shift(-50.0, 50.0);

    // Uniform prediction against random one-hot targets.
    double worst_ln2 = 0.0;
    for (std::size_t n = 1; n <= 64; n *= 2) {
        Tensor<float> probs(Shape{n, 2}, 0.5f), targets(Shape{n, 2});
        for (std::size_t r = 0; r < n; ++r) targets[2 * r + rng() % 2] = 1.0f;
        worst_ln2 = std::max(worst_ln2, std::abs(cross_entropy_loss(probs, targets).loss - std::log(2.0)));
    }
    // and a zero-initialised model, whose output is exactly uniform
    {
        const auto config = ModelConfig::conv(8, {4});
        Tensor<float> batch(Shape{4, 8, 8, 3}, 0.3f), targets(Shape{4, 2});
        for (std::size_t r = 0; r < 4; ++r) targets[2 * r + r % 2] = 1.0f;
        const auto p = model_forward(config, zero_params<float>(config), batch).probabilities;
        worst_ln2 = std::max(worst_ln2, std::abs(cross_entropy_loss(p, targets).loss - std::log(2.0)));
    }

    double worst_sum = 0.0, worst_shift = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        Tensor<float> z(Shape{16, 2});
        for (auto& v : z.data()) v = static_cast<float>(logit(rng));
        const auto p = softmax(z);
        for (std::size_t r = 0; r < 16; ++r)
            worst_sum = std::max(worst_sum, std::abs(double(p[2 * r]) + double(p[2 * r + 1]) - 1.0));

        Tensor<double> zd(Shape{16, 2}), shifted(Shape{16, 2});
        for (std::size_t r = 0; r < 16; ++r) {
            const double c = shift(rng);
            for (std::size_t k = 0; k < 2; ++k) {
                zd[2 * r + k] = logit(rng);
                shifted[2 * r + k] = zd[2 * r + k] + c;
            }
        }
        const auto a = softmax(zd), b = softmax(shifted);
        for (std::size_t i = 0; i < a.size(); ++i) worst_shift = std::max(worst_shift, std::abs(a[i] - b[i]));
    }
    return {worst_ln2 <= 1e-6 && worst_sum <= 1e-5 && worst_shift <= 1e-6,
            fmt("|loss - ln2| %.2e (<= 1e-6), |row sum - 1| %.2e (<= 1e-5), shift diff %.2e (<= 1e-6)", worst_ln2,
                worst_sum, worst_shift)};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {"gradient fidelity", gradient_fidelity},     {"overfit sanity", overfit_sanity},
        {"end-to-end desk experiment", desk_experiment}, {"split-size trend", split_trend},
        {"parameter counts", parameter_counts},       {"determinism", determinism},
        {"format round trips", round_trips},          {"loss/softmax analytics", loss_softmax_analytics},
    };

    std::size_t only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = std::strtoul(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 2;
        }
    }
    if (only > criteria.size()) {
        std::fprintf(stderr, "no criterion %zu (1..%zu)\n", only, criteria.size());
        return 2;
    }

    std::size_t failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && only != i + 1) continue;
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        ++ran;
        if (!o.pass) ++failed;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
