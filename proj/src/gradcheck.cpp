#include "expc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "expc/training.hpp"

namespace expc {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
    double m = 0.0;
    for (const auto& l : layers) m = std::max(m, l.max_rel_error);
    return m;
}

bool GradCheckReport::passed() const {
    return std::all_of(layers.begin(), layers.end(), [&](const LayerCheck& l) { return l.passed(tolerance); });
}

namespace {

// Perturbs every coordinate of `values` in place, evaluating `loss` on
// both sides, and compares with `analytic`.
void check_coordinates(LayerCheck& check, std::span<double> values, std::span<const double> analytic,
                       const std::function<double()>& loss, double tolerance) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        const double h = fd_step(saved);
        values[i] = saved + h;
        const double up = loss();
        values[i] = saved - h;
        const double down = loss();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double err = relative_error(analytic[i], numeric);
        check.max_rel_error = std::max(check.max_rel_error, err);
        if (!(err < tolerance)) check.offending.push_back(i);
        ++check.checked;
    }
}

Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor<double> t(shape);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

ModelConfig tiny_conv_config() {
    ModelConfig c = ModelConfig::conv(8, {4, 3}, 1);
    return c;
}

ModelConfig tiny_dense_config() { return ModelConfig::dense(4, {5}, 1); }

GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed, double tolerance,
                               const GradientTamper& tamper) {
    return gradient_check(config, init_params<double>(config, seed), seed, tolerance, tamper);
}

GradCheckReport gradient_check(const ModelConfig& config, const ModelParams<double>& start, std::uint64_t seed,
                               double tolerance, const GradientTamper& tamper) {
    const auto count = param_count(config);
    if (count > kGradCheckMaxParams)
        throw UsageError("gradient check needs at most " + std::to_string(kGradCheckMaxParams) + " parameters, config has " +
                         std::to_string(count));
    check_params(config, start);

    constexpr std::size_t kBatch = 2;
    std::mt19937_64 rng(derive_seed(seed, 7));
    const Tensor<double> x =
        random_tensor(Shape{kBatch, config.input_h, config.input_w, config.input_c}, rng, 0.0, 1.0);
    Tensor<double> y(Shape{kBatch, kNumClasses});
    std::bernoulli_distribution coin(0.5);
    for (std::size_t b = 0; b < kBatch; ++b) y[b * kNumClasses + (coin(rng) ? 1 : 0)] = 1.0;

    ModelParams<double> params = start;
    const auto fwd = model_forward(config, params, x);
    const auto loss = cross_entropy_loss(fwd.probabilities, y);
    auto grads = model_backward(config, params, fwd.cache, loss.grad_logits);
    if (tamper) tamper(grads);

    // The clamp in the loss is not differentiable; it never binds for these
    // small random models, so the unclamped value is used for the probe.
    auto probe = [&]() {
        const auto p = model_forward(config, params, x).probabilities;
        double total = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == 1.0) total -= std::log(p[i]);
        return total / static_cast<double>(kBatch);
    };

    GradCheckReport report;
    report.subject = to_string(config.variant) + " model";
    report.tolerance = tolerance;
    const auto specs = layer_specs(config);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerCheck check;
        check.name = specs[l].name;
        auto& layer = params.layers[l];
        check_coordinates(check, layer.weights.data(), grads.layers[l].weights.data(), probe, tolerance);
        const std::size_t weight_count = layer.weights.size();
        LayerCheck bias_part;
        check_coordinates(bias_part, layer.bias.data(), grads.layers[l].bias.data(), probe, tolerance);
        check.checked += bias_part.checked;
        check.max_rel_error = std::max(check.max_rel_error, bias_part.max_rel_error);
        for (auto i : bias_part.offending) check.offending.push_back(weight_count + i);
        report.layers.push_back(std::move(check));
    }
    return report;
}

GradCheckReport layer_gradient_checks(std::uint64_t seed, double tolerance) {
    std::mt19937_64 rng(derive_seed(seed, 11));
    GradCheckReport report;
    report.subject = "layer ops";
    report.tolerance = tolerance;

    for (std::size_t stride : {std::size_t{1}, std::size_t{2}}) {
        LayerParams<double> conv{LayerKind::Conv, random_tensor(Shape{3, 3, 2, 2}, rng, -1.0, 1.0),
                                 random_tensor(Shape{2}, rng, -0.5, 0.5), stride};
        Tensor<double> input = random_tensor(Shape{1, 5, 5, 2}, rng, -1.0, 1.0);
        const auto out_shape = conv2d_forward(input, conv).shape();
        const Tensor<double> r = random_tensor(out_shape, rng, -1.0, 1.0);
        const auto g = conv2d_backward(input, conv, r);
        auto probe = [&]() { return dot(conv2d_forward(input, conv), r); };
        const std::string base = "conv2d/s" + std::to_string(stride);
        LayerCheck ci{base + ".input"}, cw{base + ".weights"}, cb{base + ".bias"};
        check_coordinates(ci, input.data(), g.input.data(), probe, tolerance);
        check_coordinates(cw, conv.weights.data(), g.weights.data(), probe, tolerance);
        check_coordinates(cb, conv.bias.data(), g.bias.data(), probe, tolerance);
        report.layers.insert(report.layers.end(), {ci, cw, cb});
    }
    {
        // Keep every input well away from the kink at 0.
        Tensor<double> input = random_tensor(Shape{2, 3, 3, 2}, rng, 0.1, 1.0);
        std::bernoulli_distribution coin(0.5);
        for (auto& v : input.data())
            if (coin(rng)) v = -v;
        const Tensor<double> r = random_tensor(input.shape(), rng, -1.0, 1.0);
        const auto g = relu_backward(input, r);
        LayerCheck c{"relu"};
        check_coordinates(c, input.data(), g.data(), [&]() { return dot(relu_forward(input), r); }, tolerance);
        report.layers.push_back(c);
    }
    {
        Tensor<double> input = random_tensor(Shape{2, 3, 4, 3}, rng, -1.0, 1.0);
        const Tensor<double> r = random_tensor(Shape{2, 3}, rng, -1.0, 1.0);
        const auto g = global_avg_pool_backward(input.shape(), r);
        LayerCheck c{"global_avg_pool"};
        check_coordinates(c, input.data(), g.data(), [&]() { return dot(global_avg_pool_forward(input), r); },
                          tolerance);
        report.layers.push_back(c);
    }
    {
        LayerParams<double> dense{LayerKind::Dense, random_tensor(Shape{4, 3}, rng, -1.0, 1.0),
                                  random_tensor(Shape{3}, rng, -0.5, 0.5), 1};
        Tensor<double> input = random_tensor(Shape{3, 4}, rng, -1.0, 1.0);
        const Tensor<double> r = random_tensor(Shape{3, 3}, rng, -1.0, 1.0);
        const auto g = dense_backward(input, dense, r);
        auto probe = [&]() { return dot(dense_forward(input, dense), r); };
        LayerCheck ci{"dense.input"}, cw{"dense.weights"}, cb{"dense.bias"};
        check_coordinates(ci, input.data(), g.input.data(), probe, tolerance);
        check_coordinates(cw, dense.weights.data(), g.weights.data(), probe, tolerance);
        check_coordinates(cb, dense.bias.data(), g.bias.data(), probe, tolerance);
        report.layers.insert(report.layers.end(), {ci, cw, cb});
    }
    {
        Tensor<double> logits = random_tensor(Shape{3, 2}, rng, -2.0, 2.0);
        Tensor<double> y(Shape{3, 2});
        for (std::size_t row = 0; row < 3; ++row) y[row * 2 + row % 2] = 1.0;
        const auto analytic = cross_entropy_loss(softmax(logits), y).grad_logits;
        LayerCheck c{"softmax_cross_entropy"};
        check_coordinates(c, logits.data(), analytic.data(),
                          [&]() { return cross_entropy_loss(softmax(logits), y).loss; }, tolerance);
        report.layers.push_back(c);
    }
    return report;
}

}  // namespace expc
