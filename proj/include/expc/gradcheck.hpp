#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "expc/model.hpp"

namespace expc {

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr std::size_t kGradCheckMaxParams = 5000;

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Central difference step for a coordinate currently equal to x.
inline double fd_step(double x) { return 1e-5 * (std::abs(x) + 1.0); }

struct LayerCheck {
    explicit LayerCheck(std::string n = {}) : name(std::move(n)) {}

    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::vector<std::size_t> offending;  // flat coordinates above tolerance

    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

struct GradCheckReport {
    std::string subject;
    std::vector<LayerCheck> layers;
    double tolerance = kGradCheckTolerance;

    double max_rel_error() const;
    bool passed() const;
};

using GradientTamper = std::function<void(ModelGrads<double>&)>;

/// Full-model check in 64-bit: a seeded batch with seeded one-hot targets,
/// cross-entropy loss, every parameter compared against central
/// differences. Throws UsageError above kGradCheckMaxParams.
GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed,
                               double tolerance = kGradCheckTolerance, const GradientTamper& tamper = {});

/// Same, starting from explicit parameters.
GradCheckReport gradient_check(const ModelConfig& config, const ModelParams<double>& params, std::uint64_t seed,
                               double tolerance = kGradCheckTolerance, const GradientTamper& tamper = {});

/// Standalone checks of each layer op against L = sum(out * R) for a
/// seeded random R: conv2d (stride 1 and 2), ReLU, global average pooling,
/// dense, and softmax + cross-entropy.
GradCheckReport layer_gradient_checks(std::uint64_t seed, double tolerance = kGradCheckTolerance);

/// The tiny configurations used by the CLI.
ModelConfig tiny_conv_config();
ModelConfig tiny_dense_config();

}  // namespace expc
