#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "expc/gradcheck.hpp"
#include "expc/model.hpp"

namespace expc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Reference sizes for context only; these networks are not built here.
inline constexpr std::uint64_t kAlexNetParams = 61'000'000;
inline constexpr std::uint64_t kResNet50Params = 25'600'000;

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The gradcheck subcommand body; `tamper` lets tests corrupt the analytic
/// gradients to prove the harness notices.
int run_gradcheck(std::uint64_t seed, std::optional<Variant> arch, std::ostream& out,
                  const GradientTamper& tamper = {});

}  // namespace expc::cli
