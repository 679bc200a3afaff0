#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "expc/dataset.hpp"
#include "expc/model.hpp"

namespace expc {

enum class Precision { F32, F64 };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 128;
    std::size_t epochs = 5;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    Precision precision = Precision::F32;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double accuracy = 0.0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainReport {
    std::vector<EpochMetrics> per_epoch;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    TrainConfig config;
    ModelConfig model;
    std::uint64_t param_count = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
};

/// Tab separated: header `split\tepoch\tloss\tacc`, one `train` row per
/// epoch, then `test\t-\t<loss>\t<acc>`. Four decimals, accuracy as a fraction.
std::string format_report_tsv(const TrainReport& report);

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad_logits;  // (p - y) / n
};

inline constexpr double kLogClamp = 1e-7;

/// Mean categorical cross-entropy over rows with log clamping, plus the
/// fused softmax/cross-entropy gradient w.r.t. the logits.
template <typename T>
LossResult<T> cross_entropy_loss(const Tensor<T>& probs, const Tensor<T>& targets);

/// w <- w - lr * g for every scalar.
template <typename T>
ModelParams<T> sgd_step(ModelParams<T> params, const ModelGrads<T>& grads, double learning_rate);

/// Stratified seeded split. Per class, round(fraction * class size) samples
/// go to train; the remainder to test. Throws UsageError if a side is empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Seeded shuffle of [0, count) cut into batches; the last may be partial.
std::vector<std::vector<std::size_t>> batch_iterator(std::size_t count, std::size_t batch_size,
                                                     std::uint64_t epoch_seed);

/// Stacks samples into an (n,h,w,3) tensor and an (n,2) one-hot tensor.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> assemble_batch(const Dataset& dataset, const std::vector<std::size_t>& indices);

/// Index of the largest entry of each row, ties to the lower index.
template <typename T>
std::vector<std::size_t> argmax_rows(const Tensor<T>& probs);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

template <typename T>
EvalResult evaluate(const ModelConfig& config, const ModelParams<T>& params, const Dataset& test,
                    std::size_t batch_size = 128);

template <typename T>
struct TrainOutcome {
    ModelParams<T> params;
    TrainReport report;
};

/// Splits `dataset`, runs epochs x batches of forward, loss, backward and
/// SGD, then evaluates on the held-out side. Deterministic in its seeds.
template <typename T>
TrainOutcome<T> train(const ModelConfig& model, const TrainConfig& config, const Dataset& dataset);

/// Like `train`, but on an explicit train set and starting parameters; no
/// test evaluation. Used by `train` and by tests that bypass the split.
template <typename T>
std::vector<EpochMetrics> fit(const ModelConfig& model, const TrainConfig& config, const Dataset& train_set,
                              ModelParams<T>& params);

/// Seeds derived from the run seed, one per purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);
inline constexpr std::uint64_t kSplitSeedPurpose = 1;
inline constexpr std::uint64_t kEpochSeedPurpose = 100;

}  // namespace expc
