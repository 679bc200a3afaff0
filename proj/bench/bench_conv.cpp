// Serial reference vs OpenMP convolution, forward and backward, plus the
// matmul behind the dense layers. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "expc/conv.hpp"
#include "expc/tensor.hpp"

using namespace expc;

namespace {

Tensor<float> random_tensor(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    Tensor<float> t(shape);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

// args: spatial size, in channels, out channels, stride
struct Problem {
    Tensor<float> input, weights, bias, grad_out;
    std::size_t stride;

    explicit Problem(const benchmark::State& state)
        : input(random_tensor(Shape{8, std::size_t(state.range(0)), std::size_t(state.range(0)),
                                    std::size_t(state.range(1))},
                              1)),
          weights(random_tensor(Shape{3, 3, std::size_t(state.range(1)), std::size_t(state.range(2))}, 2)),
          bias(random_tensor(Shape{std::size_t(state.range(2))}, 3)),
          stride(std::size_t(state.range(3))) {
        const auto g = ConvGeometry::same(input.dim(1), input.dim(2), stride);
        grad_out = random_tensor(Shape{8, g.out_h, g.out_w, weights.dim(3)}, 4);
    }

    double flops() const { return 2.0 * double(grad_out.size()) * 9.0 * double(input.dim(3)); }
};

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({32, 3, 16, 1})->Args({32, 16, 8, 2})->Args({32, 16, 32, 1})->Args({16, 64, 64, 2});
    b->Unit(benchmark::kMillisecond);
}

void BM_conv_forward_reference(benchmark::State& state) {
    Problem p(state);
    for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d_forward(p.input, p.weights, p.bias, p.stride));
    state.counters["FLOP/s"] = benchmark::Counter(p.flops(), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_conv_forward_parallel(benchmark::State& state) {
    Problem p(state);
    for (auto _ : state) benchmark::DoNotOptimize(parallel::conv2d_forward(p.input, p.weights, p.bias, p.stride));
    state.counters["FLOP/s"] = benchmark::Counter(p.flops(), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_conv_backward_reference(benchmark::State& state) {
    Problem p(state);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::conv2d_backward(p.input, p.weights, p.stride, p.grad_out));
    state.counters["FLOP/s"] = benchmark::Counter(2 * p.flops(), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_conv_backward_parallel(benchmark::State& state) {
    Problem p(state);
    for (auto _ : state)
        benchmark::DoNotOptimize(parallel::conv2d_backward(p.input, p.weights, p.stride, p.grad_out));
    state.counters["FLOP/s"] = benchmark::Counter(2 * p.flops(), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_matmul(benchmark::State& state) {
    const auto n = std::size_t(state.range(0));
    const auto a = random_tensor(Shape{128, n}, 5);
    const auto b = random_tensor(Shape{n, 64}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.counters["FLOP/s"] =
        benchmark::Counter(2.0 * 128 * double(n) * 64, benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK(BM_conv_forward_reference)->Apply(conv_args);
BENCHMARK(BM_conv_forward_parallel)->Apply(conv_args);
BENCHMARK(BM_conv_backward_reference)->Apply(conv_args);
BENCHMARK(BM_conv_backward_parallel)->Apply(conv_args);
BENCHMARK(BM_matmul)->Arg(256)->Arg(3072)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
