#include "expc/model.hpp"

#include <cmath>
#include <random>

namespace expc {

std::string to_string(Variant v) { return v == Variant::Conv ? "conv" : "dense"; }

Variant parse_variant(const std::string& name) {
    if (name == "conv") return Variant::Conv;
    if (name == "dense") return Variant::Dense;
    throw UsageError("unknown architecture '" + name + "' (expected conv or dense)");
}

ModelConfig ModelConfig::conv(std::size_t size, std::vector<std::size_t> channels, std::size_t in_channels) {
    ModelConfig c;
    c.variant = Variant::Conv;
    c.input_h = c.input_w = size;
    c.input_c = in_channels;
    c.conv_channels = std::move(channels);
    // First layer keeps the resolution, every later one halves it.
    c.conv_strides.assign(c.conv_channels.size(), 2);
    if (!c.conv_strides.empty()) c.conv_strides[0] = 1;
    c.dense_hidden.clear();
    return c;
}

ModelConfig ModelConfig::dense(std::size_t size, std::vector<std::size_t> hidden, std::size_t in_channels) {
    ModelConfig c;
    c.variant = Variant::Dense;
    c.input_h = c.input_w = size;
    c.input_c = in_channels;
    c.conv_channels.clear();
    c.conv_strides.clear();
    c.dense_hidden = std::move(hidden);
    return c;
}

void ModelConfig::validate() const {
    if (input_h == 0 || input_w == 0 || input_c == 0) throw UsageError("input size extents must be positive");
    if (num_classes != 2) throw UsageError("num_classes must be 2");
    if (variant == Variant::Conv) {
        if (conv_channels.empty())
            throw UsageError("conv variant needs at least one convolution layer (FC-only config)");
        if (conv_strides.size() != conv_channels.size())
            throw UsageError("conv_strides and conv_channels lengths differ");
        for (auto c : conv_channels)
            if (c == 0) throw UsageError("convolution channel count must be positive");
        for (auto s : conv_strides)
            if (s == 0) throw UsageError("convolution stride must be positive");
    } else {
        for (auto h : dense_hidden)
            if (h == 0) throw UsageError("dense hidden width must be positive");
    }
}

std::vector<LayerSpec> layer_specs(const ModelConfig& config) {
    config.validate();
    std::vector<LayerSpec> specs;
    std::size_t features = 0;
    if (config.variant == Variant::Conv) {
        std::size_t ci = config.input_c;
        for (std::size_t l = 0; l < config.conv_channels.size(); ++l) {
            const std::size_t co = config.conv_channels[l];
            specs.push_back({LayerKind::Conv, Shape{kKernelSize, kKernelSize, ci, co}, Shape{co},
                             config.conv_strides[l], "conv" + std::to_string(l + 1)});
            ci = co;
        }
        features = ci;
    } else {
        std::size_t in = config.input_h * config.input_w * config.input_c;
        for (std::size_t l = 0; l < config.dense_hidden.size(); ++l) {
            const std::size_t out = config.dense_hidden[l];
            specs.push_back({LayerKind::Dense, Shape{in, out}, Shape{out}, 1, "dense" + std::to_string(l + 1)});
            in = out;
        }
        features = in;
    }
    specs.push_back({LayerKind::Dense, Shape{features, config.num_classes}, Shape{config.num_classes}, 1, "fc"});
    return specs;
}

std::uint64_t param_count(const ModelConfig& config) {
    std::uint64_t total = 0;
    for (const auto& s : layer_specs(config)) total += s.weights.count() + s.bias.count();
    return total;
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

template <typename T>
std::vector<T> ModelParams<T>::flatten() const {
    std::vector<T> out;
    out.reserve(scalar_count());
    for (const auto& l : layers) {
        out.insert(out.end(), l.weights.data().begin(), l.weights.data().end());
        out.insert(out.end(), l.bias.data().begin(), l.bias.data().end());
    }
    return out;
}

template <typename T>
ModelParams<T> zero_params(const ModelConfig& config) {
    ModelParams<T> p;
    for (const auto& s : layer_specs(config))
        p.layers.push_back({s.kind, Tensor<T>(s.weights), Tensor<T>(s.bias), s.stride});
    return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
    ModelParams<T> p = zero_params<T>(config);
    std::mt19937_64 rng(seed);
    for (auto& layer : p.layers) {
        const Shape& ws = layer.weights.shape();
        const std::size_t fan_in = layer.kind == LayerKind::Conv ? ws[0] * ws[1] * ws[2] : ws[0];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        for (auto& w : layer.weights.data()) w = static_cast<T>(dist(rng));
    }
    return p;
}

template <typename T>
void check_params(const ModelConfig& config, const ModelParams<T>& params) {
    const auto specs = layer_specs(config);
    if (specs.size() != params.layers.size())
        throw ShapeError("model has " + std::to_string(params.layers.size()) + " layers, config expects " +
                         std::to_string(specs.size()));
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const auto& s = specs[l];
        const auto& p = params.layers[l];
        if (p.kind != s.kind || p.weights.shape() != s.weights || p.bias.shape() != s.bias || p.stride != s.stride)
            throw ShapeError("layer " + s.name + " parameters do not match config (weights " +
                             p.weights.shape().to_string() + ", expected " + s.weights.to_string() + ")");
    }
}

template <typename T>
ForwardResult<T> model_forward(const ModelConfig& config, const ModelParams<T>& params, const Tensor<T>& batch) {
    check_params(config, params);
    if (batch.rank() != 4 || batch.dim(1) != config.input_h || batch.dim(2) != config.input_w ||
        batch.dim(3) != config.input_c)
        throw ShapeError("batch " + batch.shape().to_string() + " does not match model input (n," +
                         std::to_string(config.input_h) + "," + std::to_string(config.input_w) + "," +
                         std::to_string(config.input_c) + ")");
    ForwardCache<T> cache;
    cache.config = config;
    cache.batch = batch.dim(0);
    const std::size_t hidden = params.layers.size() - 1;

    Tensor<T> x = config.variant == Variant::Conv
                      ? batch
                      : reshape(batch, Shape{batch.dim(0), config.input_h * config.input_w * config.input_c});
    for (std::size_t l = 0; l < hidden; ++l) {
        const auto& layer = params.layers[l];
        Tensor<T> z = layer.kind == LayerKind::Conv ? conv2d_forward(x, layer) : dense_forward(x, layer);
        cache.layer_inputs.push_back(std::move(x));
        x = relu_forward(z);
        cache.pre_activations.push_back(std::move(z));
    }
    if (config.variant == Variant::Conv) x = global_avg_pool_forward(x);
    cache.logits = dense_forward(x, params.layers.back());
    cache.layer_inputs.push_back(std::move(x));

    ForwardResult<T> result;
    result.probabilities = softmax(cache.logits);
    result.cache = std::move(cache);
    return result;
}

template <typename T>
ModelGrads<T> model_backward(const ModelConfig& config, const ModelParams<T>& params, const ForwardCache<T>& cache,
                             const Tensor<T>& grad_logits) {
    check_params(config, params);
    const std::size_t hidden = params.layers.size() - 1;
    if (!(cache.config == config) || cache.layer_inputs.size() != hidden + 1 || cache.pre_activations.size() != hidden)
        throw UsageError("forward cache was produced by a different model configuration");
    if (grad_logits.shape() != Shape{cache.batch, config.num_classes})
        throw UsageError("grad_logits " + grad_logits.shape().to_string() + " does not match cached batch of " +
                         std::to_string(cache.batch));

    ModelGrads<T> grads;
    grads.layers.resize(params.layers.size());
    auto head = dense_backward(cache.layer_inputs.back(), params.layers.back(), grad_logits);
    grads.layers.back() = {LayerKind::Dense, std::move(head.weights), std::move(head.bias), 1};

    Tensor<T> g = std::move(head.input);
    if (config.variant == Variant::Conv && hidden > 0)
        g = global_avg_pool_backward(cache.pre_activations.back().shape(), g);
    for (std::size_t l = hidden; l-- > 0;) {
        const auto& layer = params.layers[l];
        g = relu_backward(cache.pre_activations[l], g);
        if (layer.kind == LayerKind::Conv) {
            auto cg = conv2d_backward(cache.layer_inputs[l], layer, g);
            grads.layers[l] = {LayerKind::Conv, std::move(cg.weights), std::move(cg.bias), layer.stride};
            g = std::move(cg.input);
        } else {
            auto dg = dense_backward(cache.layer_inputs[l], layer, g);
            grads.layers[l] = {LayerKind::Dense, std::move(dg.weights), std::move(dg.bias), 1};
            g = std::move(dg.input);
        }
    }
    return grads;
}

template struct ModelParams<float>;
template struct ModelParams<double>;

#define EXPC_INSTANTIATE(T)                                                                                    \
    template ModelParams<T> zero_params(const ModelConfig&);                                                    \
    template ModelParams<T> init_params(const ModelConfig&, std::uint64_t);                                     \
    template void check_params(const ModelConfig&, const ModelParams<T>&);                                      \
    template ForwardResult<T> model_forward(const ModelConfig&, const ModelParams<T>&, const Tensor<T>&);       \
    template ModelGrads<T> model_backward(const ModelConfig&, const ModelParams<T>&, const ForwardCache<T>&,    \
                                          const Tensor<T>&);

EXPC_INSTANTIATE(float)
EXPC_INSTANTIATE(double)

#undef EXPC_INSTANTIATE

}  // namespace expc
