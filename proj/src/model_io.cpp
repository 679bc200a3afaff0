#include "expc/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace expc {

namespace {

constexpr char kMagic[4] = {'E', 'X', 'P', 'C'};
// Caps list lengths and extents while parsing untrusted headers.
constexpr std::uint32_t kMaxListLength = 1024;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t narrow(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) throw UsageError(std::string(what) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32(const char* what) {
        if (remaining() < 4) throw FormatError(std::string("model header truncated reading ") + what, pos_);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::vector<std::size_t> list(const char* what) {
        const std::size_t at = pos_;
        const std::uint32_t n = u32(what);
        if (n > kMaxListLength) throw FormatError(std::string("implausible ") + what + " length", at);
        std::vector<std::size_t> v(n);
        for (auto& x : v) x = u32(what);
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelConfig& config, const ModelParams<float>& params) {
    check_params(config, params);
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kModelFileVersion);
    put_u32(out, static_cast<std::uint32_t>(config.variant));
    put_u32(out, narrow(config.input_h, "input height"));
    put_u32(out, narrow(config.input_w, "input width"));
    put_u32(out, narrow(config.input_c, "input channels"));
    for (const auto* list : {&config.conv_channels, &config.conv_strides, &config.dense_hidden}) {
        put_u32(out, narrow(list->size(), "list length"));
        for (auto v : *list) put_u32(out, narrow(v, "list entry"));
    }
    out.reserve(out.size() + 4 * params.scalar_count());
    for (const auto& layer : params.layers) {
        for (float w : layer.weights.data()) put_f32(out, w);
        for (float b : layer.bias.data()) put_f32(out, b);
    }
    return out;
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad model file magic", 0);
    Reader r(bytes, 4);
    const std::uint32_t version = r.u32("version");
    if (version != kModelFileVersion) throw FormatError("unsupported model file version " + std::to_string(version), 4);

    LoadedModel m;
    const std::uint32_t variant = r.u32("variant");
    if (variant > static_cast<std::uint32_t>(Variant::Dense))
        throw FormatError("unknown variant tag " + std::to_string(variant), 8);
    m.config.variant = static_cast<Variant>(variant);
    m.config.input_h = r.u32("input height");
    m.config.input_w = r.u32("input width");
    m.config.input_c = r.u32("input channels");
    m.config.conv_channels = r.list("conv channels");
    m.config.conv_strides = r.list("conv strides");
    m.config.dense_hidden = r.list("dense hidden");
    try {
        m.config.validate();
    } catch (const UsageError& e) {
        throw FormatError(std::string("invalid model config: ") + e.what(), r.pos());
    }

    const std::uint64_t count = param_count(m.config);
    const std::size_t payload_at = r.pos();
    const std::uint64_t have = bytes.size() - payload_at;
    if (have != 4 * count)
        throw CorruptionError("model payload is " + std::to_string(have) + " bytes, expected " +
                              std::to_string(4 * count) + " for " + std::to_string(count) + " parameters");

    m.params = zero_params<float>(m.config);
    std::size_t at = payload_at;
    auto fill = [&](Tensor<float>& t) {
        for (auto& v : t.data()) {
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
            v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) throw CorruptionError("non-finite parameter at byte offset " + std::to_string(at));
            at += 4;
        }
    };
    for (auto& layer : m.params.layers) {
        fill(layer.weights);
        fill(layer.bias);
    }
    return m;
}

void save_model(const std::filesystem::path& path, const ModelConfig& config, const ModelParams<float>& params) {
    const auto bytes = serialize_model(config, params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace expc
