#include "expc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "expc/error.hpp"

namespace expc {

namespace {

std::mt19937_64 stream_for(std::uint64_t seed, std::size_t index, std::uint32_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), salt};
    return std::mt19937_64(seq);
}

std::string numbered(const char* cls, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s.%04zu.ppm", cls, n);
    return buf;
}

}  // namespace

RawImage apply_exposure(const RawImage& image, double ev) {
    const double gain = std::exp2(ev);
    RawImage out = image;
    for (auto& v : out.pixels) v = static_cast<std::uint8_t>(std::clamp(std::lround(v * gain), 0L, 255L));
    return out;
}

RawImage synth_scene(std::uint64_t seed, std::size_t index, std::size_t size) {
    if (size < 8) throw UsageError("synthetic image size must be at least 8");
    auto rng = stream_for(seed, index, 0);
    // Scenes are kept in the mid tones so a well-exposed frame rarely clips.
    std::uniform_real_distribution<double> tone(50.0, 205.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double angle = unit(rng) * 2.0 * 3.14159265358979323846;
    const double dx = std::cos(angle), dy = std::sin(angle);
    double from[3], to[3];
    for (int c = 0; c < 3; ++c) {
        from[c] = tone(rng);
        to[c] = tone(rng);
    }
    const double n = static_cast<double>(size);
    std::vector<double> canvas(size * size * 3);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            // Projection of the centred pixel onto the gradient direction, in [0,1].
            const double t = 0.5 + ((x + 0.5) / n - 0.5) * dx * 0.7071 + ((y + 0.5) / n - 0.5) * dy * 0.7071;
            for (int c = 0; c < 3; ++c) canvas[(y * size + x) * 3 + c] = from[c] + (to[c] - from[c]) * t;
        }

    std::uniform_int_distribution<int> rect_count(2, 5);
    const int rects = rect_count(rng);
    for (int r = 0; r < rects; ++r) {
        const auto x0 = static_cast<std::size_t>(unit(rng) * n * 0.8);
        const auto y0 = static_cast<std::size_t>(unit(rng) * n * 0.8);
        const auto w = std::max<std::size_t>(2, static_cast<std::size_t>((0.1 + 0.4 * unit(rng)) * n));
        const auto h = std::max<std::size_t>(2, static_cast<std::size_t>((0.1 + 0.4 * unit(rng)) * n));
        const double alpha = 0.5 + 0.5 * unit(rng);
        double color[3];
        for (double& c : color) c = tone(rng);
        for (std::size_t y = y0; y < std::min(size, y0 + h); ++y)
            for (std::size_t x = x0; x < std::min(size, x0 + w); ++x)
                for (int c = 0; c < 3; ++c) {
                    double& v = canvas[(y * size + x) * 3 + c];
                    v = (1 - alpha) * v + alpha * color[c];
                }
    }

    std::normal_distribution<double> noise(0.0, 3.0 + 7.0 * unit(rng));
    RawImage img(size, size);
    for (std::size_t i = 0; i < canvas.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(canvas[i] + noise(rng)), 0L, 255L));
    return img;
}

std::vector<SynthEntry> synth_generate(const std::filesystem::path& out_dir, std::size_t count_per_class,
                                       std::uint64_t seed, std::size_t size) {
    if (size < 8) throw UsageError("synthetic image size must be at least 8");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw IoError("cannot create output directory " + out_dir.string());

    std::vector<SynthEntry> manifest;
    manifest.reserve(2 * count_per_class);
    for (std::size_t i = 0; i < count_per_class; ++i) {
        const RawImage pristine = synth_scene(seed, i, size);
        auto rng = stream_for(seed, i, 1);
        std::uniform_real_distribution<double> magnitude(kMinExposureShift, kMaxExposureShift);
        std::bernoulli_distribution brighter(0.5);
        double ev = magnitude(rng);
        if (!brighter(rng)) ev = -ev;
        // Round to what the manifest records so the file is reproducible from it.
        ev = std::round(ev * 1e6) / 1e6;

        const std::string pri = numbered("pri", i), exp = numbered("exp", i);
        write_ppm(out_dir / pri, pristine);
        write_ppm(out_dir / exp, apply_exposure(pristine, ev));
        manifest.push_back({pri, "pri", 0.0});
        manifest.push_back({exp, "exp", ev});
    }

    std::ofstream tsv(out_dir / "manifest.tsv", std::ios::trunc);
    if (!tsv) throw IoError("cannot write manifest in " + out_dir.string());
    tsv << "name\tclass\tev\n";
    char ev_text[64];
    for (const auto& e : manifest) {
        std::snprintf(ev_text, sizeof ev_text, "%.6f", e.ev);
        tsv << e.name << '\t' << e.cls << '\t' << ev_text << '\n';
    }
    if (!tsv) throw IoError("short write to manifest in " + out_dir.string());
    return manifest;
}

}  // namespace expc
