#include "expc/dataset.hpp"

#include <algorithm>
#include <cctype>

#include "expc/error.hpp"
#include "expc/image.hpp"

namespace expc {

std::string_view class_prefix(LabelClass label) { return label == LabelClass::Exposure ? "exp" : "pri"; }

LabelClass label_from_filename(std::string_view name) {
    const auto slash = name.find_last_of("/\\");
    const std::string_view base = slash == std::string_view::npos ? name : name.substr(slash + 1);
    if (base.size() >= 4 && base[3] == '.') {
        std::string prefix(base.substr(0, 3));
        std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (prefix == "exp") return LabelClass::Exposure;
        if (prefix == "pri") return LabelClass::Pristine;
    }
    throw LabelError("cannot label '" + std::string(name) + "': expected <pri|exp>.<number>");
}

std::array<float, kNumClasses> one_hot(LabelClass label) {
    std::array<float, kNumClasses> v{};
    v[static_cast<std::size_t>(label)] = 1.0f;
    return v;
}

std::array<std::size_t, kNumClasses> Dataset::class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
    return counts;
}

Dataset load_directory(const std::filesystem::path& dir, std::size_t target_size) {
    namespace fs = std::filesystem;
    if (target_size == 0) throw UsageError("target size must be positive");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".ppm" || ext == ".PPM") files.push_back(entry.path());
    }
    if (files.empty()) throw UsageError("no PPM images in " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    // Labels first so an ill-named file fails before any decoding work.
    std::vector<LabelClass> labels;
    labels.reserve(files.size());
    for (const auto& f : files) labels.push_back(label_from_filename(f.filename().string()));

    Dataset ds;
    ds.samples.resize(files.size());
    std::string first_error;
    std::ptrdiff_t first_error_at = -1;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(files.size()); ++i) {
        try {
            const RawImage raw = read_ppm(files[i]);
            auto& s = ds.samples[i];
            s.pixels = to_float_scaled(resize_bilinear(raw, target_size, target_size));
            s.label = labels[i];
            s.source_name = files[i].filename().string();
        } catch (const std::exception& e) {
#pragma omp critical(expc_load_error)
            if (first_error_at < 0 || i < first_error_at) {
                first_error_at = i;
                first_error = e.what();
            }
        }
    }
    if (first_error_at >= 0) throw IoError("failed to load " + files[first_error_at].string() + ": " + first_error);
    return ds;
}

}  // namespace expc
