#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "expc/dataset.hpp"
#include "expc/image.hpp"
#include "expc/synth.hpp"
#include "temp_dir.hpp"

using namespace expc;

namespace {

double mean_of(const RawImage& img) {
    double s = 0.0;
    for (auto p : img.pixels) s += p;
    return s / double(img.pixels.size());
}

}  // namespace

TEST_CASE("apply_exposure") {
    RawImage img(1, 4, 0);
    img.pixels = {0, 10, 100, 200, 255, 1, 63, 64, 127, 128, 3, 5};
    const auto brighter = apply_exposure(img, 1.0);
    CHECK(brighter.pixels == std::vector<std::uint8_t>{0, 20, 200, 255, 255, 2, 126, 128, 254, 255, 6, 10});
    const auto darker = apply_exposure(img, -2.0);
    CHECK(darker.pixels == std::vector<std::uint8_t>{0, 3, 25, 50, 64, 0, 16, 16, 32, 32, 1, 1});
    CHECK(apply_exposure(img, 0.0) == img);
}

TEST_CASE("scenes are seeded") {
    CHECK(synth_scene(1, 0, 16) == synth_scene(1, 0, 16));
    CHECK_FALSE(synth_scene(1, 0, 16) == synth_scene(2, 0, 16));
    CHECK_FALSE(synth_scene(1, 0, 16) == synth_scene(1, 1, 16));
    CHECK(synth_scene(1, 3, 24).height == 24);
    CHECK_THROWS_AS(synth_scene(1, 0, 4), UsageError);
}

TEST_CASE("generated corpus") {
    TempDir a("synth_a"), b("synth_b");
    const auto rows = synth_generate(a.path(), 12, 5, 16);
    const auto rows_b = synth_generate(b.path(), 12, 5, 16);
    REQUIRE(rows.size() == 24);

    std::size_t pri = 0, exp = 0;
    double gap = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        CHECK(r.name == rows_b[i].name);
        CHECK(r.ev == rows_b[i].ev);
        CHECK(read_ppm(a / r.name) == read_ppm(b / r.name));
        // every file labels through the dataset rules
        const auto label = label_from_filename(r.name);
        if (r.cls == "pri") {
            ++pri;
            CHECK(label == LabelClass::Pristine);
            CHECK(r.ev == 0.0);
        } else {
            ++exp;
            CHECK(label == LabelClass::Exposure);
            CHECK(std::abs(r.ev) >= kMinExposureShift);
            CHECK(std::abs(r.ev) <= kMaxExposureShift);
            // the shifted image is reproducible from its twin and the logged EV
            const auto twin = read_ppm(a / ("pri" + r.name.substr(3)));
            const auto shifted = read_ppm(a / r.name);
            CHECK(apply_exposure(twin, r.ev) == shifted);
            gap += std::abs(mean_of(shifted) - mean_of(twin));
        }
    }
    CHECK(pri == 12);
    CHECK(exp == 12);
    CHECK(gap / 12.0 > 10.0);

    // the manifest carries the same rows
    std::ifstream tsv(a / "manifest.tsv");
    std::string line;
    std::getline(tsv, line);
    CHECK(line == "name\tclass\tev");
    std::size_t n = 0;
    while (std::getline(tsv, line)) {
        std::istringstream fields(line);
        std::string name, cls;
        double ev = 0.0;
        fields >> name >> cls >> ev;
        REQUIRE(n < rows.size());
        CHECK(name == rows[n].name);
        CHECK(cls == rows[n].cls);
        CHECK(ev == rows[n].ev);
        ++n;
    }
    CHECK(n == rows.size());

    const auto d = load_directory(a.path(), 16);
    CHECK(d.class_counts() == std::array<std::size_t, 2>{12, 12});

    TempDir c("synth_c");
    const auto other = synth_generate(c.path(), 12, 6, 16);
    CHECK_FALSE(read_ppm(c / other[0].name) == read_ppm(a / rows[0].name));
}
