#include <doctest.h>

#include "expc/gradcheck.hpp"

using namespace expc;

TEST_CASE("relative error definition") {
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
    CHECK(relative_error(0.0, 0.0) == 0.0);
    CHECK(relative_error(1e-9, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("tiny configs pass") {
    const auto conv = gradient_check(tiny_conv_config(), 0);
    CHECK(conv.passed());
    CHECK(conv.layers.size() == 3);
    CHECK(conv.max_rel_error() < 1e-4);

    const auto dense = gradient_check(tiny_dense_config(), 0);
    CHECK(dense.passed());
    CHECK(dense.max_rel_error() < 1e-5);
}

TEST_CASE("zero-initialised model still passes") {
    for (const auto& config : {tiny_conv_config(), tiny_dense_config()}) {
        const auto report = gradient_check(config, zero_params<double>(config), 4);
        CHECK(report.passed());
    }
}

TEST_CASE("a perturbed backward pass is caught") {
    const auto report = gradient_check(tiny_conv_config(), 0, kGradCheckTolerance,
                                       [](ModelGrads<double>& g) { g.layers[1].weights[5] *= 1.01; });
    CHECK_FALSE(report.passed());
    REQUIRE(report.layers[1].offending.size() == 1);
    CHECK(report.layers[1].offending[0] == 5);
    CHECK(report.layers[0].passed(kGradCheckTolerance));
}

TEST_CASE("large configs are refused") {
    CHECK_THROWS_AS(gradient_check(ModelConfig::conv(8, {64, 64}), 0), UsageError);
}
