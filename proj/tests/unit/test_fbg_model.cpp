#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "cdms/errors.hpp"
#include "cdms/fbg_model.hpp"

using namespace cdms;

namespace {

FiberSpec fiber_at(double lambda) {
    FiberSpec f;
    f.base_wavelengths.fill(lambda);
    return f;
}

}  // namespace

TEST_CASE("straight profile has zero strain") {
    const auto e = node_strains(CurvatureProfile{}, FiberSpec{}, CdmConfig{});
    for (double v : e) CHECK(v == 0.0);
}

TEST_CASE("uniform curvature strains every node by r * kappa") {
    CurvatureProfile p;
    p.kappa.fill(0.040392);
    FiberSpec f;
    const auto e = node_strains(p, f, CdmConfig{});
    for (double v : e) CHECK(v == doctest::Approx(1.0098e-2).epsilon(1e-12));
    f.radial_offset = -0.25;
    for (double v : node_strains(p, f, CdmConfig{})) CHECK(v == doctest::Approx(-1.0098e-2).epsilon(1e-12));
}

TEST_CASE("node strain reads the segment containing the node") {
    const CdmConfig c;
    CurvatureProfile p;
    // 4 mm / (35/30 mm) = 3.43 -> segment index 3.
    p.kappa[3] = 0.1;
    const auto e = node_strains(p, FiberSpec{}, c);
    CHECK(e[0] == doctest::Approx(0.025));
    CHECK(e[1] == 0.0);
}

TEST_CASE("Bragg shift examples") {
    const auto f = fiber_at(1540.0);
    CHECK(wavelength_shift(0.0, 0.0, f, 0) == 0.0);
    CHECK(wavelength_shift(1e-3, 0.0, f, 0) == doctest::Approx(1540.0 * 0.78 * 1e-3).epsilon(1e-14));
    CHECK(wavelength_shift(1e-3, 0.0, f, 2) == doctest::Approx(1.20120).epsilon(1e-6));
    CHECK(wavelength_shift(0.0, 10.0, f, 1) == doctest::Approx(0.140910).epsilon(1e-6));
}

TEST_CASE("strain from shift inverts the Bragg shift") {
    const auto f = fiber_at(1540.0);
    CHECK(strain_from_shift(0.0, f, 0) == 0.0);
    CHECK(strain_from_shift(1.20120, f, 0) == doctest::Approx(1.0e-3).epsilon(1e-12));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-0.02, 0.02);
    const FiberSpec def;
    for (int i = 0; i < 1000; ++i) {
        const double e = d(rng);
        const std::size_t node = static_cast<std::size_t>(i % 4);
        const double back = strain_from_shift(wavelength_shift(e, 0.0, def, node), def, node);
        CHECK(std::abs(back - e) <= 1e-15 * std::abs(e));
    }
}

TEST_CASE("common-mode correction") {
    std::array<double, kFeatures> raw{0.5, 0, 0, 0, -0.3, 0, 0, 0};
    const auto out = common_mode_correct(raw);
    CHECK(out.shifts[0] == doctest::Approx(0.4));
    CHECK(out.shifts[4] == doctest::Approx(-0.4));

    std::array<double, kFeatures> zeros{};
    for (double v : common_mode_correct(zeros).shifts) CHECK(v == 0.0);
}

TEST_CASE("common-mode correction removes a uniform temperature change") {
    const CdmConfig c;
    const auto fibers = fiber_pair(FiberSpec{}, c.fiber_offset);
    CHECK(fibers[0].radial_offset == 0.25);
    CHECK(fibers[1].radial_offset == -0.25);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dd(-5.0, 5.0);
    std::uniform_real_distribution<double> dt(-30.0, 30.0);
    for (int i = 0; i < 50; ++i) {
        const auto p = free_bend_curvature(dd(rng), c);
        const auto a = common_mode_correct(raw_shifts(p, fibers, c, 0.0));
        const auto b = common_mode_correct(raw_shifts(p, fibers, c, dt(rng)));
        for (std::size_t j = 0; j < kFeatures; ++j) CHECK(std::abs(a.shifts[j] - b.shifts[j]) <= 1e-12);
    }
}

TEST_CASE("measurement noise") {
    std::array<double, kFeatures> frame{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(add_measurement_noise(frame, 0.0, 1) == frame);
    CHECK(add_measurement_noise(frame, 0.002, 42) == add_measurement_noise(frame, 0.002, 42));
    CHECK(add_measurement_noise(frame, 0.002, 42) != add_measurement_noise(frame, 0.002, 43));
    CHECK_THROWS_AS(add_measurement_noise(frame, -1.0, 1), ArgumentError);

    std::mt19937_64 rng(17);
    std::array<double, kFeatures> zero{};
    double sum = 0.0;
    double sum_sq = 0.0;
    const int draws = 100'000 / 8 + 1;
    for (int i = 0; i < draws; ++i) {
        for (double v : add_measurement_noise(zero, 0.002, rng)) {
            sum += v;
            sum_sq += v * v;
        }
    }
    const double n = draws * 8.0;
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(sd >= 0.00195);
    CHECK(sd <= 0.00205);
}

TEST_CASE("fiber validation") {
    FiberSpec f;
    CHECK_NOTHROW(f.validate());
    f.photoelastic_coeff = 1.5;
    CHECK_THROWS_AS(f.validate(), ConfigError);
}
