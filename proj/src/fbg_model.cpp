#include "cdms/fbg_model.hpp"

#include <algorithm>
#include <cmath>

#include "cdms/errors.hpp"

namespace cdms {

namespace {

void check_node(std::size_t node) {
    if (node >= kFbgNodes) {
        throw ArgumentError("fbg node index " + std::to_string(node) + " out of range 0..3");
    }
}

}  // namespace

void FiberSpec::validate() const {
    if (!(photoelastic_coeff > 0.0 && photoelastic_coeff < 1.0)) {
        throw ConfigError("photoelastic coefficient must lie in (0, 1)");
    }
    for (double w : base_wavelengths) {
        if (!(w > 0.0)) {
            throw ConfigError("base wavelengths must be positive");
        }
    }
}

std::array<FiberSpec, 2> fiber_pair(const FiberSpec& base, double offset) {
    std::array<FiberSpec, 2> fibers{base, base};
    fibers[0].radial_offset = offset;
    fibers[1].radial_offset = -offset;
    return fibers;
}

std::array<double, kFbgNodes> node_strains(const CurvatureProfile& profile, const FiberSpec& fiber,
                                           const CdmConfig& config) {
    const double seg_len = config.segment_length();
    std::array<double, kFbgNodes> strains{};
    for (std::size_t j = 0; j < kFbgNodes; ++j) {
        const double s = config.fbg_node_arclengths[j];
        if (s < 0.0 || s > config.dexterous_length) {
            throw ConfigError("fbg node " + std::to_string(j + 1) + " lies outside the dexterous length");
        }
        const auto seg = std::min(static_cast<std::size_t>(s / seg_len), kSegments - 1);
        strains[j] = fiber.radial_offset * profile.kappa[seg];
    }
    return strains;
}

double wavelength_shift(double strain, double delta_t, const FiberSpec& fiber, std::size_t node) {
    check_node(node);
    return fiber.base_wavelengths[node] *
           ((1.0 - fiber.photoelastic_coeff) * strain + (fiber.thermal_expansion + fiber.thermo_optic) * delta_t);
}

double strain_from_shift(double delta_lambda, const FiberSpec& fiber, std::size_t node) {
    check_node(node);
    return delta_lambda / (fiber.base_wavelengths[node] * (1.0 - fiber.photoelastic_coeff));
}

WavelengthFrame common_mode_correct(std::span<const double, kFeatures> raw) {
    WavelengthFrame out;
    for (std::size_t j = 0; j < kFbgNodes; ++j) {
        const double mean = 0.5 * (raw[j] + raw[j + kFbgNodes]);
        out.shifts[j] = raw[j] - mean;
        out.shifts[j + kFbgNodes] = raw[j + kFbgNodes] - mean;
    }
    return out;
}

std::array<double, kFeatures> add_measurement_noise(std::span<const double, kFeatures> frame, double sigma,
                                                    std::mt19937_64& rng) {
    if (!(sigma >= 0.0)) {
        throw ArgumentError("noise sigma must be non-negative");
    }
    std::array<double, kFeatures> out{};
    std::copy(frame.begin(), frame.end(), out.begin());
    if (sigma == 0.0) {
        return out;
    }
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) {
        v += noise(rng);
    }
    return out;
}

std::array<double, kFeatures> add_measurement_noise(std::span<const double, kFeatures> frame, double sigma,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return add_measurement_noise(frame, sigma, rng);
}

std::array<double, kFeatures> raw_shifts(const CurvatureProfile& profile, const std::array<FiberSpec, 2>& fibers,
                                         const CdmConfig& config, double delta_t) {
    std::array<double, kFeatures> raw{};
    for (std::size_t f = 0; f < 2; ++f) {
        const auto strains = node_strains(profile, fibers[f], config);
        for (std::size_t j = 0; j < kFbgNodes; ++j) {
            raw[f * kFbgNodes + j] = wavelength_shift(strains[j], delta_t, fibers[f], j);
        }
    }
    return raw;
}

}  // namespace cdms
