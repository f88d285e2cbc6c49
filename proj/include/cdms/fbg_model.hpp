#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>

#include "cdms/kinematics.hpp"

namespace cdms {

inline constexpr std::size_t kFeatures = 2 * kFbgNodes;

// Optical constants of one fiber. radial_offset is the signed distance of the
// fiber from the sensor-assembly neutral axis (mm).
struct FiberSpec {
    std::array<double, kFbgNodes> base_wavelengths{1532.0, 1542.0, 1552.0, 1562.0};
    double photoelastic_coeff = 0.22;
    double thermal_expansion = 0.55e-6;
    double thermo_optic = 8.6e-6;
    double radial_offset = 0.25;

    void validate() const;
};

// The two fibers of the sensor assembly: `base` at +offset and its mirror at -offset.
std::array<FiberSpec, 2> fiber_pair(const FiberSpec& base, double offset);

// Mode-corrected shifts ordered (fiber 1 nodes 1-4, fiber 2 nodes 1-4), nm.
struct WavelengthFrame {
    std::array<double, kFeatures> shifts{};

    friend bool operator==(const WavelengthFrame&, const WavelengthFrame&) = default;
};

std::array<double, kFbgNodes> node_strains(const CurvatureProfile& profile, const FiberSpec& fiber,
                                           const CdmConfig& config);

// Bragg shift for a given axial strain and temperature change. `node` is 0-based.
double wavelength_shift(double strain, double delta_t, const FiberSpec& fiber, std::size_t node);

// Inverse of wavelength_shift at zero temperature change.
double strain_from_shift(double delta_lambda, const FiberSpec& fiber, std::size_t node);

// Subtracts the per-node mean of the two fibers.
WavelengthFrame common_mode_correct(std::span<const double, kFeatures> raw);

std::array<double, kFeatures> add_measurement_noise(std::span<const double, kFeatures> frame, double sigma,
                                                    std::mt19937_64& rng);
std::array<double, kFeatures> add_measurement_noise(std::span<const double, kFeatures> frame, double sigma,
                                                    std::uint64_t seed);

// Noiseless raw shifts of both fibers (before correction) for a profile and
// a uniform temperature change.
std::array<double, kFeatures> raw_shifts(const CurvatureProfile& profile, const std::array<FiberSpec, 2>& fibers,
                                         const CdmConfig& config, double delta_t);

}  // namespace cdms
