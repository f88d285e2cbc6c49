#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdms/fbg_model.hpp"
#include "cdms/kinematics.hpp"

namespace cdms {

enum class ScenarioKind {
    FreespaceLeft,
    FreespaceRight,
    BaseLeft,
    CenterLeft,
    TipLeft,
    BaseRight,
    CenterRight,
    TipRight,
};

inline constexpr std::array<ScenarioKind, 8> kAllScenarioKinds{
    ScenarioKind::FreespaceLeft, ScenarioKind::FreespaceRight, ScenarioKind::BaseLeft,  ScenarioKind::CenterLeft,
    ScenarioKind::TipLeft,       ScenarioKind::BaseRight,      ScenarioKind::CenterRight, ScenarioKind::TipRight,
};

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_from_string(std::string_view name);
std::optional<Placement> obstacle_placement(ScenarioKind kind);
bool bends_left(ScenarioKind kind);

// A set of identical bends (0 -> max_cable_disp -> 0) recorded at one
// cable velocity.
struct Scenario {
    ScenarioKind kind = ScenarioKind::FreespaceLeft;
    double velocity = 0.2;     // mm/s, within [0.1, 0.4]
    double sample_rate = 50.0; // Hz
    std::uint64_t seed = 0;
    int bends = 1;

    void validate() const;
};

struct Sample {
    std::uint32_t bend_id = 0;
    double t = 0.0;
    ScenarioKind scenario = ScenarioKind::FreespaceLeft;
    WavelengthFrame features;
    MarkerSet target{};
};

struct GeneratorConfig {
    CdmConfig cdm;
    FiberSpec fiber;
    double noise_sigma = 0.002;
    double temperature_range = 2.0;
    SolverOptions solver;
    std::array<Obstacle, 6> obstacles{
        default_obstacle(Placement::BaseLeft),  default_obstacle(Placement::CenterLeft),
        default_obstacle(Placement::TipLeft),   default_obstacle(Placement::BaseRight),
        default_obstacle(Placement::CenterRight), default_obstacle(Placement::TipRight),
    };

    const Obstacle& obstacle(Placement placement) const;
};

struct GeneratedDataset {
    std::vector<Sample> samples;
    std::size_t attempted = 0;
    std::size_t skipped = 0;
    std::size_t obstacle_samples = 0;
    double max_penetration = 0.0;  // over accepted obstacle samples; 0 if none

    double skip_fraction() const {
        return attempted == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(attempted);
    }
};

// Number of rows one bend produces.
std::size_t samples_per_bend(const Scenario& scenario, const CdmConfig& config);

// Cable displacement (signed) at time t of a bend.
double bend_displacement(const Scenario& scenario, const CdmConfig& config, double t);

// Bend ids are assigned consecutively from 0 in scenario order.
GeneratedDataset generate_dataset(std::span<const Scenario> scenarios, const GeneratorConfig& config);

// Replaces a single outlier marker by the constant-curvature arc through its
// neighbors. Returns nullopt when the frame must be rejected.
std::optional<MarkerSet> repair_markers(const MarkerSet& raw, std::span<const bool, kMarkers> outliers);

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> test_id;
    std::vector<Sample> test_ood;
};

DatasetSplit split_by_bend(std::span<const Sample> samples, std::span<const ScenarioKind> ood_kinds,
                           double train_fraction, std::uint64_t seed);

// Per-feature min-max scaling fitted on training features.
struct Normalizer {
    std::array<double, kFeatures> min{};
    std::array<double, kFeatures> max{};

    static Normalizer fit(std::span<const WavelengthFrame> train);

    std::array<double, kFeatures> normalize(std::span<const double, kFeatures> x) const;
    std::array<double, kFeatures> denormalize(std::span<const double, kFeatures> x) const;

    friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

std::vector<WavelengthFrame> features_of(std::span<const Sample> samples);

void write_csv(std::span<const Sample> samples, const std::filesystem::path& path);
std::vector<Sample> read_csv(const std::filesystem::path& path);

// Column names of the dataset CSV, in order.
std::vector<std::string> csv_header();

}  // namespace cdms
