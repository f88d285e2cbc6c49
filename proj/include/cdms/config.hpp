#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cdms/dataset.hpp"
#include "cdms/neural_net.hpp"

namespace cdms {

inline constexpr int kConfigVersion = 1;

// Everything a reproducible run needs. Every stochastic stage carries its own seed.
struct RunConfig {
    int version = kConfigVersion;
    GeneratorConfig generator;
    std::vector<Scenario> scenarios;
    std::vector<ScenarioKind> ood_kinds{ScenarioKind::CenterLeft, ScenarioKind::TipLeft};
    double train_fraction = 0.8;
    std::uint64_t split_seed = 11;

    std::vector<std::size_t> architecture = kDefaultArchitecture;
    double dropout_rate = 0.3;
    std::uint64_t init_seed = 23;
    TrainOptions training{};

    int mc_samples = 100;
    double omega = 3.0;
    std::uint64_t mc_seed = 37;
    std::vector<std::pair<double, double>> fp_thresholds{{1.5, 1.0}, {1.1, 1.0}};

    std::string work_dir = "run";

    // Throws ConfigError on the first invalid field.
    void validate() const;
};

// Bend plan used by the default configuration: `bends` bends of `kind` with
// velocities spread over [0.1, 0.4] mm/s.
std::vector<Scenario> scenario_plan(ScenarioKind kind, int bends, std::uint64_t seed, double sample_rate = 50.0);

// ~50 bends over all eight scenario kinds.
RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

// Applies "dotted.path=value" to the JSON form; the value is parsed as JSON
// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace cdms
