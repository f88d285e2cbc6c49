#include "cdms/config.hpp"

#include <cmath>
#include <fstream>

#include "cdms/errors.hpp"
#include "cdms/seeds.hpp"

namespace cdms {

using nlohmann::json;

void RunConfig::validate() const {
    if (version != kConfigVersion) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }
    generator.cdm.validate();
    generator.fiber.validate();
    if (!(generator.noise_sigma >= 0.0)) {
        throw ConfigError("noise.sigma_nm must be non-negative");
    }
    if (!(generator.temperature_range >= 0.0)) {
        throw ConfigError("noise.temperature_range_c must be non-negative");
    }
    for (const auto& o : generator.obstacles) {
        o.validate(generator.cdm);
    }
    if (scenarios.empty()) {
        throw ConfigError("scenarios must not be empty");
    }
    for (const auto& s : scenarios) {
        s.validate();
    }
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("split.train_fraction must lie in (0, 1]");
    }
    if (architecture.size() < 2 || architecture.front() != kFeatures || architecture.back() != kOutputs) {
        throw ConfigError("model.architecture must map 8 features to 60 outputs");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("model.dropout_rate must lie in [0, 1)");
    }
    if (training.epochs < 0 || training.batch_size == 0) {
        throw ConfigError("training.epochs must be >= 0 and training.batch_size > 0");
    }
    if (mc_samples < 1) {
        throw ConfigError("uncertainty.k must be at least 1");
    }
    if (!(omega > 0.0)) {
        throw ConfigError("uncertainty.omega must be positive");
    }
    for (const auto& [e, s] : fp_thresholds) {
        if (!(e > 0.0 && s > 0.0)) {
            throw ConfigError("uncertainty.fp_thresholds must be positive");
        }
    }
}

std::vector<Scenario> scenario_plan(ScenarioKind kind, int bends, std::uint64_t seed, double sample_rate) {
    constexpr double golden = 0.6180339887498949;
    std::vector<Scenario> out;
    for (int b = 0; b < bends; ++b) {
        double frac = (b + 0.5) * golden;
        frac -= std::floor(frac);
        Scenario s;
        s.kind = kind;
        s.velocity = std::round((0.1 + 0.3 * frac) * 1000.0) / 1000.0;
        s.sample_rate = sample_rate;
        s.seed = derive_seed(seed, static_cast<std::uint64_t>(b));
        s.bends = 1;
        out.push_back(s);
    }
    return out;
}

RunConfig default_run_config() {
    RunConfig cfg;
    std::uint64_t kind_seed = 1000;
    for (auto kind : kAllScenarioKinds) {
        const bool ood = kind == ScenarioKind::CenterLeft || kind == ScenarioKind::TipLeft;
        const auto plan = scenario_plan(kind, ood ? 4 : 7, kind_seed++);
        cfg.scenarios.insert(cfg.scenarios.end(), plan.begin(), plan.end());
    }
    return cfg;
}

namespace {

std::string kind_name(ScenarioKind k) { return std::string(to_string(k)); }

ScenarioKind parse_kind(const std::string& name) {
    const auto k = scenario_from_string(name);
    if (!k) {
        throw ConfigError("unknown scenario kind '" + name + "'");
    }
    return *k;
}

template <typename T>
void read_into(const json& j, const char* key, T& target) {
    if (j.contains(key)) {
        try {
            target = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
        }
    }
}

}  // namespace

json to_json(const RunConfig& c) {
    const auto& g = c.generator;
    json obstacles = json::array();
    for (const auto& o : g.obstacles) {
        obstacles.push_back({{"placement", std::string(to_string(o.placement))},
                             {"center", {o.center.x, o.center.y}},
                             {"radius", o.radius}});
    }
    json scenarios = json::array();
    for (const auto& s : c.scenarios) {
        scenarios.push_back({{"kind", kind_name(s.kind)},
                             {"velocity", s.velocity},
                             {"sample_rate", s.sample_rate},
                             {"seed", s.seed},
                             {"bends", s.bends}});
    }
    json ood = json::array();
    for (auto k : c.ood_kinds) {
        ood.push_back(kind_name(k));
    }
    json fp = json::array();
    for (const auto& [e, s] : c.fp_thresholds) {
        fp.push_back({e, s});
    }
    return {
        {"version", c.version},
        {"work_dir", c.work_dir},
        {"geometry",
         {{"dexterous_length", g.cdm.dexterous_length},
          {"outer_radius", g.cdm.outer_radius},
          {"max_cable_disp", g.cdm.max_cable_disp},
          {"max_tip_angle", g.cdm.max_tip_angle},
          {"fbg_node_arclengths", g.cdm.fbg_node_arclengths},
          {"fiber_offset", g.cdm.fiber_offset}}},
        {"fiber",
         {{"base_wavelengths", g.fiber.base_wavelengths},
          {"photoelastic_coeff", g.fiber.photoelastic_coeff},
          {"thermal_expansion", g.fiber.thermal_expansion},
          {"thermo_optic", g.fiber.thermo_optic}}},
        {"noise", {{"sigma_nm", g.noise_sigma}, {"temperature_range_c", g.temperature_range}}},
        {"solver",
         {{"beta", g.solver.beta},
          {"gamma", g.solver.gamma},
          {"max_iters", g.solver.max_iters},
          {"fd_step", g.solver.fd_step},
          {"penetration_tol", g.solver.penetration_tol},
          {"rel_tol", g.solver.rel_tol},
          {"continuation_steps", g.solver.continuation_steps}}},
        {"obstacles", obstacles},
        {"scenarios", scenarios},
        {"split", {{"ood_kinds", ood}, {"train_fraction", c.train_fraction}, {"seed", c.split_seed}}},
        {"model", {{"architecture", c.architecture}, {"dropout_rate", c.dropout_rate}, {"init_seed", c.init_seed}}},
        {"training",
         {{"epochs", c.training.epochs},
          {"batch_size", c.training.batch_size},
          {"seed", c.training.seed},
          {"validation_fraction", c.training.validation_fraction},
          {"learning_rate", c.training.adam.learning_rate},
          {"beta1", c.training.adam.beta1},
          {"beta2", c.training.adam.beta2},
          {"epsilon", c.training.adam.epsilon},
          {"final_lr_fraction", c.training.final_lr_fraction}}},
        {"uncertainty", {{"k", c.mc_samples}, {"omega", c.omega}, {"seed", c.mc_seed}, {"fp_thresholds", fp}}},
    };
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config root must be an object");
    }
    RunConfig c;
    c.scenarios.clear();
    read_into(j, "version", c.version);
    if (c.version != kConfigVersion) {
        throw ConfigError("unsupported config version " + std::to_string(c.version));
    }
    read_into(j, "work_dir", c.work_dir);
    auto& g = c.generator;
    if (j.contains("geometry")) {
        const auto& s = j.at("geometry");
        read_into(s, "dexterous_length", g.cdm.dexterous_length);
        read_into(s, "outer_radius", g.cdm.outer_radius);
        read_into(s, "max_cable_disp", g.cdm.max_cable_disp);
        read_into(s, "max_tip_angle", g.cdm.max_tip_angle);
        read_into(s, "fbg_node_arclengths", g.cdm.fbg_node_arclengths);
        read_into(s, "fiber_offset", g.cdm.fiber_offset);
    }
    if (j.contains("fiber")) {
        const auto& s = j.at("fiber");
        read_into(s, "base_wavelengths", g.fiber.base_wavelengths);
        read_into(s, "photoelastic_coeff", g.fiber.photoelastic_coeff);
        read_into(s, "thermal_expansion", g.fiber.thermal_expansion);
        read_into(s, "thermo_optic", g.fiber.thermo_optic);
    }
    if (j.contains("noise")) {
        read_into(j.at("noise"), "sigma_nm", g.noise_sigma);
        read_into(j.at("noise"), "temperature_range_c", g.temperature_range);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        read_into(s, "beta", g.solver.beta);
        read_into(s, "gamma", g.solver.gamma);
        read_into(s, "max_iters", g.solver.max_iters);
        read_into(s, "fd_step", g.solver.fd_step);
        read_into(s, "penetration_tol", g.solver.penetration_tol);
        read_into(s, "rel_tol", g.solver.rel_tol);
        read_into(s, "continuation_steps", g.solver.continuation_steps);
    }
    if (j.contains("obstacles")) {
        for (const auto& o : j.at("obstacles")) {
            const auto name = o.at("placement").get<std::string>();
            const auto placement = placement_from_string(name);
            if (!placement) {
                throw ConfigError("unknown obstacle placement '" + name + "'");
            }
            for (auto& target : g.obstacles) {
                if (target.placement == *placement) {
                    const auto center = o.value("center", std::vector<double>{target.center.x, target.center.y});
                    if (center.size() != 2) {
                        throw ConfigError("obstacle center must have two coordinates");
                    }
                    target.center = {center[0], center[1]};
                    read_into(o, "radius", target.radius);
                }
            }
        }
    }
    if (j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios")) {
            Scenario sc;
            sc.kind = parse_kind(s.at("kind").get<std::string>());
            read_into(s, "velocity", sc.velocity);
            read_into(s, "sample_rate", sc.sample_rate);
            read_into(s, "seed", sc.seed);
            read_into(s, "bends", sc.bends);
            c.scenarios.push_back(sc);
        }
    } else {
        c.scenarios = default_run_config().scenarios;
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        if (s.contains("ood_kinds")) {
            c.ood_kinds.clear();
            for (const auto& k : s.at("ood_kinds")) {
                c.ood_kinds.push_back(parse_kind(k.get<std::string>()));
            }
        }
        read_into(s, "train_fraction", c.train_fraction);
        read_into(s, "seed", c.split_seed);
    }
    if (j.contains("model")) {
        const auto& s = j.at("model");
        read_into(s, "architecture", c.architecture);
        read_into(s, "dropout_rate", c.dropout_rate);
        read_into(s, "init_seed", c.init_seed);
    }
    if (j.contains("training")) {
        const auto& s = j.at("training");
        read_into(s, "epochs", c.training.epochs);
        read_into(s, "batch_size", c.training.batch_size);
        read_into(s, "seed", c.training.seed);
        read_into(s, "validation_fraction", c.training.validation_fraction);
        read_into(s, "learning_rate", c.training.adam.learning_rate);
        read_into(s, "beta1", c.training.adam.beta1);
        read_into(s, "beta2", c.training.adam.beta2);
        read_into(s, "epsilon", c.training.adam.epsilon);
        read_into(s, "final_lr_fraction", c.training.final_lr_fraction);
    }
    if (j.contains("uncertainty")) {
        const auto& s = j.at("uncertainty");
        read_into(s, "k", c.mc_samples);
        read_into(s, "omega", c.omega);
        read_into(s, "seed", c.mc_seed);
        if (s.contains("fp_thresholds")) {
            c.fp_thresholds.clear();
            for (const auto& pair : s.at("fp_thresholds")) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw ConfigError("fp_thresholds entries must be [error_mm, std_mm]");
                }
                c.fp_thresholds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << to_json(config).dump(2) << '\n';
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    std::string pointer = "/";
    for (char ch : key) {
        pointer += ch == '.' ? '/' : ch;
    }
    try {
        j[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw ConfigError("cannot apply override '" + assignment + "': " + e.what());
    }
}

}  // namespace cdms
