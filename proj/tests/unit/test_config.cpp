#include <doctest.h>

#include <filesystem>
#include <set>

#include "cdms/config.hpp"
#include "cdms/errors.hpp"

using namespace cdms;

TEST_CASE("default configuration") {
    const auto c = default_run_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.scenarios.size() == 50);
    std::set<ScenarioKind> kinds;
    for (const auto& s : c.scenarios) {
        kinds.insert(s.kind);
        CHECK(s.velocity >= 0.1);
        CHECK(s.velocity <= 0.4);
    }
    CHECK(kinds.size() == 8);
}

TEST_CASE("config survives its text form") {
    auto c = default_run_config();
    c.training.epochs = 7;
    c.generator.noise_sigma = 0.003;
    c.mc_samples = 33;
    const auto j = to_json(c);
    const auto back = config_from_json(j);
    CHECK(to_json(back) == j);

    const auto path = std::filesystem::temp_directory_path() / "cdms_unit_config.json";
    save_config(c, path);
    CHECK(to_json(load_config(path)) == j);
}

TEST_CASE("overrides") {
    auto j = to_json(default_run_config());
    apply_override(j, "training.epochs=3");
    apply_override(j, "noise.sigma_nm=0.004");
    const auto c = config_from_json(j);
    CHECK(c.training.epochs == 3);
    CHECK(c.generator.noise_sigma == 0.004);
    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    auto c = default_run_config();
    c.train_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    auto j = to_json(default_run_config());
    j["version"] = 99;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
}
