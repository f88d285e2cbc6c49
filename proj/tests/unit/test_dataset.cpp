#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cdms/dataset.hpp"
#include "cdms/errors.hpp"

using namespace cdms;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cdms_unit";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<Sample> fake_bends(std::uint32_t bends, std::size_t rows_per_bend, ScenarioKind kind,
                               std::uint32_t first_id = 0) {
    std::vector<Sample> out;
    for (std::uint32_t b = 0; b < bends; ++b) {
        for (std::size_t r = 0; r < rows_per_bend; ++r) {
            Sample s;
            s.bend_id = first_id + b;
            s.t = static_cast<double>(r) * 0.02;
            s.scenario = kind;
            s.features.shifts[0] = static_cast<double>(r);
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("scenario names and sides") {
    for (auto k : kAllScenarioKinds) CHECK(scenario_from_string(to_string(k)) == k);
    CHECK(obstacle_placement(ScenarioKind::FreespaceLeft) == std::nullopt);
    CHECK(obstacle_placement(ScenarioKind::TipRight) == Placement::TipRight);
    CHECK(bends_left(ScenarioKind::BaseLeft));
    CHECK_FALSE(bends_left(ScenarioKind::FreespaceRight));
}

TEST_CASE("scenario validation") {
    Scenario s;
    CHECK_NOTHROW(s.validate());
    s.velocity = 0.05;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("bend length follows the triangle wave duration") {
    Scenario s{ScenarioKind::FreespaceRight, 0.2, 50.0, 1, 1};
    const CdmConfig c;
    CHECK(samples_per_bend(s, c) == 2500);
    CHECK(bend_displacement(s, c, 0.0) == 0.0);
    CHECK(bend_displacement(s, c, 25.0) == doctest::Approx(-5.0));
    CHECK(bend_displacement(s, c, 12.5) == doctest::Approx(-2.5));
    s.kind = ScenarioKind::FreespaceLeft;
    CHECK(bend_displacement(s, c, 12.5) == doctest::Approx(2.5));
}

TEST_CASE("generated freespace bend") {
    GeneratorConfig g;
    const std::vector<Scenario> plan{{ScenarioKind::FreespaceRight, 0.2, 50.0, 7, 1}};
    const auto data = generate_dataset(plan, g);
    REQUIRE(data.samples.size() == 2500);
    CHECK(data.skipped == 0);
    CHECK(data.obstacle_samples == 0);

    const auto& first = data.samples.front();
    CHECK(first.bend_id == 0);
    for (double v : first.features.shifts) CHECK(std::abs(v) <= 5.0 * g.noise_sigma);
    for (const auto& m : first.target) CHECK(m.y == 0.0);

    // Right bends curl toward -y.
    CHECK(data.samples[1250].target.back().y < -10.0);

    const auto again = generate_dataset(plan, g);
    REQUIRE(again.samples.size() == data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); i += 97) {
        CHECK(again.samples[i].features == data.samples[i].features);
        CHECK(again.samples[i].target == data.samples[i].target);
    }
}

TEST_CASE("generated obstacle bend stays outside the obstacle") {
    GeneratorConfig g;
    const std::vector<Scenario> plan{{ScenarioKind::CenterRight, 0.4, 10.0, 3, 1}};
    const auto data = generate_dataset(plan, g);
    CHECK(data.obstacle_samples == data.samples.size());
    CHECK(data.samples.size() + data.skipped == data.attempted);
    CHECK(data.max_penetration <= 0.05);
    CHECK(data.max_penetration > 0.0);
}

TEST_CASE("marker repair") {
    const CdmConfig c;
    const auto shape = shape_from_curvatures(free_bend_curvature(3.7, c), c);
    std::array<bool, kMarkers> none{};
    CHECK(repair_markers(shape.markers, none) == shape.markers);

    auto broken = shape.markers;
    broken[14] = {100.0, -100.0};
    std::array<bool, kMarkers> one{};
    one[14] = true;
    const auto fixed = repair_markers(broken, one);
    REQUIRE(fixed.has_value());
    CHECK(distance((*fixed)[14], shape.markers[14]) < 1e-6);

    std::array<bool, kMarkers> two{};
    two[3] = two[20] = true;
    CHECK_FALSE(repair_markers(shape.markers, two).has_value());
}

TEST_CASE("split keeps bends whole") {
    auto samples = fake_bends(8, 5, ScenarioKind::FreespaceLeft);
    const auto ood = fake_bends(2, 5, ScenarioKind::CenterLeft, 8);
    samples.insert(samples.end(), ood.begin(), ood.end());
    const std::vector<ScenarioKind> ood_kinds{ScenarioKind::CenterLeft};
    const auto split = split_by_bend(samples, ood_kinds, 0.8, 4);

    auto ids = [](const std::vector<Sample>& v) {
        std::set<std::uint32_t> s;
        for (const auto& x : v) s.insert(x.bend_id);
        return s;
    };
    const auto tr = ids(split.train);
    const auto id = ids(split.test_id);
    const auto od = ids(split.test_ood);
    CHECK(tr.size() == 6);
    CHECK(id.size() == 2);
    CHECK(od == std::set<std::uint32_t>{8, 9});
    for (auto b : tr) CHECK_FALSE(id.count(b));
    CHECK(split.train.size() + split.test_id.size() + split.test_ood.size() == samples.size());

    const auto no_ood = split_by_bend(samples, std::vector<ScenarioKind>{}, 0.8, 4);
    CHECK(no_ood.test_ood.empty());
    CHECK(ids(no_ood.train).size() + ids(no_ood.test_id).size() == 10);
}

TEST_CASE("normalizer") {
    std::vector<WavelengthFrame> frames(2);
    frames[0].shifts.fill(1.0);
    frames[1].shifts.fill(3.0);
    frames[1].shifts[7] = 1.0;  // constant feature
    const auto n = Normalizer::fit(frames);
    std::array<double, kFeatures> x;
    x.fill(2.0);
    const auto y = n.normalize(x);
    CHECK(y[0] == 0.5);
    CHECK(y[7] == 0.0);
    CHECK(n.normalize(frames[0].shifts)[0] == 0.0);
    CHECK(n.normalize(frames[1].shifts)[0] == 1.0);
    CHECK(n.denormalize(y)[0] == doctest::Approx(2.0));
    CHECK_THROWS(Normalizer::fit(std::vector<WavelengthFrame>(1)));
}

TEST_CASE("csv round trip") {
    GeneratorConfig g;
    const std::vector<Scenario> plan{{ScenarioKind::FreespaceLeft, 0.4, 40.0, 2, 1}};
    auto samples = generate_dataset(plan, g).samples;
    samples.resize(std::min<std::size_t>(samples.size(), 1000));
    REQUIRE(samples.size() == 1000);
    const auto path = temp_file("roundtrip.csv");
    write_csv(samples, path);
    const auto back = read_csv(path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].bend_id == samples[i].bend_id);
        CHECK(back[i].scenario == samples[i].scenario);
        CHECK(back[i].t == samples[i].t);
        CHECK(back[i].features == samples[i].features);
        CHECK(back[i].target == samples[i].target);
    }
}

TEST_CASE("csv with only a header is an empty dataset") {
    const auto path = temp_file("empty.csv");
    write_csv(std::vector<Sample>{}, path);
    CHECK(read_csv(path).empty());
    CHECK(csv_header().size() == 3 + 8 + 60);
}

TEST_CASE("csv errors") {
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        auto h = csv_header();
        h.erase(std::find(h.begin(), h.end(), "dl3"));
        for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
        out << '\n';
    }
    try {
        read_csv(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("dl3") != std::string::npos);
    }

    {
        std::ofstream out(path);
        const auto h = csv_header();
        for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
        out << "\n0,0,FreespaceLeft,abc\n";
    }
    try {
        read_csv(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}
