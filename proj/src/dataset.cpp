#include "cdms/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "cdms/errors.hpp"
#include "cdms/seeds.hpp"

namespace cdms {

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::FreespaceLeft: return "FreespaceLeft";
        case ScenarioKind::FreespaceRight: return "FreespaceRight";
        case ScenarioKind::BaseLeft: return "BaseLeft";
        case ScenarioKind::CenterLeft: return "CenterLeft";
        case ScenarioKind::TipLeft: return "TipLeft";
        case ScenarioKind::BaseRight: return "BaseRight";
        case ScenarioKind::CenterRight: return "CenterRight";
        case ScenarioKind::TipRight: return "TipRight";
    }
    return "?";
}

std::optional<ScenarioKind> scenario_from_string(std::string_view name) {
    for (auto kind : kAllScenarioKinds) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

std::optional<Placement> obstacle_placement(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::FreespaceLeft:
        case ScenarioKind::FreespaceRight: return std::nullopt;
        case ScenarioKind::BaseLeft: return Placement::BaseLeft;
        case ScenarioKind::CenterLeft: return Placement::CenterLeft;
        case ScenarioKind::TipLeft: return Placement::TipLeft;
        case ScenarioKind::BaseRight: return Placement::BaseRight;
        case ScenarioKind::CenterRight: return Placement::CenterRight;
        case ScenarioKind::TipRight: return Placement::TipRight;
    }
    return std::nullopt;
}

bool bends_left(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::FreespaceLeft:
        case ScenarioKind::BaseLeft:
        case ScenarioKind::CenterLeft:
        case ScenarioKind::TipLeft: return true;
        default: return false;
    }
}

void Scenario::validate() const {
    if (!(velocity >= 0.1 && velocity <= 0.4)) {
        throw ConfigError("scenario velocity must lie in [0.1, 0.4] mm/s");
    }
    if (!(sample_rate > 0.0)) {
        throw ConfigError("scenario sample_rate must be positive");
    }
    if (bends < 1) {
        throw ConfigError("scenario must contain at least one bend");
    }
}

const Obstacle& GeneratorConfig::obstacle(Placement placement) const {
    for (const auto& o : obstacles) {
        if (o.placement == placement) {
            return o;
        }
    }
    throw ConfigError("no obstacle configured for placement " + std::string(to_string(placement)));
}

std::size_t samples_per_bend(const Scenario& scenario, const CdmConfig& config) {
    const double duration = 2.0 * config.max_cable_disp / scenario.velocity;
    return static_cast<std::size_t>(std::llround(duration * scenario.sample_rate));
}

double bend_displacement(const Scenario& scenario, const CdmConfig& config, double t) {
    const double half = config.max_cable_disp / scenario.velocity;
    double delta = t <= half ? scenario.velocity * t : scenario.velocity * (2.0 * half - t);
    delta = std::clamp(delta, 0.0, config.max_cable_disp);
    return bends_left(scenario.kind) ? delta : -delta;
}

GeneratedDataset generate_dataset(std::span<const Scenario> scenarios, const GeneratorConfig& config) {
    if (scenarios.empty()) {
        throw ArgumentError("scenario list is empty");
    }
    config.cdm.validate();
    config.fiber.validate();
    for (const auto& o : config.obstacles) {
        o.validate(config.cdm);
    }
    for (const auto& s : scenarios) {
        s.validate();
    }

    const auto fibers = fiber_pair(config.fiber, config.cdm.fiber_offset);
    GeneratedDataset out;
    std::uint32_t bend_id = 0;

    for (const auto& scenario : scenarios) {
        const auto placement = obstacle_placement(scenario.kind);
        const Obstacle* obstacle = placement ? &config.obstacle(*placement) : nullptr;
        const std::size_t n_rows = samples_per_bend(scenario, config.cdm);

        for (int b = 0; b < scenario.bends; ++b, ++bend_id) {
            std::mt19937_64 rng(derive_seed(scenario.seed, static_cast<std::uint64_t>(b)));
            std::uniform_real_distribution<double> temperature(-config.temperature_range, config.temperature_range);
            std::optional<CurvatureProfile> previous;

            for (std::size_t k = 0; k < n_rows; ++k) {
                const double t = static_cast<double>(k) / scenario.sample_rate;
                const double delta = bend_displacement(scenario, config.cdm, t);
                // Draw the per-row randomness up front so a skipped row does not
                // shift the stream of the rows after it.
                const double delta_t = config.temperature_range > 0.0 ? temperature(rng) : 0.0;
                const std::uint64_t noise_seed = rng();
                ++out.attempted;

                CurvatureProfile profile;
                if (obstacle != nullptr) {
                    ++out.obstacle_samples;
                    try {
                        const auto sol = constrained_bend(delta, *obstacle, config.cdm, config.solver,
                                                          previous ? &*previous : nullptr);
                        profile = sol.profile;
                        out.max_penetration = std::max(out.max_penetration, sol.penetration);
                    } catch (const SolverError&) {
                        ++out.skipped;
                        continue;
                    }
                    previous = profile;
                } else {
                    profile = free_bend_curvature(delta, config.cdm);
                }

                const auto raw = raw_shifts(profile, fibers, config.cdm, delta_t);
                const auto noisy = add_measurement_noise(raw, config.noise_sigma, noise_seed);

                Sample sample;
                sample.bend_id = bend_id;
                sample.t = t;
                sample.scenario = scenario.kind;
                sample.features = common_mode_correct(noisy);
                sample.target = shape_from_curvatures(profile, config.cdm).markers;
                out.samples.push_back(sample);
            }
        }
    }
    return out;
}

namespace {

// Point midway (in arclength) between a and b on the circle through a, b, c.
std::optional<Vec2> arc_midpoint(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const double scale = std::max({distance(a, b), distance(b, c), distance(a, c)});
    if (std::abs(d) <= 1e-12 * scale * scale) {
        return mid;
    }
    const double a2 = a.x * a.x + a.y * a.y;
    const double b2 = b.x * b.x + b.y * b.y;
    const double c2 = c.x * c.x + c.y * c.y;
    const Vec2 center{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
                      (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    const double radius = distance(a, center);
    const double off = distance(mid, center);
    if (off == 0.0) {
        return std::nullopt;
    }
    return Vec2{center.x + radius * (mid.x - center.x) / off, center.y + radius * (mid.y - center.y) / off};
}

}  // namespace

std::optional<MarkerSet> repair_markers(const MarkerSet& raw, std::span<const bool, kMarkers> outliers) {
    const auto n_out = std::count(outliers.begin(), outliers.end(), true);
    if (n_out == 0) {
        return raw;
    }
    if (n_out > 1) {
        return std::nullopt;
    }
    const auto i = static_cast<std::size_t>(std::find(outliers.begin(), outliers.end(), true) - outliers.begin());
    if (i == 0 || i + 1 == kMarkers) {
        return std::nullopt;
    }
    const Vec2& third = i + 2 < kMarkers ? raw[i + 2] : raw[i - 2];
    const auto repaired = arc_midpoint(raw[i - 1], raw[i + 1], third);
    if (!repaired) {
        return std::nullopt;
    }
    MarkerSet out = raw;
    out[i] = *repaired;
    return out;
}

DatasetSplit split_by_bend(std::span<const Sample> samples, std::span<const ScenarioKind> ood_kinds,
                           double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1]");
    }
    auto is_ood = [&](ScenarioKind k) { return std::find(ood_kinds.begin(), ood_kinds.end(), k) != ood_kinds.end(); };

    // In-distribution bend ids grouped by scenario kind, in order of first appearance.
    std::map<ScenarioKind, std::vector<std::uint32_t>> bends_by_kind;
    std::unordered_map<std::uint32_t, ScenarioKind> kind_of_bend;
    for (const auto& s : samples) {
        auto [it, inserted] = kind_of_bend.emplace(s.bend_id, s.scenario);
        if (!inserted && it->second != s.scenario) {
            throw ConfigError("bend " + std::to_string(s.bend_id) + " spans several scenarios");
        }
        if (inserted && !is_ood(s.scenario)) {
            bends_by_kind[s.scenario].push_back(s.bend_id);
        }
    }

    std::unordered_map<std::uint32_t, bool> in_train;
    std::mt19937_64 rng(seed);
    for (auto& [kind, ids] : bends_by_kind) {
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
        for (std::size_t j = 0; j < ids.size(); ++j) {
            in_train[ids[j]] = j < n_train;
        }
    }

    DatasetSplit split;
    for (const auto& s : samples) {
        if (is_ood(s.scenario)) {
            split.test_ood.push_back(s);
        } else if (in_train[s.bend_id]) {
            split.train.push_back(s);
        } else {
            split.test_id.push_back(s);
        }
    }
    if (split.train.empty()) {
        throw ConfigError("training split is empty");
    }
    return split;
}

Normalizer Normalizer::fit(std::span<const WavelengthFrame> train) {
    if (train.size() < 2) {
        throw ArgumentError("normalizer needs at least two training rows, got " + std::to_string(train.size()));
    }
    Normalizer n;
    n.min = train.front().shifts;
    n.max = train.front().shifts;
    for (const auto& row : train) {
        for (std::size_t j = 0; j < kFeatures; ++j) {
            n.min[j] = std::min(n.min[j], row.shifts[j]);
            n.max[j] = std::max(n.max[j], row.shifts[j]);
        }
    }
    return n;
}

std::array<double, kFeatures> Normalizer::normalize(std::span<const double, kFeatures> x) const {
    std::array<double, kFeatures> out{};
    for (std::size_t j = 0; j < kFeatures; ++j) {
        const double range = max[j] - min[j];
        out[j] = range > 0.0 ? (x[j] - min[j]) / range : 0.0;
    }
    return out;
}

std::array<double, kFeatures> Normalizer::denormalize(std::span<const double, kFeatures> x) const {
    std::array<double, kFeatures> out{};
    for (std::size_t j = 0; j < kFeatures; ++j) {
        out[j] = min[j] + x[j] * (max[j] - min[j]);
    }
    return out;
}

std::vector<WavelengthFrame> features_of(std::span<const Sample> samples) {
    std::vector<WavelengthFrame> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s.features);
    }
    return out;
}

std::vector<std::string> csv_header() {
    std::vector<std::string> cols{"bend_id", "t", "scenario"};
    for (std::size_t j = 1; j <= kFeatures; ++j) {
        cols.push_back("dl" + std::to_string(j));
    }
    for (std::size_t i = 1; i <= kMarkers; ++i) {
        cols.push_back("p" + std::to_string(i) + "x");
        cols.push_back("p" + std::to_string(i) + "y");
    }
    return cols;
}

namespace {

void append_double(std::string& line, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    line.append(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double(std::string_view field, std::size_t line, std::string_view column) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError("invalid number '" + std::string(field) + "' in column " + std::string(column), line);
    }
    return v;
}

}  // namespace

void write_csv(std::span<const Sample> samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const auto header = csv_header();
    std::string line;
    for (std::size_t c = 0; c < header.size(); ++c) {
        line += c == 0 ? "" : ",";
        line += header[c];
    }
    out << line << '\n';
    for (const auto& s : samples) {
        line.clear();
        line += std::to_string(s.bend_id);
        line += ',';
        append_double(line, s.t);
        line += ',';
        line += to_string(s.scenario);
        for (double v : s.features.shifts) {
            line += ',';
            append_double(line, v);
        }
        for (const auto& p : s.target) {
            line += ',';
            append_double(line, p.x);
            line += ',';
            append_double(line, p.y);
        }
        out << line << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::vector<Sample> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing header", 1);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header_fields = split_fields(line);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < header_fields.size(); ++c) {
        index.emplace(std::string(header_fields[c]), c);
    }
    const auto expected = csv_header();
    std::vector<std::size_t> col(expected.size());
    for (std::size_t c = 0; c < expected.size(); ++c) {
        const auto it = index.find(expected[c]);
        if (it == index.end()) {
            throw ParseError("missing column " + expected[c], 1);
        }
        col[c] = it->second;
    }

    std::vector<Sample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header_fields.size()) {
            throw ParseError("expected " + std::to_string(header_fields.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        Sample s;
        const auto id_field = fields[col[0]];
        std::uint32_t id = 0;
        const auto res = std::from_chars(id_field.data(), id_field.data() + id_field.size(), id);
        if (res.ec != std::errc{} || res.ptr != id_field.data() + id_field.size()) {
            throw ParseError("invalid bend_id '" + std::string(id_field) + "'", line_no);
        }
        s.bend_id = id;
        s.t = parse_double(fields[col[1]], line_no, "t");
        const auto kind = scenario_from_string(fields[col[2]]);
        if (!kind) {
            throw ParseError("unknown scenario '" + std::string(fields[col[2]]) + "'", line_no);
        }
        s.scenario = *kind;
        for (std::size_t j = 0; j < kFeatures; ++j) {
            s.features.shifts[j] = parse_double(fields[col[3 + j]], line_no, expected[3 + j]);
        }
        for (std::size_t i = 0; i < kMarkers; ++i) {
            const std::size_t cx = 3 + kFeatures + 2 * i;
            s.target[i].x = parse_double(fields[col[cx]], line_no, expected[cx]);
            s.target[i].y = parse_double(fields[col[cx + 1]], line_no, expected[cx + 1]);
        }
        samples.push_back(s);
    }
    return samples;
}

}  // namespace cdms
