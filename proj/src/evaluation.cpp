#include "cdms/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cdms/errors.hpp"

namespace cdms {

MarkerErrors marker_errors(const MarkerSet& pred, const MarkerSet& truth) {
    MarkerErrors e{};
    for (std::size_t i = 0; i < kMarkers; ++i) {
        e[i] = distance(pred[i], truth[i]);
    }
    return e;
}

MarkerErrors marker_errors(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != 2 * kMarkers || truth.size() != 2 * kMarkers) {
        throw ShapeError("marker_errors expects 60 values per frame, got " + std::to_string(pred.size()) + " and " +
                         std::to_string(truth.size()));
    }
    MarkerErrors e{};
    for (std::size_t i = 0; i < kMarkers; ++i) {
        e[i] = std::hypot(pred[2 * i] - truth[2 * i], pred[2 * i + 1] - truth[2 * i + 1]);
    }
    return e;
}

MarkerSet to_markers(const Eigen::VectorXd& flat) {
    if (flat.size() != static_cast<Eigen::Index>(2 * kMarkers)) {
        throw ShapeError("expected 60 shape outputs, got " + std::to_string(flat.size()));
    }
    MarkerSet m{};
    for (std::size_t i = 0; i < kMarkers; ++i) {
        m[i] = {flat(static_cast<Eigen::Index>(2 * i)), flat(static_cast<Eigen::Index>(2 * i + 1))};
    }
    return m;
}

ErrorSummary summarize_errors(std::vector<double> pool) {
    if (pool.empty()) {
        throw ArgumentError("cannot summarize an empty error pool");
    }
    ErrorSummary s;
    s.count = pool.size();
    const auto mid = pool.begin() + static_cast<std::ptrdiff_t>((pool.size() - 1) / 2);
    std::nth_element(pool.begin(), mid, pool.end());
    s.median = *mid;
    s.max = *std::max_element(pool.begin(), pool.end());
    return s;
}

TpeDse aggregate(std::span<const MarkerErrors> per_sample) {
    if (per_sample.empty()) {
        throw ArgumentError("cannot aggregate zero samples");
    }
    std::vector<double> tip;
    std::vector<double> all;
    tip.reserve(per_sample.size());
    all.reserve(per_sample.size() * kMarkers);
    for (const auto& e : per_sample) {
        tip.push_back(e.back());
        all.insert(all.end(), e.begin(), e.end());
    }
    return {summarize_errors(std::move(tip)), summarize_errors(std::move(all))};
}

std::string_view to_string(DistributionTag tag) { return tag == DistributionTag::InDistribution ? "id" : "ood"; }

std::optional<DistributionTag> tag_from_string(std::string_view name) {
    if (name == "id") {
        return DistributionTag::InDistribution;
    }
    if (name == "ood") {
        return DistributionTag::OutOfDistribution;
    }
    return std::nullopt;
}

std::vector<UncertaintyRow> uncertainty_error_table(std::span<const McPrediction> predictions,
                                                    std::span<const MarkerSet> truths,
                                                    std::span<const DistributionTag> tags) {
    if (predictions.size() != truths.size() || predictions.size() != tags.size()) {
        throw ShapeError("predictions, truths and tags must have the same length");
    }
    constexpr auto tip_x = static_cast<Eigen::Index>(2 * (kMarkers - 1));
    std::vector<UncertaintyRow> rows;
    rows.reserve(predictions.size());
    for (std::size_t r = 0; r < predictions.size(); ++r) {
        const auto& p = predictions[r];
        if (p.mean.size() != static_cast<Eigen::Index>(2 * kMarkers)) {
            throw ShapeError("prediction does not hold 60 outputs");
        }
        UncertaintyRow row;
        row.tip_std = std::hypot(p.std(tip_x), p.std(tip_x + 1));
        row.tip_error = std::hypot(p.mean(tip_x) - truths[r].back().x, p.mean(tip_x + 1) - truths[r].back().y);
        row.tag = tags[r];
        rows.push_back(row);
    }
    return rows;
}

std::size_t false_positive_count(std::span<const UncertaintyRow> table, double error_threshold,
                                 double std_threshold) {
    if (!(error_threshold > 0.0) || !(std_threshold > 0.0)) {
        throw ArgumentError("false-positive thresholds must be positive");
    }
    return static_cast<std::size_t>(std::count_if(table.begin(), table.end(), [&](const UncertaintyRow& r) {
        return r.tip_error > error_threshold && r.tip_std < std_threshold;
    }));
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[idx[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("spearman inputs differ in length");
    }
    if (a.size() < 2) {
        return 0.0;
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

void write_uncertainty_csv(std::span<const UncertaintyRow> table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "tip_std_mm,tip_error_mm,tag\n";
    char buf[32];
    for (const auto& r : table) {
        auto res = std::to_chars(buf, buf + sizeof(buf), r.tip_std, std::chars_format::general, 17);
        out.write(buf, res.ptr - buf);
        out << ',';
        res = std::to_chars(buf, buf + sizeof(buf), r.tip_error, std::chars_format::general, 17);
        out.write(buf, res.ptr - buf);
        out << ',' << to_string(r.tag) << '\n';
    }
}

std::vector<UncertaintyRow> read_uncertainty_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("tip_std_mm,tip_error_mm,tag", 0) != 0) {
        throw ParseError("expected header tip_std_mm,tip_error_mm,tag", 1);
    }
    std::vector<UncertaintyRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError("expected 3 fields", line_no);
        }
        UncertaintyRow row;
        const char* b = line.data();
        if (std::from_chars(b, b + c1, row.tip_std).ec != std::errc{} ||
            std::from_chars(b + c1 + 1, b + c2, row.tip_error).ec != std::errc{}) {
            throw ParseError("invalid number", line_no);
        }
        const auto tag = tag_from_string(std::string_view(line).substr(c2 + 1));
        if (!tag) {
            throw ParseError("unknown tag", line_no);
        }
        row.tag = *tag;
        rows.push_back(row);
    }
    return rows;
}

const GroupErrors* ModelReport::find(std::string_view group) const {
    for (const auto& g : groups) {
        if (g.group == group) {
            return &g;
        }
    }
    return nullptr;
}

ModelReport make_model_report(std::string model, std::span<const EvaluatedSample> samples) {
    ModelReport report;
    report.model = std::move(model);

    auto add_group = [&](std::string name, auto predicate) {
        std::vector<MarkerErrors> errs;
        for (const auto& s : samples) {
            if (predicate(s)) {
                errs.push_back(s.errors);
            }
        }
        if (!errs.empty()) {
            report.groups.push_back({std::move(name), aggregate(errs)});
        }
    };

    add_group("Freespace", [](const EvaluatedSample& s) { return !obstacle_placement(s.scenario).has_value(); });
    add_group("Obstacles", [](const EvaluatedSample& s) { return obstacle_placement(s.scenario).has_value(); });
    for (auto kind : {ScenarioKind::BaseRight, ScenarioKind::CenterRight, ScenarioKind::TipRight,
                      ScenarioKind::BaseLeft, ScenarioKind::CenterLeft, ScenarioKind::TipLeft}) {
        add_group(std::string(to_string(kind)), [kind](const EvaluatedSample& s) { return s.scenario == kind; });
    }
    add_group("FreespaceLeft", [](const EvaluatedSample& s) { return s.scenario == ScenarioKind::FreespaceLeft; });
    add_group("FreespaceRight", [](const EvaluatedSample& s) { return s.scenario == ScenarioKind::FreespaceRight; });
    add_group("InDistribution", [](const EvaluatedSample& s) { return s.tag == DistributionTag::InDistribution; });
    add_group("OutOfDistribution",
              [](const EvaluatedSample& s) { return s.tag == DistributionTag::OutOfDistribution; });
    return report;
}

UncertaintySummary summarize_uncertainty(std::span<const UncertaintyRow> table,
                                         std::span<const std::pair<double, double>> threshold_pairs) {
    UncertaintySummary s;
    s.rows = table.size();
    double sum_id = 0.0;
    double sum_ood = 0.0;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
    std::vector<double> stds;
    std::vector<double> errs;
    for (const auto& r : table) {
        if (r.tag == DistributionTag::InDistribution) {
            sum_id += r.tip_std;
            ++n_id;
        } else {
            sum_ood += r.tip_std;
            ++n_ood;
        }
        stds.push_back(r.tip_std);
        errs.push_back(r.tip_error);
    }
    s.mean_tip_std_id = n_id ? sum_id / static_cast<double>(n_id) : 0.0;
    s.mean_tip_std_ood = n_ood ? sum_ood / static_cast<double>(n_ood) : 0.0;
    s.spearman = spearman(stds, errs);
    for (const auto& [e, sd] : threshold_pairs) {
        s.false_positives.push_back({e, sd, false_positive_count(table, e, sd)});
    }
    return s;
}

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

void append_table(std::ostringstream& out, const EvalReport& report, bool tip) {
    out << (tip ? "Tip point estimation error [mm]\n" : "Shape estimation error [mm]\n");
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %7s", "", "n");
    out << line;
    for (const char* stat : {"Median", "Max"}) {
        for (const auto& m : report.models) {
            std::snprintf(line, sizeof(line), " %9s", (std::string(stat).substr(0, 3) + ":" + m.model.substr(0, 4)).c_str());
            out << line;
        }
    }
    out << '\n';
    if (report.models.empty()) {
        return;
    }
    for (const auto& g : report.models.front().groups) {
        std::snprintf(line, sizeof(line), "%-18s %7zu", g.group.c_str(), g.errors.tpe.count);
        out << line;
        for (int stat = 0; stat < 2; ++stat) {
            for (const auto& m : report.models) {
                const auto* row = m.find(g.group);
                const ErrorSummary* s = row ? (tip ? &row->errors.tpe : &row->errors.dse) : nullptr;
                const double v = s ? (stat == 0 ? s->median : s->max) : std::nan("");
                std::snprintf(line, sizeof(line), " %9s", fmt3(v).c_str());
                out << line;
            }
        }
        out << '\n';
    }
}

nlohmann::json summary_json(const ErrorSummary& s) {
    return {{"median_mm", s.median}, {"max_mm", s.max}, {"count", s.count}};
}

nlohmann::json uncertainty_json(const UncertaintySummary& u) {
    nlohmann::json fp = nlohmann::json::array();
    for (const auto& e : u.false_positives) {
        fp.push_back({{"error_threshold_mm", e.error_threshold}, {"std_threshold_mm", e.std_threshold},
                      {"count", e.count}});
    }
    return {{"rows", u.rows},
            {"mean_tip_std_id_mm", u.mean_tip_std_id},
            {"mean_tip_std_ood_mm", u.mean_tip_std_ood},
            {"spearman_tip_std_vs_error", u.spearman},
            {"false_positives", fp}};
}

}  // namespace

std::string format_tables(const EvalReport& report) {
    std::ostringstream out;
    append_table(out, report, true);
    out << '\n';
    append_table(out, report, false);
    const auto& u = report.uncertainty;
    out << "\nUncertainty: rows " << u.rows << ", mean tip std id " << fmt3(u.mean_tip_std_id) << " mm, ood "
        << fmt3(u.mean_tip_std_ood) << " mm, spearman " << fmt3(u.spearman) << '\n';
    for (const auto& e : u.false_positives) {
        out << "False positives (error > " << fmt3(e.error_threshold) << " mm, std < " << fmt3(e.std_threshold)
            << " mm): " << e.count << '\n';
    }
    return out.str();
}

std::string to_json_text(const EvalReport& report) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : report.models) {
        nlohmann::json groups = nlohmann::json::array();
        for (const auto& g : m.groups) {
            groups.push_back({{"group", g.group}, {"tpe", summary_json(g.errors.tpe)}, {"dse", summary_json(g.errors.dse)}});
        }
        models.push_back({{"model", m.model}, {"groups", groups}});
    }
    nlohmann::json j{{"models", models}, {"uncertainty", uncertainty_json(report.uncertainty)}};
    return j.dump(2) + "\n";
}

std::string to_json_text(const UncertaintySummary& summary) { return uncertainty_json(summary).dump(2) + "\n"; }

}  // namespace cdms
