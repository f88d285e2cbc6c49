#include "cdms/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cdms/checkpoint.hpp"
#include "cdms/errors.hpp"
#include "cdms/fbg_model.hpp"
#include "cdms/kinematics.hpp"

namespace cdms {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
}

fs::path require(const fs::path& path) {
    if (!fs::exists(path)) {
        throw IoError("missing input " + path.string());
    }
    return path;
}

// Sample-major feature matrix (n x 8) of normalized features.
Eigen::MatrixXd normalized_rows(const Normalizer& n, std::span<const Sample> samples) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(kFeatures));
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto v = n.normalize(samples[r].features.shifts);
        for (std::size_t j = 0; j < kFeatures; ++j) {
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v[j];
        }
    }
    return x;
}

}  // namespace

GenSummary run_gen(const RunConfig& config, const fs::path& dir) {
    config.validate();
    fs::create_directories(dir);
    const auto data = generate_dataset(config.scenarios, config.generator);
    const auto split = split_by_bend(data.samples, config.ood_kinds, config.train_fraction, config.split_seed);
    write_csv(split.train, dir / files::kTrain);
    write_csv(split.test_id, dir / files::kTestId);
    write_csv(split.test_ood, dir / files::kTestOod);
    save_config(config, dir / files::kResolvedConfig);

    GenSummary s;
    s.train_rows = split.train.size();
    s.test_id_rows = split.test_id.size();
    s.test_ood_rows = split.test_ood.size();
    s.attempted = data.attempted;
    s.skipped = data.skipped;
    s.obstacle_samples = data.obstacle_samples;
    s.skip_fraction = data.skip_fraction();
    s.max_penetration = data.max_penetration;

    const json j{{"train_rows", s.train_rows},       {"test_id_rows", s.test_id_rows},
                 {"test_ood_rows", s.test_ood_rows}, {"attempted", s.attempted},
                 {"skipped", s.skipped},             {"obstacle_samples", s.obstacle_samples},
                 {"skip_fraction", s.skip_fraction}, {"max_penetration_mm", s.max_penetration}};
    write_text(dir / files::kGenSummary, j.dump(2) + "\n");
    return s;
}

TrainSummary run_train(const RunConfig& config, const fs::path& dir) {
    config.validate();
    const auto train_set = read_csv(require(dir / files::kTrain));
    const auto frames = features_of(train_set);
    const Normalizer normalizer = Normalizer::fit(frames);

    MlpModel model = MlpModel::create(config.architecture, config.dropout_rate, config.init_seed);
    model.normalizer = normalizer;
    TrainSummary summary;
    summary.rows = train_set.size();
    summary.curve = train(model, train_set, config.training).curve;
    save(model, dir / files::kDnn);
    write_loss_curve(summary.curve, dir / files::kLossCurve);

    const Eigen::MatrixXd x = normalized_rows(normalizer, train_set);
    const Eigen::MatrixXd y = target_matrix(train_set).transpose();
    LinearModel linear = fit(x, y, FeatureMap::Identity);
    linear.normalizer = normalizer;
    LinearModel poly = fit(x, y, FeatureMap::Poly2);
    poly.normalizer = normalizer;
    save(linear, dir / files::kLinear);
    save(poly, dir / files::kPoly2);
    summary.linear_residual = linear.residual;
    summary.poly2_residual = poly.residual;
    return summary;
}

EvalOutput run_eval(const RunConfig& config, const fs::path& dir) {
    config.validate();
    const MlpModel dnn = load_mlp(require(dir / files::kDnn));
    const LinearModel linear = load_linear(require(dir / files::kLinear));
    const LinearModel poly = load_linear(require(dir / files::kPoly2));

    std::vector<Sample> rows = read_csv(require(dir / files::kTestId));
    const std::size_t n_id = rows.size();
    const auto ood = read_csv(require(dir / files::kTestOod));
    rows.insert(rows.end(), ood.begin(), ood.end());
    if (rows.empty()) {
        throw ConfigError("test sets are empty");
    }

    std::vector<EvaluatedSample> dnn_eval;
    std::vector<EvaluatedSample> lin_eval;
    std::vector<EvaluatedSample> poly_eval;
    std::vector<McPrediction> mc;
    std::vector<MarkerSet> truths;
    std::vector<DistributionTag> tags;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& s = rows[r];
        const auto tag = r < n_id ? DistributionTag::InDistribution : DistributionTag::OutOfDistribution;
        auto pred = mc_predict(dnn, s.features, config.mc_samples, row_seed(config.mc_seed, r), config.omega);
        dnn_eval.push_back({s.scenario, tag, marker_errors(to_markers(pred.mean), s.target)});
        lin_eval.push_back({s.scenario, tag, marker_errors(to_markers(predict_raw(linear, s.features)), s.target)});
        poly_eval.push_back({s.scenario, tag, marker_errors(to_markers(predict_raw(poly, s.features)), s.target)});
        mc.push_back(std::move(pred));
        truths.push_back(s.target);
        tags.push_back(tag);
    }

    EvalOutput out;
    out.report.models.push_back(make_model_report("Lin", lin_eval));
    out.report.models.push_back(make_model_report("Poly", poly_eval));
    out.report.models.push_back(make_model_report("DNN", dnn_eval));
    out.uncertainty = uncertainty_error_table(mc, truths, tags);
    out.report.uncertainty = summarize_uncertainty(out.uncertainty, config.fp_thresholds);

    write_text(dir / files::kReportText, format_tables(out.report));
    write_text(dir / files::kReportJson, to_json_text(out.report));
    write_uncertainty_csv(out.uncertainty, dir / files::kUncertainty);
    return out;
}

UncertaintySummary run_report(const RunConfig& config, const fs::path& dir) {
    const auto table = read_uncertainty_csv(require(dir / files::kUncertainty));
    const auto summary = summarize_uncertainty(table, config.fp_thresholds);
    write_text(dir / files::kFalsePositives, to_json_text(summary));
    return summary;
}

std::vector<WavelengthFrame> read_wavelength_csv(const fs::path& path) {
    std::ifstream in(require(path), std::ios::binary);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing header", 1);
    }
    auto split = [](const std::string& text) {
        std::vector<std::string> out;
        std::stringstream ss(text);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (!field.empty() && field.back() == '\r') {
                field.pop_back();
            }
            out.push_back(field);
        }
        return out;
    };
    const auto header = split(line);
    std::array<std::size_t, kFeatures> col{};
    for (std::size_t j = 0; j < kFeatures; ++j) {
        const std::string name = "dl" + std::to_string(j + 1);
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError("missing column " + name, 1);
        }
        col[j] = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<WavelengthFrame> frames;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split(line);
        WavelengthFrame f;
        for (std::size_t j = 0; j < kFeatures; ++j) {
            if (col[j] >= fields.size()) {
                throw ParseError("too few fields", line_no);
            }
            const auto& text = fields[col[j]];
            const auto res = std::from_chars(text.data(), text.data() + text.size(), f.shifts[j]);
            if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
                throw ParseError("invalid number '" + text + "' in column dl" + std::to_string(j + 1), line_no);
            }
        }
        frames.push_back(f);
    }
    return frames;
}

std::size_t run_infer(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                      const InferOptions& opts) {
    if (opts.k < 1) {
        throw ArgumentError("--k must be at least 1");
    }
    if (!(opts.omega > 0.0)) {
        throw ArgumentError("--omega must be positive");
    }
    const ModelKind kind = peek_model_kind(require(checkpoint));
    const auto frames = read_wavelength_csv(input);

    std::optional<MlpModel> dnn;
    std::optional<LinearModel> baseline;
    if (kind == ModelKind::Mlp) {
        dnn = load_mlp(checkpoint);
    } else {
        baseline = load_linear(checkpoint);
    }

    std::ofstream out(output, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + output.string() + " for writing");
    }
    out << "row";
    for (std::size_t i = 1; i <= kMarkers; ++i) {
        out << ",p" << i << "x,p" << i << "y";
    }
    for (std::size_t i = 1; i <= kMarkers; ++i) {
        out << ",u" << i << "x,u" << i << "y";
    }
    out << '\n';
    char buf[32];
    auto put = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
        out << ',';
        out.write(buf, res.ptr - buf);
    };
    for (std::size_t r = 0; r < frames.size(); ++r) {
        Eigen::VectorXd mean;
        Eigen::VectorXd interval;
        if (dnn) {
            const auto pred = mc_predict(*dnn, frames[r], opts.k, row_seed(opts.seed, r), opts.omega);
            mean = pred.mean;
            interval = confidence_interval(pred, opts.omega);
        } else {
            mean = predict_raw(*baseline, frames[r]);
            interval = Eigen::VectorXd::Zero(mean.size());
        }
        out << r;
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
            put(mean(i));
        }
        for (Eigen::Index i = 0; i < interval.size(); ++i) {
            put(interval(i));
        }
        out << '\n';
    }
    return frames.size();
}

std::vector<VerifyCheck> run_verify(const RunConfig& config, std::uint64_t seed) {
    std::vector<VerifyCheck> checks;
    const auto& cdm = config.generator.cdm;

    {
        const double dev = gradient_check({8, 5, 4, 6}, seed, 10);
        checks.push_back({"gradient_check", dev < 1e-5, dev, "max relative deviation, 8-5-4-6 net, 10 batches"});
    }
    {
        const double angle = tip_angle(free_bend_curvature(cdm.max_cable_disp, cdm), cdm) * 180.0 / std::numbers::pi;
        const double err = std::abs(angle - 81.0);
        checks.push_back({"kinematics_calibration", err <= 1e-9, angle, "tip angle in degrees at full displacement"});
    }
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> strain(-0.02, 0.02);
        const auto& fiber = config.generator.fiber;
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double e = strain(rng);
            const std::size_t node = static_cast<std::size_t>(i) % kFbgNodes;
            const double back = strain_from_shift(wavelength_shift(e, 0.0, fiber, node), fiber, node);
            worst = std::max(worst, std::abs(back - e) / std::max(std::abs(e), 1e-300));
        }
        checks.push_back({"strain_round_trip", worst <= 1e-15, worst, "max relative strain error, 1000 draws"});
    }
    {
        std::mt19937_64 rng(seed + 1);
        std::uniform_real_distribution<double> delta(-cdm.max_cable_disp, cdm.max_cable_disp);
        std::uniform_real_distribution<double> temp(-20.0, 20.0);
        const auto fibers = fiber_pair(config.generator.fiber, cdm.fiber_offset);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const auto profile = free_bend_curvature(delta(rng), cdm);
            const auto cold = common_mode_correct(raw_shifts(profile, fibers, cdm, 0.0));
            const auto warm = common_mode_correct(raw_shifts(profile, fibers, cdm, temp(rng)));
            for (std::size_t j = 0; j < kFeatures; ++j) {
                worst = std::max(worst, std::abs(cold.shifts[j] - warm.shifts[j]));
            }
        }
        checks.push_back({"temperature_compensation", worst <= 1e-12, worst, "max residual after correction, nm"});
    }
    {
        double worst = -std::numeric_limits<double>::infinity();
        bool solved = true;
        for (const auto& obstacle : config.generator.obstacles) {
            const double sign = obstacle.center.y > 0.0 ? 1.0 : -1.0;
            std::optional<CurvatureProfile> previous;
            for (int step = 0; step <= 50; ++step) {
                const double d = sign * cdm.max_cable_disp * step / 50.0;
                try {
                    const auto sol = constrained_bend(d, obstacle, cdm, config.generator.solver,
                                                      previous ? &*previous : nullptr);
                    previous = sol.profile;
                    worst = std::max(worst, max_penetration(shape_from_curvatures(sol.profile, cdm), obstacle, cdm));
                } catch (const SolverError&) {
                    solved = false;
                }
            }
        }
        checks.push_back({"solver_clearance", solved && worst <= config.generator.solver.penetration_tol, worst,
                          "max obstacle penetration over six placements, mm"});
    }
    return checks;
}

}  // namespace cdms
