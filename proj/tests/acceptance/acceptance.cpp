// End-to-end acceptance suite: prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cdms/baselines.hpp"
#include "cdms/config.hpp"
#include "cdms/fbg_model.hpp"
#include "cdms/kinematics.hpp"
#include "cdms/neural_net.hpp"
#include "cdms/pipeline.hpp"
#include "cdms/uncertainty.hpp"

using namespace cdms;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome kinematics_calibration() {
    const CdmConfig c;
    const double deg = tip_angle(free_bend_curvature(5.0, c), c) * 180.0 / std::numbers::pi;
    return {std::abs(deg - 81.0) <= 1e-9, fmt("tip angle %.12f deg", deg)};
}

Outcome forward_kinematics_oracle() {
    const CdmConfig c;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-0.09, 0.09);
    double worst = 0.0;
    const int steps = 1'000'000;
    for (int i = 0; i < 20; ++i) {
        const double k = dist(rng);
        CurvatureProfile p;
        p.kappa.fill(k);
        const Vec2 tip = shape_from_curvatures(p, c).markers.back();
        const double h = c.dexterous_length / steps;
        double x = 0.0, y = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double arc = (s + 0.5) * h;
            x += std::cos(k * arc) * h;
            y += std::sin(k * arc) * h;
        }
        worst = std::max(worst, std::hypot(tip.x - x, tip.y - y));
    }
    return {worst < 1e-6, fmt("max |tip - quadrature| = %.3e mm over 20 curvatures", worst)};
}

Outcome physics_round_trip() {
    const FiberSpec fiber;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> strain(-0.02, 0.02);
    double worst_rel = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double e = strain(rng);
        const std::size_t node = static_cast<std::size_t>(i) % kFbgNodes;
        const double back = strain_from_shift(wavelength_shift(e, 0.0, fiber, node), fiber, node);
        worst_rel = std::max(worst_rel, std::abs(back - e) / std::abs(e));
    }

    const CdmConfig c;
    const auto fibers = fiber_pair(fiber, c.fiber_offset);
    std::uniform_real_distribution<double> delta(-5.0, 5.0);
    std::uniform_real_distribution<double> temp(-40.0, 40.0);
    double worst_nm = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto p = free_bend_curvature(delta(rng), c);
        const auto ref = common_mode_correct(raw_shifts(p, fibers, c, 0.0));
        const auto hot = common_mode_correct(raw_shifts(p, fibers, c, temp(rng)));
        for (std::size_t j = 0; j < kFeatures; ++j) {
            worst_nm = std::max(worst_nm, std::abs(ref.shifts[j] - hot.shifts[j]));
        }
    }
    return {worst_rel <= 1e-15 && worst_nm <= 1e-12,
            fmt("strain rel. error %.2e, temperature residual %.2e nm", worst_rel, worst_nm)};
}

Outcome gradient_oracle() {
    const std::vector<std::vector<std::size_t>> nets{{8, 5, 4, 6}, {8, 7, 3},     {8, 6, 6, 6, 2}, {4, 9, 5},
                                                      {8, 5, 4, 6}, {3, 3, 3, 3}, {8, 12, 60},     {8, 5, 4, 6},
                                                      {6, 4, 8, 2}, {8, 10, 10, 4}};
    double worst = 0.0;
    for (std::size_t i = 0; i < nets.size(); ++i) {
        worst = std::max(worst, gradient_check(nets[i], 100 + i, 1));
    }
    return {worst < 1e-5, fmt("max relative deviation %.3e over 10 nets", worst)};
}

Outcome adam_oracle() {
    const AdamHyper h;
    std::vector<double> p{0.0}, g{1.0}, m{0.0}, v{0.0};
    adam_update(p, g, m, v, 1, h);
    const double first = p[0];
    adam_update(p, g, m, v, 2, h);
    const double second = p[0];
    const bool ok = std::abs(first - -9.99999999e-4) < 1e-8 && std::abs(second - -1.99999e-3) < 1e-8;
    return {ok, fmt("steps %.10e, %.10e", first, second)};
}

Outcome baseline_oracle(const TrainSummary& trained) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        return m;
    };
    const Eigen::MatrixXd x = random_matrix(400, 8);
    const Eigen::MatrixXd w = random_matrix(8, 60);
    const Eigen::RowVectorXd b = random_matrix(1, 60);
    const Eigen::MatrixXd y = (x * w).rowwise() + b;
    const auto lin = fit(x, y, FeatureMap::Identity);
    const double coef_err = (lin.coef - w).cwiseAbs().maxCoeff();

    bool nested = trained.poly2_residual <= trained.linear_residual;
    for (int d = 0; d < 5; ++d) {
        const Eigen::MatrixXd xd = random_matrix(300, 8);
        Eigen::MatrixXd yd = random_matrix(300, 4);
        yd.col(0) += xd.col(1).cwiseProduct(xd.col(2));
        const double rl = fit(xd, yd, FeatureMap::Identity).residual;
        const double rp = fit(xd, yd, FeatureMap::Poly2).residual;
        nested = nested && rp <= rl;
    }
    return {lin.residual < 1e-8 && coef_err < 1e-8 && nested,
            fmt("linear recovery residual %.2e (coef err %.2e); benchmark residuals lin %.4f poly2 %.4f mm",
                lin.residual, coef_err, trained.linear_residual, trained.poly2_residual)};
}

Outcome benchmark(const EvalOutput& eval, double runtime_s) {
    const auto* dnn = eval.report.models[2].find("InDistribution");
    const auto* lin = eval.report.models[0].find("InDistribution");
    if (dnn == nullptr || lin == nullptr) {
        return {false, "no in-distribution rows"};
    }
    const double dse = dnn->errors.dse.median;
    const double tpe = dnn->errors.tpe.median;
    const double lin_tpe = lin->errors.tpe.median;
    const bool ok = dse < 0.2 && tpe < 0.5 && tpe <= lin_tpe && runtime_s < 20 * 60;
    return {ok, fmt("ID median DSE %.4f mm, TPE %.4f mm (linear TPE %.4f mm), pipeline %.0f s", dse, tpe, lin_tpe,
                    runtime_s)};
}

Outcome calibration(const EvalOutput& eval) {
    const auto& u = eval.report.uncertainty;
    std::size_t fp = 0;
    for (const auto& e : u.false_positives) {
        if (e.error_threshold == 1.5 && e.std_threshold == 1.0) fp = e.count;
    }
    const double allowed = 0.001 * static_cast<double>(u.rows);
    const bool ok = u.mean_tip_std_ood > u.mean_tip_std_id && u.spearman > 0.2 && static_cast<double>(fp) <= allowed;
    return {ok, fmt("mean tip std ID %.4f / OOD %.4f mm, spearman %.3f, false positives %zu of %zu rows",
                    u.mean_tip_std_id, u.mean_tip_std_ood, u.spearman, fp, u.rows)};
}

Outcome throughput(const fs::path& dnn_path) {
    const MlpModel model = load_mlp(dnn_path);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto rate = [&](int k) {
        std::vector<double> x(kFeatures);
        int n = 0;
        const auto t0 = Clock::now();
        while (seconds_since(t0) < 1.0) {
            for (double& v : x) v = u(rng);
            const auto p = mc_predict(model, x, k, static_cast<std::uint64_t>(n));
            if (p.k != k) return 0.0;
            ++n;
        }
        return n / seconds_since(t0);
    };
    const double hz100 = rate(100);
    const double hz25 = rate(25);
    return {hz100 >= 11.0 && hz25 >= 44.0, fmt("K=100: %.1f Hz, K=25: %.1f Hz", hz100, hz25)};
}

Outcome solver_audit(const GenSummary& gen) {
    return {gen.max_penetration <= 0.05 && gen.skip_fraction < 0.05,
            fmt("max penetration %.4f mm over %zu obstacle rows, skipped %zu/%zu (%.2f%%)", gen.max_penetration,
                gen.obstacle_samples, gen.skipped, gen.attempted, 100.0 * gen.skip_fraction)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const fs::path& a, const fs::path& b) {
    const char* artifacts[] = {files::kTrain,      files::kTestId,    files::kTestOod,    files::kGenSummary,
                               files::kDnn,        files::kLinear,    files::kPoly2,      files::kLossCurve,
                               files::kReportText, files::kReportJson, files::kUncertainty};
    std::string differing;
    for (const char* name : artifacts) {
        const auto x = slurp(a / name);
        if (x.empty() || x != slurp(b / name)) differing += std::string(differing.empty() ? "" : ",") + name;
    }
    return {differing.empty(), differing.empty() ? fmt("%zu artifacts byte-identical", std::size(artifacts))
                                                 : "differs: " + differing};
}

struct PipelineRun {
    GenSummary gen;
    TrainSummary train;
    EvalOutput eval;
    double seconds = 0.0;
};

PipelineRun run_pipeline(RunConfig config, const fs::path& dir) {
    fs::remove_all(dir);
    config.training.on_epoch = [](const EpochLoss& e, const MlpModel&) {
        if (e.epoch % 10 == 0) {
            std::printf("    epoch %3d train mse %.5f val mse %.5f\n", e.epoch, e.train_mse, e.val_mse);
            std::fflush(stdout);
        }
    };
    PipelineRun r;
    const auto t0 = Clock::now();
    r.gen = run_gen(config, dir);
    std::printf("  [%s] gen %.0f s: %zu train / %zu id / %zu ood rows\n", dir.filename().c_str(), seconds_since(t0),
                r.gen.train_rows, r.gen.test_id_rows, r.gen.test_ood_rows);
    std::fflush(stdout);
    r.train = run_train(config, dir);
    std::printf("  [%s] train %.0f s: final train mse %.5f, val mse %.5f\n", dir.filename().c_str(),
                seconds_since(t0), r.train.curve.back().train_mse, r.train.curve.back().val_mse);
    std::fflush(stdout);
    r.eval = run_eval(config, dir);
    r.seconds = seconds_since(t0);
    std::printf("  [%s] eval done, %.0f s total\n", dir.filename().c_str(), r.seconds);
    std::fflush(stdout);
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path workdir = "acceptance_run";
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--workdir") workdir = argv[i + 1];
    }

    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2d %-28s %s  %s  [%.1f s]\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    };

    report(1, "kinematics-calibration", kinematics_calibration);
    report(2, "forward-kinematics-oracle", forward_kinematics_oracle);
    report(3, "physics-round-trip", physics_round_trip);
    report(4, "gradient-check", gradient_oracle);
    report(5, "adam-oracle", adam_oracle);

    const RunConfig config = default_run_config();
    std::optional<PipelineRun> first;
    std::optional<PipelineRun> second;
    std::string pipeline_error;
    try {
        first = run_pipeline(config, workdir / "run_a");
        second = run_pipeline(config, workdir / "run_b");
    } catch (const std::exception& e) {
        pipeline_error = e.what();
        std::printf("  pipeline failed: %s\n", e.what());
    }
    auto need = [&](const std::optional<PipelineRun>& r) {
        if (!r) throw std::runtime_error("pipeline did not complete: " + pipeline_error);
        return *r;
    };

    report(6, "baseline-oracle", [&] { return baseline_oracle(need(first).train); });
    report(7, "end-to-end-benchmark", [&] { return benchmark(need(first).eval, need(first).seconds); });
    report(8, "uncertainty-calibration", [&] { return calibration(need(first).eval); });
    report(9, "throughput", [&] { return throughput(workdir / "run_a" / files::kDnn); });
    report(10, "constrained-bend-audit", [&] { return solver_audit(need(first).gen); });
    report(11, "determinism", [&] {
        need(second);
        return determinism(workdir / "run_a", workdir / "run_b");
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
