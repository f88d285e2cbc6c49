#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdms/config.hpp"
#include "cdms/errors.hpp"
#include "cdms/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

// Distinct exit statuses per failure class.
enum Exit : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kIo = 4,
    kParse = 5,
    kCheckpoint = 6,
    kSolver = 7,
    kTraining = 8,
    kArgument = 9,
    kVerifyFailed = 10,
};

int exit_code_for(const std::string& code) {
    if (code == "config") return kConfig;
    if (code == "io") return kIo;
    if (code == "parse") return kParse;
    if (code == "checkpoint") return kCheckpoint;
    if (code == "solver") return kSolver;
    if (code == "training") return kTraining;
    if (code == "argument" || code == "range" || code == "shape") return kArgument;
    return kInternal;
}

// Single-line error; newlines in messages are flattened so the line stays parsable.
int fail(const std::string& code, std::string msg, int status) {
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "error: code=%s exit=%d msg=%s\n", code.c_str(), status, msg.c_str());
    return status;
}

cdms::RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                               const std::string& workdir) {
    nlohmann::json j;
    if (path.empty()) {
        j = cdms::to_json(cdms::default_run_config());
    } else {
        if (!fs::exists(path)) {
            throw cdms::IoError("config file not found: " + path);
        }
        j = cdms::to_json(cdms::load_config(path));
    }
    for (const auto& o : overrides) {
        cdms::apply_override(j, o);
    }
    auto config = cdms::config_from_json(j);
    if (!workdir.empty()) {
        config.work_dir = workdir;
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape sensing for a continuum dexterous manipulator from FBG wavelength shifts"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string workdir;
    app.add_option("-c,--config", config_path, "Run configuration (JSON); built-in defaults when omitted");
    app.add_option("--set", overrides, "Override a config value, e.g. --set training.epochs=20 (repeatable)");
    app.add_option("-w,--workdir", workdir, "Run directory for datasets, checkpoints and reports");

    auto* gen = app.add_subcommand("gen", "Generate train / in-distribution / out-of-distribution CSVs");
    auto* train = app.add_subcommand("train", "Train the DNN and fit the linear and poly2 baselines");
    auto* eval = app.add_subcommand("eval", "Evaluate all models on the test sets and write reports");
    auto* report = app.add_subcommand("report", "Summarize uncertainty vs. error and count false positives");
    auto* verify = app.add_subcommand("verify", "Run gradient, physics and solver self-checks");
    auto* show = app.add_subcommand("config", "Print the resolved configuration as JSON");

    auto* infer = app.add_subcommand("infer", "Predict marker positions and intervals from wavelength shifts");
    std::string model_path;
    std::string input_path;
    std::string output_path;
    cdms::InferOptions infer_opts;
    infer->add_option("-m,--model", model_path, "Checkpoint (dnn, linear or poly2)")->required();
    infer->add_option("-i,--input", input_path, "CSV with columns dl1..dl8 (nm)")->required();
    infer->add_option("-o,--output", output_path, "Output CSV: row, p1x..p30y, u1x..u30y (mm)")->required();
    infer->add_option("--k", infer_opts.k, "Monte Carlo dropout samples per row")->capture_default_str();
    infer->add_option("--omega", infer_opts.omega, "Interval scale: u = omega * std")->capture_default_str();
    infer->add_option("--seed", infer_opts.seed, "Dropout seed")->capture_default_str();

    std::uint64_t verify_seed = 1;
    verify->add_option("--seed", verify_seed, "Seed for the random self-check draws")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const auto rest = app.remaining();
        if (!rest.empty() && rest.front().rfind('-', 0) != 0) {
            return fail("usage", "unknown subcommand '" + rest.front() + "'", kUsage);
        }
        return fail("usage", e.what(), kUsage);
    }

    try {
        if (infer->parsed()) {
            const auto rows = cdms::run_infer(model_path, input_path, output_path, infer_opts);
            std::printf("infer: %zu rows -> %s\n", rows, output_path.c_str());
            return kOk;
        }

        const auto config = resolve_config(config_path, overrides, workdir);
        const fs::path dir = config.work_dir;

        if (show->parsed()) {
            std::cout << cdms::to_json(config).dump(2) << '\n';
        } else if (gen->parsed()) {
            const auto s = cdms::run_gen(config, dir);
            std::printf("gen: train=%zu test_id=%zu test_ood=%zu skipped=%zu/%zu max_penetration=%.4g mm\n",
                        s.train_rows, s.test_id_rows, s.test_ood_rows, s.skipped, s.attempted, s.max_penetration);
        } else if (train->parsed()) {
            auto with_progress = config;
            with_progress.training.on_epoch = [](const cdms::EpochLoss& e, const cdms::MlpModel&) {
                std::fprintf(stderr, "epoch %d train_mse=%.6g val_mse=%.6g\n", e.epoch, e.train_mse, e.val_mse);
            };
            const auto s = cdms::run_train(with_progress, dir);
            const auto& last = s.curve.back();
            std::printf("train: rows=%zu epochs=%zu train_mse=%.6g val_mse=%.6g linear_rms=%.6g poly2_rms=%.6g\n",
                        s.rows, s.curve.size(), last.train_mse, last.val_mse, s.linear_residual, s.poly2_residual);
        } else if (eval->parsed()) {
            const auto out = cdms::run_eval(config, dir);
            std::cout << cdms::format_tables(out.report);
        } else if (report->parsed()) {
            std::cout << cdms::to_json_text(cdms::run_report(config, dir)) << '\n';
        } else if (verify->parsed()) {
            bool ok = true;
            for (const auto& c : cdms::run_verify(config, verify_seed)) {
                std::printf("%-26s %s  %.6g  (%s)\n", c.name.c_str(), c.passed ? "ok  " : "FAIL", c.value,
                            c.detail.c_str());
                ok = ok && c.passed;
            }
            if (!ok) {
                return fail("verify", "one or more self-checks failed", kVerifyFailed);
            }
        }
        return kOk;
    } catch (const cdms::Error& e) {
        return fail(e.code(), e.what(), exit_code_for(e.code()));
    } catch (const nlohmann::json::exception& e) {
        return fail("config", e.what(), kConfig);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kInternal);
    }
}
