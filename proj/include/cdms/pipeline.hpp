#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cdms/baselines.hpp"
#include "cdms/config.hpp"
#include "cdms/evaluation.hpp"
#include "cdms/neural_net.hpp"

namespace cdms {

// File names inside a run directory.
namespace files {
inline constexpr const char* kTrain = "train.csv";
inline constexpr const char* kTestId = "test_id.csv";
inline constexpr const char* kTestOod = "test_ood.csv";
inline constexpr const char* kGenSummary = "gen_summary.json";
inline constexpr const char* kResolvedConfig = "config.json";
inline constexpr const char* kDnn = "dnn.ckpt";
inline constexpr const char* kLinear = "linear.ckpt";
inline constexpr const char* kPoly2 = "poly2.ckpt";
inline constexpr const char* kLossCurve = "loss_curve.csv";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kUncertainty = "uncertainty.csv";
inline constexpr const char* kFalsePositives = "fp_summary.json";
}  // namespace files

struct GenSummary {
    std::size_t train_rows = 0;
    std::size_t test_id_rows = 0;
    std::size_t test_ood_rows = 0;
    std::size_t attempted = 0;
    std::size_t skipped = 0;
    std::size_t obstacle_samples = 0;
    double skip_fraction = 0.0;
    double max_penetration = 0.0;
};

// Generates, splits and writes the three dataset CSVs.
GenSummary run_gen(const RunConfig& config, const std::filesystem::path& dir);

struct TrainSummary {
    std::vector<EpochLoss> curve;
    double linear_residual = 0.0;
    double poly2_residual = 0.0;
    std::size_t rows = 0;
};

// Fits the normalizer, trains the DNN and fits both regression baselines.
TrainSummary run_train(const RunConfig& config, const std::filesystem::path& dir);

struct EvalOutput {
    EvalReport report;
    std::vector<UncertaintyRow> uncertainty;
};

// Evaluates the three checkpoints on the ID and OOD test sets and writes the reports.
EvalOutput run_eval(const RunConfig& config, const std::filesystem::path& dir);

// Recomputes the uncertainty summary from the uncertainty CSV.
UncertaintySummary run_report(const RunConfig& config, const std::filesystem::path& dir);

struct InferOptions {
    int k = 100;
    double omega = 3.0;
    std::uint64_t seed = 37;
};

// Reads a CSV with columns dl1..dl8 and writes predicted markers plus
// confidence intervals (zero for regression baselines). Returns the row count.
std::size_t run_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                      const std::filesystem::path& output, const InferOptions& opts);

std::vector<WavelengthFrame> read_wavelength_csv(const std::filesystem::path& path);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
};

std::vector<VerifyCheck> run_verify(const RunConfig& config, std::uint64_t seed);

}  // namespace cdms
