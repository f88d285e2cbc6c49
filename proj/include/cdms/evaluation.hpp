#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdms/dataset.hpp"
#include "cdms/uncertainty.hpp"

namespace cdms {

using MarkerErrors = std::array<double, kMarkers>;

MarkerErrors marker_errors(const MarkerSet& pred, const MarkerSet& truth);

// Flat (x1, y1, ..., x30, y30) overload; throws ShapeError on arity mismatch.
MarkerErrors marker_errors(std::span<const double> pred, std::span<const double> truth);

// Interprets a 60-vector as 30 (x, y) markers.
MarkerSet to_markers(const Eigen::VectorXd& flat);

struct ErrorSummary {
    double median = 0.0;  // lower median
    double max = 0.0;
    std::size_t count = 0;
};

ErrorSummary summarize_errors(std::vector<double> pool);

struct TpeDse {
    ErrorSummary tpe;  // tip marker only
    ErrorSummary dse;  // all markers pooled
};

TpeDse aggregate(std::span<const MarkerErrors> per_sample);

enum class DistributionTag { InDistribution, OutOfDistribution };

std::string_view to_string(DistributionTag tag);
std::optional<DistributionTag> tag_from_string(std::string_view name);

struct UncertaintyRow {
    double tip_std = 0.0;    // |(std_x, std_y)| at the tip marker, mm
    double tip_error = 0.0;  // Euclidean tip error, mm
    DistributionTag tag = DistributionTag::InDistribution;
};

std::vector<UncertaintyRow> uncertainty_error_table(std::span<const McPrediction> predictions,
                                                    std::span<const MarkerSet> truths,
                                                    std::span<const DistributionTag> tags);

// Rows with tip_error > error_threshold and tip_std < std_threshold.
std::size_t false_positive_count(std::span<const UncertaintyRow> table, double error_threshold,
                                 double std_threshold);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

void write_uncertainty_csv(std::span<const UncertaintyRow> table, const std::filesystem::path& path);
std::vector<UncertaintyRow> read_uncertainty_csv(const std::filesystem::path& path);

// One evaluated test row of one model.
struct EvaluatedSample {
    ScenarioKind scenario = ScenarioKind::FreespaceLeft;
    DistributionTag tag = DistributionTag::InDistribution;
    MarkerErrors errors{};
};

struct GroupErrors {
    std::string group;
    TpeDse errors;
};

struct ModelReport {
    std::string model;
    std::vector<GroupErrors> groups;

    const GroupErrors* find(std::string_view group) const;
};

// Groups: Freespace, Obstacles, the six placements, then ID and OOD pools.
// Empty groups are omitted.
ModelReport make_model_report(std::string model, std::span<const EvaluatedSample> samples);

struct FalsePositiveEntry {
    double error_threshold = 0.0;
    double std_threshold = 0.0;
    std::size_t count = 0;
};

struct UncertaintySummary {
    double mean_tip_std_id = 0.0;
    double mean_tip_std_ood = 0.0;
    double spearman = 0.0;
    std::size_t rows = 0;
    std::vector<FalsePositiveEntry> false_positives;
};

UncertaintySummary summarize_uncertainty(std::span<const UncertaintyRow> table,
                                         std::span<const std::pair<double, double>> threshold_pairs);

struct EvalReport {
    std::vector<ModelReport> models;
    UncertaintySummary uncertainty;
};

// Tables in the layout of the TPE and DSE error tables (median and max per model).
std::string format_tables(const EvalReport& report);
std::string to_json_text(const EvalReport& report);
std::string to_json_text(const UncertaintySummary& summary);

}  // namespace cdms
