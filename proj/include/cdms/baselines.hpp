#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdms/dataset.hpp"

namespace cdms {

enum class FeatureMap { Identity, Poly2 };

std::string_view to_string(FeatureMap map);

// 8 linear terms, 8 squares, then the 28 products x_i*x_j (i < j) in
// lexicographic (i, j) order. The bias lives in the model intercept.
inline constexpr std::size_t kPoly2Terms = kFeatures + kFeatures + kFeatures * (kFeatures - 1) / 2;

std::vector<double> polynomial_features(std::span<const double> x);

std::size_t feature_arity(FeatureMap map);
std::vector<double> apply_feature_map(FeatureMap map, std::span<const double> x);

// y = W^T phi(x) + b with W of shape (terms x outputs).
struct LinearModel {
    FeatureMap map = FeatureMap::Identity;
    Eigen::MatrixXd coef;       // terms x outputs
    Eigen::VectorXd intercept;  // outputs
    double residual = 0.0;      // RMS training residual
    std::optional<Normalizer> normalizer;  // applied by predict_raw

    void validate() const;
};

inline constexpr double kBaselineRidge = 1e-10;

// Least-squares fit via ridge-stabilized normal equations. Rows of `x` are
// samples (n x 8), rows of `y` targets (n x outputs).
LinearModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, FeatureMap map, double ridge = kBaselineRidge);

Eigen::VectorXd predict(const LinearModel& model, std::span<const double> x);

// Normalizes raw wavelength features with the embedded normalizer first.
Eigen::VectorXd predict_raw(const LinearModel& model, const WavelengthFrame& features);

std::vector<std::uint8_t> serialize(const LinearModel& model);
LinearModel deserialize_linear(std::vector<std::uint8_t> bytes);
void save(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_linear(const std::filesystem::path& path);

}  // namespace cdms
