#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "cdms/neural_net.hpp"

namespace cdms {

// Monte Carlo dropout statistics of one input.
struct McPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // population variance over the K samples
    Eigen::VectorXd std;       // sqrt(variance), mm
    int k = 0;
    double omega = 3.0;
};

// Per-output mean and population variance of K sampled predictions (one column each).
McPrediction summarize_samples(const Eigen::MatrixXd& samples, double omega = 3.0);

// K dropout-enabled passes on normalized features.
McPrediction mc_predict(const MlpModel& model, std::span<const double> normalized_features, int k,
                        std::uint64_t seed, double omega = 3.0);

// Same, normalizing raw wavelength features with the model's normalizer.
McPrediction mc_predict(const MlpModel& model, const WavelengthFrame& features, int k, std::uint64_t seed,
                        double omega = 3.0);

// u = omega * std.
Eigen::VectorXd confidence_interval(const McPrediction& pred, double omega);
Eigen::VectorXd confidence_interval(const McPrediction& pred);

// Seed used for row `row` when predicting a batch with base seed `seed`.
std::uint64_t row_seed(std::uint64_t seed, std::uint64_t row);

}  // namespace cdms
