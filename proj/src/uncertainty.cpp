#include "cdms/uncertainty.hpp"

#include "cdms/errors.hpp"
#include "cdms/seeds.hpp"

namespace cdms {

McPrediction summarize_samples(const Eigen::MatrixXd& samples, double omega) {
    if (samples.cols() < 1) {
        throw ArgumentError("need at least one Monte Carlo sample");
    }
    const double k = static_cast<double>(samples.cols());
    McPrediction out;
    out.k = static_cast<int>(samples.cols());
    out.omega = omega;
    // Shifted by the first sample: identical samples give exactly zero variance.
    const Eigen::VectorXd shift = samples.col(0);
    const Eigen::MatrixXd d = samples.colwise() - shift;
    const Eigen::VectorXd dm = d.rowwise().sum() / k;
    out.mean = shift + dm;
    out.variance = (d.colwise() - dm).array().square().rowwise().sum() / k;
    out.std = out.variance.array().sqrt();
    return out;
}

McPrediction mc_predict(const MlpModel& model, std::span<const double> normalized_features, int k,
                        std::uint64_t seed, double omega) {
    if (k < 1) {
        throw ArgumentError("K must be at least 1, got " + std::to_string(k));
    }
    const auto in = static_cast<Eigen::Index>(normalized_features.size());
    const Eigen::Map<const Eigen::VectorXd> x(normalized_features.data(), in);
    if (model.dropout_rate == 0.0) {
        // Every pass is the same deterministic pass.
        return summarize_samples(forward(model, Eigen::MatrixXd(x), std::nullopt).replicate(1, k), omega);
    }
    // The K passes run as one batch; every column gets its own dropout masks.
    const Eigen::MatrixXd batch = x.replicate(1, k);
    return summarize_samples(forward(model, batch, seed), omega);
}

McPrediction mc_predict(const MlpModel& model, const WavelengthFrame& features, int k, std::uint64_t seed,
                        double omega) {
    if (!model.normalizer) {
        throw ArgumentError("model has no fitted normalizer");
    }
    const auto x = model.normalizer->normalize(features.shifts);
    return mc_predict(model, x, k, seed, omega);
}

Eigen::VectorXd confidence_interval(const McPrediction& pred, double omega) {
    if (!(omega > 0.0)) {
        throw ArgumentError("omega must be positive");
    }
    return omega * pred.std;
}

Eigen::VectorXd confidence_interval(const McPrediction& pred) { return confidence_interval(pred, pred.omega); }

std::uint64_t row_seed(std::uint64_t seed, std::uint64_t row) { return derive_seed(seed ^ 0x6d635f64726f70ULL, row); }

}  // namespace cdms
