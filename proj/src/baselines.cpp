#include "cdms/baselines.hpp"

#include <cmath>
#include <sstream>

#include "cdms/checkpoint.hpp"
#include "cdms/errors.hpp"

namespace cdms {

std::string_view to_string(FeatureMap map) { return map == FeatureMap::Identity ? "identity" : "poly2"; }

std::vector<double> polynomial_features(std::span<const double> x) {
    if (x.size() != kFeatures) {
        throw ShapeError("polynomial features need " + std::to_string(kFeatures) + " inputs, got " +
                         std::to_string(x.size()));
    }
    std::vector<double> out;
    out.reserve(kPoly2Terms);
    out.insert(out.end(), x.begin(), x.end());
    for (double v : x) {
        out.push_back(v * v);
    }
    for (std::size_t i = 0; i < kFeatures; ++i) {
        for (std::size_t j = i + 1; j < kFeatures; ++j) {
            out.push_back(x[i] * x[j]);
        }
    }
    return out;
}

std::size_t feature_arity(FeatureMap map) { return map == FeatureMap::Identity ? kFeatures : kPoly2Terms; }

std::vector<double> apply_feature_map(FeatureMap map, std::span<const double> x) {
    if (map == FeatureMap::Poly2) {
        return polynomial_features(x);
    }
    if (x.size() != kFeatures) {
        throw ShapeError("expected " + std::to_string(kFeatures) + " features, got " + std::to_string(x.size()));
    }
    return {x.begin(), x.end()};
}

void LinearModel::validate() const {
    if (coef.rows() != static_cast<Eigen::Index>(feature_arity(map)) || coef.cols() != intercept.size()) {
        throw ShapeError("coefficient shape does not match the feature map");
    }
}

LinearModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, FeatureMap map, double ridge) {
    if (x.cols() != static_cast<Eigen::Index>(kFeatures)) {
        throw ShapeError("fit expects rows of " + std::to_string(kFeatures) + " features");
    }
    if (x.rows() != y.rows()) {
        throw ShapeError("feature and target row counts differ");
    }
    const auto terms = static_cast<Eigen::Index>(feature_arity(map));
    const Eigen::Index n = x.rows();
    if (n < terms + 1) {
        throw ArgumentError("fit needs at least " + std::to_string(terms + 1) + " rows, got " + std::to_string(n));
    }

    // Design matrix with a trailing intercept column.
    Eigen::MatrixXd design(n, terms + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::VectorXd row = x.row(r).transpose();
        const auto phi = apply_feature_map(map, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
        for (Eigen::Index c = 0; c < terms; ++c) {
            design(r, c) = phi[static_cast<std::size_t>(c)];
        }
        design(r, terms) = 1.0;
    }

    Eigen::MatrixXd gram = design.transpose() * design;
    const double scale = gram.diagonal().mean();
    gram.diagonal().array() += ridge * scale;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double rcond = ldlt.rcond();
    if (ldlt.info() != Eigen::Success || !(rcond > 1e-15)) {
        std::ostringstream msg;
        msg << "normal equations are rank deficient beyond ridge rescue (reciprocal condition estimate " << rcond
            << ")";
        throw ArgumentError(msg.str());
    }
    const Eigen::MatrixXd solution = ldlt.solve(design.transpose() * y);

    LinearModel model;
    model.map = map;
    model.coef = solution.topRows(terms);
    model.intercept = solution.row(terms).transpose();
    const Eigen::MatrixXd resid = design * solution - y;
    model.residual = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    return model;
}

Eigen::VectorXd predict(const LinearModel& model, std::span<const double> x) {
    model.validate();
    const auto phi = apply_feature_map(model.map, x);
    const Eigen::Map<const Eigen::VectorXd> v(phi.data(), static_cast<Eigen::Index>(phi.size()));
    return model.coef.transpose() * v + model.intercept;
}

Eigen::VectorXd predict_raw(const LinearModel& model, const WavelengthFrame& features) {
    if (!model.normalizer) {
        throw ArgumentError("baseline has no fitted normalizer");
    }
    const auto x = model.normalizer->normalize(features.shifts);
    return predict(model, x);
}

std::vector<std::uint8_t> serialize(const LinearModel& model) {
    model.validate();
    ByteWriter out;
    write_checkpoint_header(out, model.map == FeatureMap::Identity ? ModelKind::Linear : ModelKind::Poly2);
    out.u32(static_cast<std::uint32_t>(model.coef.rows()));
    out.u32(static_cast<std::uint32_t>(model.coef.cols()));
    out.u8(model.normalizer ? 1 : 0);
    if (model.normalizer) {
        for (double v : model.normalizer->min) {
            out.f64(v);
        }
        for (double v : model.normalizer->max) {
            out.f64(v);
        }
    }
    for (Eigen::Index i = 0; i < model.coef.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.coef.cols(); ++j) {
            out.f64(model.coef(i, j));
        }
    }
    for (Eigen::Index j = 0; j < model.intercept.size(); ++j) {
        out.f64(model.intercept(j));
    }
    out.f64(model.residual);
    return out.bytes();
}

LinearModel deserialize_linear(std::vector<std::uint8_t> bytes) {
    ByteReader in(std::move(bytes));
    const ModelKind kind = read_checkpoint_header(in);
    if (kind == ModelKind::Mlp) {
        throw CheckpointError(CheckpointErrorKind::WrongKind, "checkpoint holds an MLP, not a regression baseline");
    }
    LinearModel model;
    model.map = kind == ModelKind::Linear ? FeatureMap::Identity : FeatureMap::Poly2;
    const std::uint32_t terms = in.u32();
    const std::uint32_t outputs = in.u32();
    if (terms != feature_arity(model.map) || outputs == 0 || outputs > (1u << 20)) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "coefficient shape does not match the model kind");
    }
    if (in.u8() != 0) {
        Normalizer n;
        for (double& v : n.min) {
            v = in.f64();
        }
        for (double& v : n.max) {
            v = in.f64();
        }
        model.normalizer = n;
    }
    const std::size_t expected = (static_cast<std::size_t>(terms) * outputs + outputs + 1) * 8;
    if (in.remaining() < expected) {
        throw CheckpointError(CheckpointErrorKind::Truncated, "checkpoint is truncated");
    }
    if (in.remaining() > expected) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "trailing bytes after checkpoint payload");
    }
    model.coef.resize(terms, outputs);
    for (Eigen::Index i = 0; i < model.coef.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.coef.cols(); ++j) {
            model.coef(i, j) = in.f64();
        }
    }
    model.intercept.resize(outputs);
    for (Eigen::Index j = 0; j < model.intercept.size(); ++j) {
        model.intercept(j) = in.f64();
    }
    model.residual = in.f64();
    return model;
}

void save(const LinearModel& model, const std::filesystem::path& path) { write_file(path, serialize(model)); }

LinearModel load_linear(const std::filesystem::path& path) { return deserialize_linear(read_file(path)); }

}  // namespace cdms
