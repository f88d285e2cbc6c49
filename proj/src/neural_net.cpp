#include "cdms/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "cdms/checkpoint.hpp"
#include "cdms/errors.hpp"
#include "cdms/seeds.hpp"

namespace cdms {

namespace {

// Fills `mask` in place so training reuses its storage across batches.
void fill_dropout_mask(Eigen::MatrixXd& mask, Eigen::Index rows, Eigen::Index cols, double rate,
                       std::mt19937_64& rng) {
    // Two 32-bit uniforms per draw; keep probability resolved to 2^-32.
    const double keep = 1.0 - rate;
    const auto threshold = static_cast<std::uint64_t>(std::ldexp(keep, 32));
    const double scale = 1.0 / keep;
    mask.resize(rows, cols);
    double* data = mask.data();
    const Eigen::Index n = rows * cols;
    Eigen::Index i = 0;
    for (; i + 1 < n; i += 2) {
        const std::uint64_t r = rng();
        data[i] = static_cast<double>((r & 0xffffffffULL) < threshold) * scale;
        data[i + 1] = static_cast<double>((r >> 32) < threshold) * scale;
    }
    if (i < n) {
        data[i] = static_cast<double>((rng() & 0xffffffffULL) < threshold) * scale;
    }
}

void check_same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
    if (a.size() != b.size()) {
        throw ShapeError("layer count mismatch");
    }
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
            a[l].bias.size() != b[l].bias.size()) {
            throw ShapeError("parameter shape mismatch in layer " + std::to_string(l));
        }
    }
}

}  // namespace

MlpModel MlpModel::create(const std::vector<std::size_t>& dims, double dropout_rate, std::uint64_t seed) {
    MlpModel model = zeros(dims, dropout_rate);
    std::mt19937_64 rng(seed);
    for (auto& layer : model.layers) {
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(layer.weight.cols())));
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
            for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
                layer.weight(i, j) = init(rng);
            }
        }
    }
    return model;
}

MlpModel MlpModel::zeros(const std::vector<std::size_t>& dims, double dropout_rate) {
    if (dims.size() < 2) {
        throw ShapeError("an MLP needs at least an input and an output dimension");
    }
    MlpModel model;
    model.dropout_rate = dropout_rate;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(dims[l]);
        const auto out = static_cast<Eigen::Index>(dims[l + 1]);
        model.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    }
    model.validate();
    return model;
}

std::vector<std::size_t> MlpModel::dims() const {
    std::vector<std::size_t> d{input_dim()};
    for (const auto& layer : layers) {
        d.push_back(static_cast<std::size_t>(layer.weight.rows()));
    }
    return d;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return n;
}

void MlpModel::validate() const {
    if (layers.empty()) {
        throw ShapeError("model has no layers");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ArgumentError("dropout rate must lie in [0, 1)");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].weight.rows() != layers[l].bias.size() || layers[l].weight.size() == 0) {
            throw ShapeError("layer " + std::to_string(l) + " has inconsistent weight/bias shapes");
        }
        if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows()) {
            throw ShapeError("layer " + std::to_string(l) + " input does not match previous output");
        }
    }
}

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& x, std::optional<std::uint64_t> dropout_seed,
                        ForwardCache* cache) {
    if (x.rows() != static_cast<Eigen::Index>(model.input_dim())) {
        throw ShapeError("expected " + std::to_string(model.input_dim()) + " input features, got " +
                         std::to_string(x.rows()));
    }
    const bool use_dropout = dropout_seed.has_value() && model.dropout_rate > 0.0;
    std::mt19937_64 rng(dropout_seed.value_or(0));
    const std::size_t n_layers = model.layers.size();

    if (cache == nullptr) {
        Eigen::MatrixXd a = x;
        Eigen::MatrixXd mask;
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
            const auto& layer = model.layers[l];
            Eigen::MatrixXd h = ((layer.weight * a).colwise() + layer.bias).cwiseMax(0.0);
            if (use_dropout) {
                fill_dropout_mask(mask, h.rows(), h.cols(), model.dropout_rate, rng);
                h.array() *= mask.array();
            }
            a = std::move(h);
        }
        const auto& last = model.layers.back();
        return (last.weight * a).colwise() + last.bias;
    }

    // Cached path: buffers keep their storage between calls of the same shape.
    cache->inputs.resize(n_layers);
    cache->pre.resize(n_layers - 1);
    cache->masks.resize(n_layers - 1);
    cache->inputs[0] = x;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        const auto& layer = model.layers[l];
        auto& z = cache->pre[l];
        auto& h = cache->inputs[l + 1];
        z.resize(layer.weight.rows(), x.cols());
        z.noalias() = layer.weight * cache->inputs[l];
        z.colwise() += layer.bias;
        h = z.cwiseMax(0.0);
        if (use_dropout) {
            fill_dropout_mask(cache->masks[l], h.rows(), h.cols(), model.dropout_rate, rng);
            h.array() *= cache->masks[l].array();
        } else {
            cache->masks[l].resize(0, 0);
        }
    }
    const auto& last = model.layers.back();
    Eigen::MatrixXd y = last.weight * cache->inputs.back();
    y.colwise() += last.bias;
    return y;
}

Eigen::VectorXd forward(const MlpModel& model, std::span<const double> features,
                        std::optional<std::uint64_t> dropout_seed) {
    const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
    return forward(model, Eigen::MatrixXd(x), dropout_seed);
}

Eigen::VectorXd predict(const MlpModel& model, const WavelengthFrame& features) {
    if (!model.normalizer) {
        throw ArgumentError("model has no fitted normalizer");
    }
    const auto x = model.normalizer->normalize(features.shifts);
    return forward(model, x, std::nullopt);
}

Eigen::MatrixXd normalized_matrix(const Normalizer& normalizer, std::span<const WavelengthFrame> frames) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kFeatures), static_cast<Eigen::Index>(frames.size()));
    for (std::size_t c = 0; c < frames.size(); ++c) {
        const auto n = normalizer.normalize(frames[c].shifts);
        for (std::size_t j = 0; j < kFeatures; ++j) {
            x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = n[j];
        }
    }
    return x;
}

Eigen::MatrixXd target_matrix(std::span<const Sample> samples) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(kOutputs), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t c = 0; c < samples.size(); ++c) {
        for (std::size_t i = 0; i < kMarkers; ++i) {
            y(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(c)) = samples[c].target[i].x;
            y(static_cast<Eigen::Index>(2 * i + 1), static_cast<Eigen::Index>(c)) = samples[c].target[i].y;
        }
    }
    return y;
}

namespace {

struct BackpropWorkspace {
    ForwardCache cache;
    Eigen::MatrixXd g;
    Eigen::MatrixXd g_prev;
};

// Writes the loss and gradients into `out`, reusing its storage and `ws`.
void loss_and_gradients_into(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             std::optional<std::uint64_t> dropout_seed, BackpropWorkspace& ws,
                             LossAndGradients& out) {
    if (x.cols() == 0) {
        throw ArgumentError("empty batch");
    }
    if (y.cols() != x.cols() || y.rows() != static_cast<Eigen::Index>(model.output_dim())) {
        throw ShapeError("target matrix does not match batch/output shape");
    }
    auto& cache = ws.cache;
    ws.g = forward(model, x, dropout_seed, &cache);
    ws.g -= y;
    const double count = static_cast<double>(ws.g.size());
    out.mse = ws.g.squaredNorm() / count;
    ws.g *= 2.0 / count;
    out.gradients.resize(model.layers.size());

    for (std::size_t l = model.layers.size(); l-- > 0;) {
        if (l + 1 < model.layers.size()) {
            if (cache.masks[l].size() != 0) {
                ws.g.array() *= cache.masks[l].array();
            }
            ws.g.array() *= (cache.pre[l].array() > 0.0).cast<double>();
        }
        auto& grad = out.gradients[l];
        grad.weight.resize(ws.g.rows(), cache.inputs[l].rows());
        grad.weight.noalias() = ws.g * cache.inputs[l].transpose();
        grad.bias = ws.g.rowwise().sum();
        if (l > 0) {
            ws.g_prev.resize(model.layers[l].weight.cols(), ws.g.cols());
            ws.g_prev.noalias() = model.layers[l].weight.transpose() * ws.g;
            std::swap(ws.g, ws.g_prev);
        }
    }
}

}  // namespace

LossAndGradients loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    std::optional<std::uint64_t> dropout_seed) {
    BackpropWorkspace ws;
    LossAndGradients out;
    loss_and_gradients_into(model, x, y, dropout_seed, ws, out);
    return out;
}

double mse(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.cols() == 0) {
        throw ArgumentError("empty batch");
    }
    return (forward(model, x, std::nullopt) - y).squaredNorm() / static_cast<double>(y.size());
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamHyper& hyper) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
        throw ShapeError("adam buffers do not match parameter count");
    }
    if (step == 0) {
        throw ArgumentError("adam step index is 1-based");
    }
    const double s = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(hyper.beta1, s);
    const double c2 = 1.0 - std::pow(hyper.beta2, s);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grads[i];
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

AdamState AdamState::for_model(const MlpModel& model, const AdamHyper& hyper) {
    AdamState state;
    state.hyper = hyper;
    for (const auto& layer : model.layers) {
        DenseLayer zero{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())};
        state.m.push_back(zero);
        state.v.push_back(zero);
    }
    return state;
}

void adam_step(AdamState& state, std::vector<DenseLayer>& params, const LayerGradients& grads) {
    check_same_shape(params, grads);
    check_same_shape(params, state.m);
    check_same_shape(params, state.v);
    ++state.step;
    auto as_span = [](auto& mat) { return std::span(mat.data(), static_cast<std::size_t>(mat.size())); };
    for (std::size_t l = 0; l < params.size(); ++l) {
        adam_update(as_span(params[l].weight), as_span(grads[l].weight), as_span(state.m[l].weight),
                    as_span(state.v[l].weight), state.step, state.hyper);
        adam_update(as_span(params[l].bias), as_span(grads[l].bias), as_span(state.m[l].bias),
                    as_span(state.v[l].bias), state.step, state.hyper);
    }
}

namespace {

void gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx, Eigen::MatrixXd& out) {
    out.resize(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(idx[c]));
    }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
    Eigen::MatrixXd out;
    gather_columns(m, idx, out);
    return out;
}

}  // namespace

TrainResult train(MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const TrainOptions& opts) {
    model.validate();
    if (x.cols() != y.cols()) {
        throw ShapeError("feature and target row counts differ");
    }
    TrainResult result;
    if (opts.epochs <= 0) {
        return result;
    }
    if (x.cols() == 0) {
        throw ArgumentError("no training rows");
    }
    if (opts.batch_size == 0) {
        throw ArgumentError("batch_size must be positive");
    }

    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(
        std::floor(std::clamp(opts.validation_fraction, 0.0, 0.5) * static_cast<double>(order.size())));
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    if (train_idx.empty()) {
        throw ArgumentError("validation split leaves no training rows");
    }
    const Eigen::MatrixXd x_val = gather_columns(x, val_idx);
    const Eigen::MatrixXd y_val = gather_columns(y, val_idx);

    AdamState state = AdamState::for_model(model, opts.adam);
    BackpropWorkspace ws;
    LossAndGradients lg;
    Eigen::MatrixXd xb;
    Eigen::MatrixXd yb;
    const double base_lr = opts.adam.learning_rate;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        const double progress = opts.epochs > 1 ? static_cast<double>(epoch - 1) / (opts.epochs - 1) : 0.0;
        state.hyper.learning_rate =
            base_lr * (opts.final_lr_fraction +
                       (1.0 - opts.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));

        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double weighted = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += opts.batch_size) {
            const std::size_t end = std::min(train_idx.size(), start + opts.batch_size);
            const std::span<const std::size_t> batch(train_idx.data() + start, end - start);
            const std::uint64_t dropout_seed = rng();
            gather_columns(x, batch, xb);
            gather_columns(y, batch, yb);
            loss_and_gradients_into(model, xb, yb, dropout_seed, ws, lg);
            if (!std::isfinite(lg.mse)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << " (batch starting at row " << start
                    << ", loss " << lg.mse << ")";
                throw TrainingError(msg.str());
            }
            adam_step(state, model.layers, lg.gradients);
            weighted += lg.mse * static_cast<double>(batch.size());
        }
        EpochLoss row;
        row.epoch = epoch;
        row.train_mse = weighted / static_cast<double>(train_idx.size());
        row.val_mse = val_idx.empty() ? std::numeric_limits<double>::quiet_NaN() : mse(model, x_val, y_val);
        if (!std::isfinite(row.train_mse)) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch));
        }
        result.curve.push_back(row);
        if (opts.on_epoch) {
            opts.on_epoch(row, model);
        }
    }
    return result;
}

TrainResult train(MlpModel& model, std::span<const Sample> samples, const TrainOptions& opts) {
    if (!model.normalizer) {
        throw ArgumentError("fit the model normalizer on the training features before training");
    }
    const auto frames = features_of(samples);
    return train(model, normalized_matrix(*model.normalizer, frames), target_matrix(samples), opts);
}

void write_loss_curve(const std::vector<EpochLoss>& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "epoch,train_mse,val_mse\n";
    out.precision(17);
    for (const auto& row : curve) {
        out << row.epoch << ',' << row.train_mse << ',' << row.val_mse << '\n';
    }
}

std::vector<std::uint8_t> serialize(const MlpModel& model) {
    model.validate();
    ByteWriter out;
    write_checkpoint_header(out, ModelKind::Mlp);
    const auto dims = model.dims();
    out.u32(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) {
        out.u32(static_cast<std::uint32_t>(d));
    }
    out.f64(model.dropout_rate);
    out.u8(model.normalizer ? 1 : 0);
    if (model.normalizer) {
        for (double v : model.normalizer->min) {
            out.f64(v);
        }
        for (double v : model.normalizer->max) {
            out.f64(v);
        }
    }
    for (const auto& layer : model.layers) {
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                out.f64(layer.weight(i, j));
            }
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            out.f64(layer.bias(i));
        }
    }
    return out.bytes();
}

MlpModel deserialize_mlp(std::vector<std::uint8_t> bytes) {
    ByteReader in(std::move(bytes));
    if (read_checkpoint_header(in) != ModelKind::Mlp) {
        throw CheckpointError(CheckpointErrorKind::WrongKind, "checkpoint does not hold an MLP");
    }
    const std::uint32_t n_dims = in.u32();
    if (n_dims < 2 || n_dims > 64) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "implausible layer count");
    }
    std::vector<std::size_t> dims(n_dims);
    for (auto& d : dims) {
        d = in.u32();
        if (d == 0 || d > (1u << 20)) {
            throw CheckpointError(CheckpointErrorKind::Corrupt, "implausible layer width");
        }
    }
    const double dropout = in.f64();
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "dropout rate out of range");
    }
    std::optional<Normalizer> normalizer;
    if (in.u8() != 0) {
        Normalizer n;
        for (double& v : n.min) {
            v = in.f64();
        }
        for (double& v : n.max) {
            v = in.f64();
        }
        normalizer = n;
    }
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        expected += (dims[l] + 1) * dims[l + 1] * 8;
    }
    if (in.remaining() < expected) {
        throw CheckpointError(CheckpointErrorKind::Truncated, "checkpoint is truncated");
    }
    if (in.remaining() > expected) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "trailing bytes after checkpoint payload");
    }
    MlpModel model = MlpModel::zeros(dims, dropout);
    model.normalizer = normalizer;
    for (auto& layer : model.layers) {
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                layer.weight(i, j) = in.f64();
            }
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            layer.bias(i) = in.f64();
        }
    }
    return model;
}

void save(const MlpModel& model, const std::filesystem::path& path) { write_file(path, serialize(model)); }

MlpModel load_mlp(const std::filesystem::path& path) { return deserialize_mlp(read_file(path)); }

double gradient_deviation(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double step) {
    const auto analytic = loss_and_gradients(model, x, y, std::nullopt).gradients;
    MlpModel probe = model;
    double worst = 0.0;
    auto compare = [&](double& param, double g_a) {
        const double saved = param;
        param = saved + step;
        const double up = mse(probe, x, y);
        param = saved - step;
        const double down = mse(probe, x, y);
        param = saved;
        const double g_fd = (up - down) / (2.0 * step);
        worst = std::max(worst, std::abs(g_a - g_fd) / std::max(1e-8, std::abs(g_a) + std::abs(g_fd)));
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        auto& layer = probe.layers[l];
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            compare(layer.weight.data()[i], analytic[l].weight.data()[i]);
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            compare(layer.bias(i), analytic[l].bias(i));
        }
    }
    return worst;
}

double gradient_check(const std::vector<std::size_t>& dims, std::uint64_t seed, int batches, std::size_t batch_rows,
                      double step) {
    double worst = 0.0;
    for (int b = 0; b < batches; ++b) {
        const std::uint64_t batch_seed = derive_seed(seed, static_cast<std::uint64_t>(b));
        MlpModel model = MlpModel::create(dims, 0.0, batch_seed);
        std::mt19937_64 rng(mix_seed(batch_seed));
        std::normal_distribution<double> unit(0.0, 1.0);
        for (auto& layer : model.layers) {
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
                layer.bias(i) = 0.1 * unit(rng);
            }
        }
        const auto rows = static_cast<Eigen::Index>(batch_rows);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(dims.front()), rows);
        Eigen::MatrixXd y(static_cast<Eigen::Index>(dims.back()), rows);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x.data()[i] = unit(rng);
        }
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y.data()[i] = unit(rng);
        }
        worst = std::max(worst, gradient_deviation(model, x, y, step));
    }
    return worst;
}

}  // namespace cdms
