#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdms/dataset.hpp"

namespace cdms {

inline constexpr std::size_t kOutputs = 2 * kMarkers;

// 8 -> 512 -> 256 -> 60.
inline const std::vector<std::size_t> kDefaultArchitecture{kFeatures, 512, 256, kOutputs};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

using LayerGradients = std::vector<DenseLayer>;

// Fully connected ReLU network. Hidden layers are followed by inverted
// dropout; the output layer is linear.
struct MlpModel {
    std::vector<DenseLayer> layers;
    double dropout_rate = 0.3;
    std::optional<Normalizer> normalizer;

    // He-initialized weights, zero biases.
    static MlpModel create(const std::vector<std::size_t>& dims, double dropout_rate, std::uint64_t seed);
    static MlpModel zeros(const std::vector<std::size_t>& dims, double dropout_rate);

    std::vector<std::size_t> dims() const;
    std::size_t input_dim() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layers.back().weight.rows()); }
    std::size_t parameter_count() const;

    void validate() const;
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each hidden layer
    std::vector<Eigen::MatrixXd> masks;   // scaled keep masks, empty when dropout is off
};

// Batched forward pass on normalized inputs (one column per row). Dropout is
// sampled from `dropout_seed` when set and disabled otherwise.
Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& x, std::optional<std::uint64_t> dropout_seed,
                        ForwardCache* cache = nullptr);

Eigen::VectorXd forward(const MlpModel& model, std::span<const double> features,
                        std::optional<std::uint64_t> dropout_seed);

// Dropout-off prediction from raw (un-normalized) wavelength features.
Eigen::VectorXd predict(const MlpModel& model, const WavelengthFrame& features);

// Normalized feature matrix (8 x n) for raw frames.
Eigen::MatrixXd normalized_matrix(const Normalizer& normalizer, std::span<const WavelengthFrame> frames);
Eigen::MatrixXd target_matrix(std::span<const Sample> samples);

struct LossAndGradients {
    double mse = 0.0;
    LayerGradients gradients;
};

LossAndGradients loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    std::optional<std::uint64_t> dropout_seed);

double mse(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Elementwise ADAM update on flat buffers. `step` is the 1-based step index.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamHyper& hyper);

struct AdamState {
    LayerGradients m;
    LayerGradients v;
    std::uint64_t step = 0;
    AdamHyper hyper;

    static AdamState for_model(const MlpModel& model, const AdamHyper& hyper = {});
};

void adam_step(AdamState& state, std::vector<DenseLayer>& params, const LayerGradients& grads);

struct EpochLoss {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainOptions {
    int epochs = 60;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    AdamHyper adam;
    // Cosine decay of the learning rate down to learning_rate * final_lr_fraction.
    double final_lr_fraction = 0.05;
    // Progress hook, called after every epoch with the current weights.
    std::function<void(const EpochLoss&, const MlpModel&)> on_epoch;
};


struct TrainResult {
    std::vector<EpochLoss> curve;
};

// Trains on normalized inputs x (in x n) and targets y (out x n).
TrainResult train(MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const TrainOptions& opts);

// Trains on samples; the model's normalizer must already be fitted on them.
TrainResult train(MlpModel& model, std::span<const Sample> samples, const TrainOptions& opts);

void write_loss_curve(const std::vector<EpochLoss>& curve, const std::filesystem::path& path);

void save(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize(const MlpModel& model);
MlpModel deserialize_mlp(std::vector<std::uint8_t> bytes);

// Max relative deviation between analytic and central-difference gradients
// over `batches` random batches on a random network with dropout off.
double gradient_check(const std::vector<std::size_t>& dims, std::uint64_t seed, int batches = 10,
                      std::size_t batch_rows = 4, double step = 1e-6);

// Same comparison for a given model and batch.
double gradient_deviation(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          double step = 1e-6);

}  // namespace cdms
