#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cdms/checkpoint.hpp"
#include "cdms/errors.hpp"
#include "cdms/neural_net.hpp"

using namespace cdms;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cdms_unit";
    fs::create_directories(dir);
    return dir / name;
}

// Straightforward scalar ADAM, written out independently of the library.
double reference_adam(double p, const std::vector<double>& grads) {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0.0, v = 0.0;
    int t = 0;
    for (double g : grads) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        p -= lr * mh / (std::sqrt(vh) + eps);
    }
    return p;
}

}  // namespace

TEST_CASE("default architecture") {
    const auto m = MlpModel::create(kDefaultArchitecture, 0.3, 1);
    CHECK(m.dims() == std::vector<std::size_t>{8, 512, 256, 60});
    CHECK(m.parameter_count() == 8 * 512 + 512 + 512 * 256 + 256 + 256 * 60 + 60);
    CHECK(m.input_dim() == 8);
    CHECK(m.output_dim() == 60);
}

TEST_CASE("zero network outputs zeros") {
    const auto m = MlpModel::zeros(kDefaultArchitecture, 0.3);
    const std::vector<double> x{1, -2, 3, 0.5, 0, 0, 7, 1};
    const auto y = forward(m, x, std::nullopt);
    CHECK(y.size() == 60);
    CHECK(y.isZero(0.0));
    CHECK(forward(m, x, 5).isZero(0.0));
}

TEST_CASE("dropout modes") {
    const std::vector<double> x{0.1, 0.9, 0.3, 0.4, 0.5, 0.2, 0.7, 0.8};
    const auto plain = MlpModel::create(kDefaultArchitecture, 0.0, 3);
    CHECK(forward(plain, x, 11) == forward(plain, x, std::nullopt));

    const auto dropped = MlpModel::create(kDefaultArchitecture, 0.3, 3);
    CHECK(forward(dropped, x, 11) == forward(dropped, x, 11));
    CHECK(forward(dropped, x, 11) != forward(dropped, x, 12));
    CHECK(forward(dropped, x, 11) != forward(dropped, x, std::nullopt));
}

TEST_CASE("loss and gradients") {
    const auto m = MlpModel::create({3, 4, 2}, 0.0, 2);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
    const Eigen::MatrixXd y = forward(m, x, std::nullopt);
    const auto lg = loss_and_gradients(m, x, y, std::nullopt);
    CHECK(lg.mse == 0.0);
    for (const auto& g : lg.gradients) {
        CHECK(g.weight.isZero(0.0));
        CHECK(g.bias.isZero(0.0));
    }

    // One linear output unit: pred = bias = 2, target 0 -> loss 4, dL/dpred = 4.
    MlpModel single = MlpModel::zeros({1, 1}, 0.0);
    single.layers[0].bias(0) = 2.0;
    const auto one = loss_and_gradients(single, Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                                        std::nullopt);
    CHECK(one.mse == 4.0);
    CHECK(one.gradients[0].bias(0) == 4.0);
}

TEST_CASE("gradient check") {
    CHECK(gradient_check({8, 5, 4, 6}, 1, 10) < 1e-5);
    CHECK(gradient_check({8, 5, 4, 6}, 99, 10) < 1e-5);

    const auto zero = MlpModel::zeros({8, 5, 4, 6}, 0.0);
    CHECK(gradient_deviation(zero, Eigen::MatrixXd::Zero(8, 4), Eigen::MatrixXd::Zero(6, 4)) == 0.0);

    auto net = MlpModel::create({8, 5, 4, 6}, 0.0, 4);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(8, 4);
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(6, 4);
    const Eigen::MatrixXd xr = x.rowwise().reverse();
    const Eigen::MatrixXd yr = y.rowwise().reverse();
    CHECK(gradient_deviation(net, xr, yr) == doctest::Approx(gradient_deviation(net, x, y)).epsilon(1e-3));
}

TEST_CASE("adam matches hand-iterated steps") {
    const AdamHyper h;
    std::vector<double> p{0.0}, g{1.0}, m{0.0}, v{0.0};
    adam_update(p, g, m, v, 1, h);
    CHECK(p[0] == doctest::Approx(-9.99999999e-4).epsilon(1e-9));
    CHECK(std::abs(p[0] - reference_adam(0.0, {1.0})) < 1e-15);
    adam_update(p, g, m, v, 2, h);
    CHECK(std::abs(p[0] - (-1.99999e-3)) < 1e-8);
    CHECK(std::abs(p[0] - reference_adam(0.0, {1.0, 1.0})) < 1e-15);

    std::vector<double> q{0.5}, zero{0.0}, m2{0.0}, v2{0.0};
    adam_update(q, zero, m2, v2, 1, h);
    CHECK(q[0] == 0.5);
}

TEST_CASE("training fits a linear map") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::Index n = 500;
    Eigen::MatrixXd x(8, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    Eigen::MatrixXd w(4, 8);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng) * 2.0 - 1.0;
    const Eigen::MatrixXd y = w * x;

    auto model = MlpModel::create({8, 32, 4}, 0.0, 5);
    TrainOptions opts;
    opts.epochs = 200;
    opts.batch_size = 32;
    opts.seed = 1;
    opts.validation_fraction = 0.0;
    const auto result = train(model, x, y, opts);
    REQUIRE(result.curve.size() == 200);
    CHECK(mse(model, x, y) < 1e-2);

    auto twin = MlpModel::create({8, 32, 4}, 0.0, 5);
    const auto again = train(twin, x, y, opts);
    for (std::size_t i = 0; i < result.curve.size(); ++i) {
        CHECK(result.curve[i].train_mse == again.curve[i].train_mse);
    }
}

TEST_CASE("zero epochs leave the model unchanged") {
    auto model = MlpModel::create({8, 6, 2}, 0.3, 5);
    const auto before = serialize(model);
    TrainOptions opts;
    opts.epochs = 0;
    train(model, Eigen::MatrixXd::Random(8, 20), Eigen::MatrixXd::Random(2, 20), opts);
    CHECK(serialize(model) == before);
}

TEST_CASE("checkpoint round trip and errors") {
    auto model = MlpModel::create({8, 16, 60}, 0.3, 6);
    Normalizer n;
    n.min.fill(-1.0);
    n.max.fill(2.0);
    model.normalizer = n;
    const auto path = temp_file("m.ckpt");
    save(model, path);
    const auto back = load_mlp(path);
    CHECK(back.normalizer == model.normalizer);
    CHECK(back.dropout_rate == model.dropout_rate);
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    CHECK(forward(back, x, std::nullopt) == forward(model, x, std::nullopt));
    CHECK(forward(back, x, 3) == forward(model, x, 3));
    CHECK(peek_model_kind(path) == ModelKind::Mlp);

    auto bytes = serialize(model);
    auto cut = bytes;
    cut.resize(cut.size() / 2);
    try {
        deserialize_mlp(cut);
        FAIL("expected truncation");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointErrorKind::Truncated);
    }

    auto newer = bytes;
    newer[4] = static_cast<std::uint8_t>(kCheckpointVersion + 1);
    try {
        deserialize_mlp(newer);
        FAIL("expected version error");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointErrorKind::UnsupportedVersion);
    }

    auto garbage = bytes;
    garbage[0] = 'X';
    try {
        deserialize_mlp(garbage);
        FAIL("expected magic error");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointErrorKind::BadMagic);
    }
}
