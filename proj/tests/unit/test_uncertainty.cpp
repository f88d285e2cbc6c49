#include <doctest.h>

#include "cdms/errors.hpp"
#include "cdms/uncertainty.hpp"

using namespace cdms;

TEST_CASE("sample statistics use the population variance") {
    Eigen::MatrixXd s(1, 2);
    s << 0.0, 2.0;
    const auto p = summarize_samples(s);
    CHECK(p.mean(0) == 1.0);
    CHECK(p.variance(0) == 1.0);
    CHECK(p.std(0) == 1.0);
    CHECK(p.k == 2);

    const auto single = summarize_samples(Eigen::MatrixXd::Constant(3, 1, 4.0));
    CHECK(single.variance.isZero(0.0));
}

TEST_CASE("no dropout means no spread") {
    const auto m = MlpModel::create(kDefaultArchitecture, 0.0, 4);
    const std::vector<double> x{0.2, 0.4, 0.6, 0.8, 0.1, 0.3, 0.5, 0.7};
    const auto p = mc_predict(m, x, 10, 1);
    CHECK(p.variance.isZero(0.0));
    CHECK((p.mean - forward(m, x, std::nullopt)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout sampling is seeded") {
    const auto m = MlpModel::create(kDefaultArchitecture, 0.3, 4);
    const std::vector<double> x{0.2, 0.4, 0.6, 0.8, 0.1, 0.3, 0.5, 0.7};
    const auto a = mc_predict(m, x, 25, 9);
    const auto b = mc_predict(m, x, 25, 9);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.variance.maxCoeff() > 0.0);
    CHECK_THROWS_AS(mc_predict(m, x, 0, 9), ArgumentError);
    CHECK(row_seed(9, 0) != row_seed(9, 1));
}

TEST_CASE("confidence interval") {
    McPrediction p;
    p.std = Eigen::VectorXd::Constant(2, 0.1);
    p.std(1) = 0.0;
    const auto u = confidence_interval(p, 3.0);
    CHECK(u(0) == doctest::Approx(0.3));
    CHECK(u(1) == 0.0);
    CHECK(confidence_interval(p, 6.0)(0) == doctest::Approx(2.0 * u(0)));
    CHECK_THROWS_AS(confidence_interval(p, 0.0), ArgumentError);
}
