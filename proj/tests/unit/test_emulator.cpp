#include "doctest.h"

#include "instances.hpp"
#include "mechemu/emulator.hpp"
#include "mechemu/errors.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace mechemu;
using testing_instances::random_instance;

TEST_CASE("correlation kernel") {
    ParameterVector a(2), b(2);
    a << 0.0, 0.0;
    b << 3.0, 4.0;
    const Eigen::Vector2d rho(1.0, 1.0);
    const auto C = correlation_matrix({a, b}, 5.0, rho);
    CHECK(C(0, 0) == 1.0);
    CHECK(C(0, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(C(1, 0) == C(0, 1));
    ParameterVector far(2);
    double prev = 1.0;
    for (double d : {1.0, 2.0, 5.0, 20.0, 100.0}) {
        far << d, 0.0;
        const double c = correlation_vector({a}, far, 5.0, rho)[0];
        CHECK(c < prev);
        prev = c;
    }
    CHECK(prev < 1e-8);
}

TEST_CASE("process noise increments") {
    CoupledSystem sys;
    sys.kappas = Eigen::Vector2d(-1.0, -1.0);
    sys.gains = Eigen::Vector2d(1.0, 1.0);
    sys.correlation = Eigen::Matrix2d{{1.0, 0.3}, {0.3, 1.0}};
    sys.input = Eigen::VectorXd::Zero(1);
    sys.sigma = 2.0;
    sys.dt = std::log(2.0);
    const Discretization d = discretize(sys);
    CHECK(d.transition[0] == doctest::Approx(0.5));
    CHECK(d.process_noise(0, 1) == doctest::Approx(4.0 * 0.3 * 3.0 / 8.0));

    sys.kappas = Eigen::Vector2d(-0.7, -2.1);
    sys.dt = 0.9;
    const Discretization e = discretize(sys);
    const double quad =
        oracle::simpson([&](double u) { return std::exp(-0.7 * u) * std::exp(-2.1 * u); }, 0.0, 0.9, 2000);
    CHECK(std::abs(e.process_noise(0, 1) - 4.0 * 0.3 * quad) <= 1e-10);

    CoupledSystem one;
    one.kappas = Eigen::VectorXd::Constant(1, -1.0);
    one.gains = Eigen::VectorXd::Ones(1);
    one.correlation = Eigen::MatrixXd::Ones(1, 1);
    one.input = Eigen::VectorXd::Zero(1);
    one.sigma = 1.5;
    one.dt = 1e-7;
    CHECK(discretize(one).process_noise(0, 0) == doctest::Approx(1.5 * 1.5 * 1e-7).epsilon(1e-6));
}

TEST_CASE("prior output covariance diagonal") {
    const double k = -0.01, h = 3.0, s = 0.5, t = 250.0;
    CHECK(prior_output_covariance(k, k, h, h, 1.0, s, t, t) ==
          doctest::Approx(s * s * h * h * (1.0 - std::exp(2.0 * k * t)) / (-2.0 * k)));
}

TEST_CASE("predicted rmse") {
    EmulatorPrediction p;
    p.variance = Eigen::VectorXd::Ones(4);
    CHECK(predicted_rmse(p) == doctest::Approx(1.0));
    p.variance = Eigen::Vector2d(0.0, 2.0);
    CHECK(predicted_rmse(p) == doctest::Approx(1.0));
}

TEST_CASE("kalman conditioning matches the dense oracle") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const int n = 1 + static_cast<int>(seed % 4);
        const auto in = random_instance(seed, n, 8 + static_cast<int>(seed % 13));
        const EmulatorOptions opts;
        const Emulator em(in.design, in.rain, in.aux, in.catchment, opts);
        CHECK(em.jitter_variance() == doctest::Approx(testing_instances::jitter_variance(in, opts.jitter)));
        const auto p = em.predict(in.query);
        const auto o = testing_instances::oracle_condition(in, in.query, opts.jitter);
        const double scale = o.mean.cwiseAbs().maxCoeff();
        const double vscale = o.variance.cwiseAbs().maxCoeff() + 1e-300;
        CHECK((p.mean.values - o.mean).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        CHECK((p.variance - o.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-8 * vscale);
        CHECK(em.predict_mean(in.query).isApprox(p.mean.values, 1e-12));

        const auto d = dense_condition(in.design, in.aux, in.rain, in.catchment, in.query, opts);
        CHECK((d.prediction.mean.values - o.mean).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
}

TEST_CASE("interpolation at design points") {
    const auto in = random_instance(77, 4, 20);
    const Emulator em(in.design, in.rain, in.aux, in.catchment);
    const double prior_max = testing_instances::jitter_variance(in, 1.0);
    for (std::size_t a = 0; a < in.design.size(); ++a) {
        const auto p = em.predict(in.design.points[a]);
        const double scale = in.design.outputs[a].values.cwiseAbs().maxCoeff();
        CHECK((p.mean.values - in.design.outputs[a].values).cwiseAbs().maxCoeff() <= 1e-6 * scale);
        CHECK(p.variance.maxCoeff() <= 1e-4 * prior_max);
    }
}

TEST_CASE("prior reversion far from the design") {
    auto in = random_instance(5, 3, 15);
    in.aux.gamma = 1e-3;
    const Emulator em(in.design, in.rain, in.aux, in.catchment);
    ParameterVector q(3);
    q << 1.49, 0.51, 1.2;
    const auto z = simulate_linear(q, in.design.space, in.aux, in.catchment, in.rain).values;
    CHECK((em.predict_mean(q) - z).cwiseAbs().maxCoeff() <= 1e-6 * z.cwiseAbs().maxCoeff());
}

TEST_CASE("zero sigma gives the linear model") {
    auto in = random_instance(6, 3, 15);
    in.aux.sigma = 0.0;
    const Emulator em(in.design, in.rain, in.aux, in.catchment);
    const auto p = em.predict(in.query);
    const auto z = simulate_linear(in.query, in.design.space, in.aux, in.catchment, in.rain).values;
    CHECK(p.mean.values == z);
    CHECK(p.variance.cwiseAbs().maxCoeff() == 0.0);
    const auto d = dense_condition(in.design, in.aux, in.rain, in.catchment, in.query);
    CHECK(d.covariance.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("design order does not matter") {
    const auto in = random_instance(8, 4, 18);
    DesignSet rev;
    rev.space = in.design.space;
    for (std::size_t a = in.design.size(); a-- > 0;) {
        rev.append(in.design.points[a], in.design.outputs[a], in.design.origins[a]);
    }
    const auto p1 = Emulator(in.design, in.rain, in.aux, in.catchment).predict(in.query);
    const auto p2 = Emulator(rev, in.rain, in.aux, in.catchment).predict(in.query);
    CHECK((p1.mean.values - p2.mean.values).cwiseAbs().maxCoeff() <= 1e-10 * p1.mean.values.cwiseAbs().maxCoeff());
    CHECK((p1.variance - p2.variance).cwiseAbs().maxCoeff() <= 1e-10 * (p1.variance.maxCoeff() + 1e-300));
}

TEST_CASE("adding a design point does not increase the variance") {
    const auto in = random_instance(9, 4, 18);
    DesignSet small;
    small.space = in.design.space;
    for (std::size_t a = 0; a + 1 < in.design.size(); ++a) {
        small.append(in.design.points[a], in.design.outputs[a], "x");
    }
    const auto v1 = Emulator(small, in.rain, in.aux, in.catchment).predict(in.query).variance;
    const auto v2 = Emulator(in.design, in.rain, in.aux, in.catchment).predict(in.query).variance;
    CHECK((v2 - v1).maxCoeff() <= 1e-9 * (v1.maxCoeff() + 1e-300));
}

TEST_CASE("emulator rejects bad inputs") {
    auto in = random_instance(10, 2, 10);
    DesignSet empty;
    empty.space = in.design.space;
    CHECK_THROWS_AS(Emulator(empty, in.rain, in.aux, in.catchment), InvalidArgument);
    in.aux.k = -1.0;
    CHECK_THROWS_AS(Emulator(in.design, in.rain, in.aux, in.catchment), InvalidArgument);
}
