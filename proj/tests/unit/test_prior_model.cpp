#include "doctest.h"

#include "mechemu/emulator.hpp"
#include "mechemu/io.hpp"
#include "mechemu/prior_model.hpp"
#include "mechemu/refinement.hpp"
#include "mechemu/simulators.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace mechemu;

namespace {

TimeSeries make_rain(std::size_t steps, double dt, const std::function<double(std::size_t)>& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(steps));
    for (std::size_t i = 0; i < steps; ++i) v[static_cast<Eigen::Index>(i)] = f(i);
    return TimeSeries({0.0, dt, steps}, v, "m/s");
}

TimeSeries data_rain() { return read_time_series(std::string(MECHEMU_DATA_DIR) + "/rain.csv", "m/s"); }

}  // namespace

TEST_CASE("release rate") {
    Aggregates g{1.0, 1.0, 1.0, 1.0};
    AuxiliaryParameters aux;
    aux.k = 1.0;
    aux.A = 1.0;
    CHECK(release_rate(g, aux) == doctest::Approx(-1.0));

    g = {3.0, 4.0, 1.0, 1.0};
    aux.k = 2.0;
    aux.A = 6.0;
    CHECK(release_rate(g, aux) == doctest::Approx(-2.0));

    Aggregates g2 = g;
    g2.imperviousness *= 2.0;
    CHECK(release_rate(g2, aux) == doctest::Approx(0.5 * release_rate(g, aux)));
    CHECK(output_gain(g, aux) == doctest::Approx(-release_rate(g, aux) * aux.A * g.imperviousness));
}

TEST_CASE("catchment aggregates scale multiplicatively") {
    CatchmentAggregates c{{100.0, 0.1, 0.02, 0.4}};
    const ParameterSpace s({{"width", 0.5, 1.5}, {"n_imp", 0.5, 1.5}, {"storage_imp", 0.5, 1.5}});
    Eigen::VectorXd th(3);
    th << 1.2, 0.8, 1.4;
    const Aggregates a = c.at(th, s);
    CHECK(a.width == doctest::Approx(120.0));
    CHECK(a.manning == doctest::Approx(0.016));
    CHECK(a.slope == doctest::Approx(0.1));
    CHECK(a.imperviousness == doctest::Approx(0.4));
}

TEST_CASE("linear model responses") {
    const ParameterSpace s({{"width", 0.5, 1.5}});
    const CatchmentAggregates c{{2.0, 0.04, 0.1, 0.5}};
    AuxiliaryParameters aux;
    aux.k = 0.01;
    aux.A = 10.0;
    Eigen::VectorXd th(1);
    th << 1.0;
    const Aggregates g = c.at(th, s);
    const double kappa = release_rate(g, aux);
    const double h = output_gain(g, aux);

    SUBCASE("zero rain") {
        const auto y = simulate_linear(th, s, aux, c, make_rain(30, 60.0, [](std::size_t) { return 0.0; }));
        CHECK(y.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("steady state") {
        const double p0 = 1e-5;
        const auto y = simulate_linear(th, s, aux, c, make_rain(2000, 60.0, [&](std::size_t) { return p0; }));
        CHECK(y.values[1999] == doctest::Approx(h * p0 / std::abs(kappa)).epsilon(1e-9));
    }
    SUBCASE("recession after the rain stops") {
        const auto y =
            simulate_linear(th, s, aux, c, make_rain(100, 60.0, [](std::size_t i) { return i < 40 ? 1e-5 : 0.0; }));
        for (int i = 45; i < 99; ++i) {
            CHECK(y.values[i + 1] / y.values[i] == doctest::Approx(std::exp(kappa * 60.0)).epsilon(1e-10));
        }
    }
    SUBCASE("quadrature of the Green's function") {
        const TimeSeries rain = make_rain(25, 60.0, [](std::size_t i) { return 1e-6 * (1.0 + std::sin(0.4 * i)); });
        const auto y = simulate_linear(th, s, aux, c, rain);
        for (int i = 0; i < 25; ++i) {
            double acc = 0.0;
            for (int k = 0; k <= i; ++k) {
                acc += rain.values[k] *
                       oracle::simpson([&](double u) { return std::exp(kappa * (60.0 * (i + 1) - u)); }, 60.0 * k,
                                       60.0 * (k + 1));
            }
            CHECK(y.values[i] == doctest::Approx(h * acc).epsilon(1e-10));
        }
    }
    SUBCASE("linear in rain") {
        const TimeSeries p1 = make_rain(40, 60.0, [](std::size_t i) { return 1e-6 * (i % 7); });
        const TimeSeries p2 = make_rain(40, 60.0, [](std::size_t i) { return 1e-6 * ((i * 3) % 5); });
        TimeSeries mix = p1;
        mix.values = 2.0 * p1.values + 0.5 * p2.values;
        const auto y = simulate_linear(th, s, aux, c, mix).values;
        const Eigen::VectorXd expect =
            2.0 * simulate_linear(th, s, aux, c, p1).values + 0.5 * simulate_linear(th, s, aux, c, p2).values;
        CHECK((y - expect).norm() <= 1e-10 * expect.norm());
        CHECK(y.minCoeff() >= 0.0);
    }
}

TEST_CASE("lagged rain") {
    const TimeSeries rain = make_rain(10, 60.0, [](std::size_t i) { return static_cast<double>(i + 1); });
    const auto l = lagged_rain(rain, 120.0);
    CHECK(l[0] == 0.0);
    CHECK(l[1] == 0.0);
    CHECK(l[2] == doctest::Approx(1.0));
    const auto h = lagged_rain(rain, 30.0);
    CHECK(h[1] == doctest::Approx(1.5));
}

TEST_CASE("auxiliary fit recovers the parameters of a linear simulator") {
    const TimeSeries rain = data_rain();
    const ToyCatchment toy;
    const CatchmentAggregates c = toy.aggregates();
    const ParameterSpace s = toy_parameter_space({"imperviousness", "width", "slope"});
    AuxiliaryParameters truth;
    truth.k = 0.006;
    truth.t0 = 200.0;
    truth.A = 1.2e6;
    const LinearSimulator sim(s, rain, truth, c);
    const DesignSet design = initial_design(sim, 16, 1.05);

    AuxiliaryParameters base;
    const AuxiliaryParameters init = guess_aux(design, rain, c, base);
    const AuxFit fit = estimate_aux(design, rain, c, init, {});
    CHECK(fit.aux.k == doctest::Approx(truth.k).epsilon(0.01));
    CHECK(fit.aux.A == doctest::Approx(truth.A).epsilon(0.01));
    CHECK(fit.aux.t0 == doctest::Approx(truth.t0).epsilon(0.01));
    CHECK(fit.ssq <= fit.ssq_init);
    CHECK(estimate_sigma(design, rain, c, fit.aux) < 1e-6);
    // Exact aux: zero residual, zero sigma.
    CHECK(estimate_sigma(design, rain, c, truth) == doctest::Approx(0.0));
}

TEST_CASE("auxiliary fit: perfect single-run design stays at the start") {
    const TimeSeries rain = data_rain();
    const CatchmentAggregates c = ToyCatchment{}.aggregates();
    const ParameterSpace s = toy_parameter_space({"width"});
    AuxiliaryParameters init;
    init.k = 0.005;
    init.t0 = 100.0;
    init.A = 1.0e6;
    DesignSet d;
    d.space = s;
    Eigen::VectorXd th(1);
    th << 1.0;
    d.append(th, simulate_linear(th, s, init, c, rain), "test");
    CHECK(aux_objective(d, rain, c, init) == doctest::Approx(0.0));
    const AuxFit fit = estimate_aux(d, rain, c, init, {});
    CHECK(fit.ssq == doctest::Approx(0.0));
    CHECK(fit.aux.k == doctest::Approx(init.k).epsilon(1e-6));
    CHECK(fit.aux.A == doctest::Approx(init.A).epsilon(1e-6));
}

TEST_CASE("auxiliary fit improves on a toy design") {
    const TimeSeries rain = data_rain();
    const ParameterSpace s = toy_parameter_space({"imperviousness", "width", "slope", "storage_imp"});
    const ToySimulator sim(s, rain);
    const DesignSet design = initial_design(sim, 32, 1.05);
    const CatchmentAggregates c = ToyCatchment{}.aggregates();
    const AuxiliaryParameters init = guess_aux(design, rain, c);
    const AuxFit fit = estimate_aux(design, rain, c, init, {});
    CHECK(fit.ssq < fit.ssq_init);
}

TEST_CASE("sigma estimate: scalar case") {
    // One run, one step: sigma^2 = r^2 / Sigma*, Sigma* the unit-noise variance.
    const ParameterSpace s({{"width", 0.5, 1.5}});
    const CatchmentAggregates c{{1.0, 1.0, 1.0, 1.0}};
    AuxiliaryParameters aux;
    aux.k = 1.0;
    aux.A = 1.0;
    const TimeSeries rain = make_rain(1, std::log(2.0), [](std::size_t) { return 0.0; });
    DesignSet d;
    d.space = s;
    Eigen::VectorXd th(1);
    th << 1.0;
    Eigen::VectorXd y(1);
    y << 2.0;
    d.append(th, TimeSeries(rain.grid, y, "m3/s"), "test");
    // kappa = -1, h = 1, dt = ln 2: Sigma* = (1 - 1/4) / 2 = 3/8.
    CHECK(estimate_sigma(d, rain, c, aux) == doctest::Approx(std::sqrt(4.0 / 0.375)));
}

TEST_CASE("sigma estimate is consistent on prior-model draws") {
    const std::size_t T = 30;
    const double dt = 120.0;
    const ParameterSpace s({{"width", 0.5, 1.5}, {"slope", 0.5, 1.5}});
    const CatchmentAggregates c{{1000.0, 0.1, 0.015, 0.4}};
    AuxiliaryParameters aux;
    aux.k = 0.002;
    aux.A = 5e4;
    aux.gamma = 5.0;
    const TimeSeries rain = make_rain(T, dt, [](std::size_t i) { return i < 10 ? 5e-6 : 0.0; });
    const double sigma_true = 3e-3;
    const auto unit = halton_points(6, 2);
    const auto pts = scale_to_box(unit, s, 1.0);

    std::vector<oracle::Replica> reps;
    for (const auto& p : pts) {
        const Aggregates g = c.at(p, s);
        reps.push_back({p, release_rate(g, aux), output_gain(g, aux)});
    }
    // Joint prior covariance of all design outputs.
    const auto n = static_cast<Eigen::Index>(reps.size());
    const auto Ti = static_cast<Eigen::Index>(T);
    Eigen::MatrixXd K(n * Ti, n * Ti);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const double dist = ((reps[a].theta - reps[b].theta).array() / s.spans().array()).matrix().norm();
            const double corr = std::exp(-dist / aux.gamma);
            const double sk = reps[a].kappa + reps[b].kappa;
            for (Eigen::Index i = 0; i < Ti; ++i) {
                for (Eigen::Index j = 0; j < Ti; ++j) {
                    const double ti = dt * (i + 1), tj = dt * (j + 1), m = std::min(ti, tj);
                    const double integral = (std::exp(reps[a].kappa * (ti - m) + reps[b].kappa * (tj - m)) -
                                             std::exp(reps[a].kappa * ti + reps[b].kappa * tj)) /
                                            (-sk);
                    K(a * Ti + i, b * Ti + j) = sigma_true * sigma_true * corr * reps[a].gain * reps[b].gain * integral;
                }
            }
        }
    }
    const Eigen::MatrixXd L = K.llt().matrixL();
    double mean_est = 0.0;
    const int R = 50;
    for (int rep = 0; rep < R; ++rep) {
        Rng rng = make_stream(9, "test-sigma", static_cast<std::uint64_t>(rep));
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::VectorXd xi(n * Ti);
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = nd(rng);
        const Eigen::VectorXd noise = L * xi;
        DesignSet d;
        d.space = s;
        for (Eigen::Index a = 0; a < n; ++a) {
            TimeSeries z = simulate_linear(pts[static_cast<std::size_t>(a)], s, aux, c, rain);
            z.values += noise.segment(a * Ti, Ti);
            d.append(pts[static_cast<std::size_t>(a)], z, "draw");
        }
        mean_est += estimate_sigma(d, rain, c, aux) / R;
    }
    CHECK(mean_est == doctest::Approx(sigma_true).epsilon(0.2));
}
