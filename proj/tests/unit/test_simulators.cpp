#include "doctest.h"

#include "mechemu/errors.hpp"
#include "mechemu/likelihood.hpp"
#include "mechemu/simulators.hpp"

#include <cmath>

using namespace mechemu;

namespace {

TimeSeries storm(std::size_t steps, std::size_t wet, double intensity = 1e-5, double dt = 120.0) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(steps));
    r.head(static_cast<Eigen::Index>(wet)).setConstant(intensity);
    return TimeSeries({0.0, dt, steps}, r, "m/s");
}

}  // namespace

TEST_CASE("toy parameter space") {
    const auto s = toy_parameter_space({"imperviousness", "width", "imp_no_storage"});
    CHECK(s[0].lower == 0.5);
    CHECK(s[0].upper == 1.1);
    CHECK(s[1].lower == 0.5);
    CHECK(s[1].upper == 1.5);
    CHECK(s[2].lower == 1.0);
    CHECK(toy_parameter_names().size() == 8);
    CHECK_THROWS_AS(toy_parameter_space({"colour"}), InvalidArgument);
}

TEST_CASE("toy model: no rain, no flow") {
    const auto space = toy_parameter_space({"width", "slope"});
    const TimeSeries y = toy_simulate(Eigen::Vector2d(1.0, 1.0), space, storm(30, 0));
    CHECK(y.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy model: mass balance without losses") {
    ToyCatchment c;
    c.storage = 1e-12;
    c.pervious_share = 0.0;
    const auto space = toy_parameter_space({"width"});
    const ToyRun run = toy_run(Eigen::VectorXd::Ones(1), space, storm(600, 10), c);
    CHECK(run.impervious_rain == doctest::Approx(c.area * c.imperviousness * 10 * 120.0 * 1e-5));
    CHECK(run.outflow_volume <= run.impervious_rain * (1.0 + 1e-9));
    CHECK(run.outflow_volume == doctest::Approx(run.impervious_rain).epsilon(1e-3));
    // Default losses retain water.
    const ToyRun lossy = toy_run(Eigen::VectorXd::Ones(1), space, storm(600, 10));
    CHECK(lossy.outflow_volume < run.outflow_volume);
}

TEST_CASE("toy model: more impervious area, more runoff") {
    const auto space = toy_parameter_space({"imperviousness"});
    const TimeSeries rain = storm(60, 15);
    double prev = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double f = 0.5 + 0.6 * i / 19.0;
        const double v = toy_run(Eigen::VectorXd::Constant(1, f), space, rain).outflow_volume;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("toy model: substep convergence") {
    const auto space = toy_parameter_space({"width", "slope", "n_imp"});
    const TimeSeries rain = storm(60, 12, 2e-5);
    ToyCatchment coarse, fine;
    fine.substeps = 200;
    const Eigen::Vector3d th(1.2, 0.8, 0.9);
    const auto a = toy_simulate(th, space, rain, coarse).values;
    const auto b = toy_simulate(th, space, rain, fine).values;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-3 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("toy model rejects bad input") {
    const auto space = toy_parameter_space({"imperviousness"});
    CHECK_THROWS_AS(toy_simulate(Eigen::VectorXd::Constant(1, -1.0), space, storm(5, 2)), InvalidArgument);
    CHECK_THROWS_AS(toy_simulate(Eigen::VectorXd::Constant(1, 3.0), space, storm(5, 2)), InvalidArgument);
    CHECK_THROWS_AS(toy_simulate(Eigen::VectorXd::Ones(2), space, storm(5, 2)), InvalidArgument);
}

TEST_CASE("synthetic observations") {
    const auto space = toy_parameter_space({"width"});
    const TimeSeries y = toy_simulate(Eigen::VectorXd::Ones(1), space, storm(40, 10));
    ErrorModelParams e;
    e.sigma_e = 0.0;
    e.sigma_b = 0.0;
    e.tau = 600.0;
    const Observation clean = make_observation(y, e, 1);
    CHECK((clean.series.values - y.values).cwiseAbs().maxCoeff() <= 1e-12 * y.values.maxCoeff());
    CHECK(clean.clipped == 0);

    e.sigma_e = 0.05;
    e.sigma_b = 0.1;
    const Observation a = make_observation(y, e, 9);
    const Observation b = make_observation(y, e, 9);
    CHECK(a.series.values == b.series.values);
    CHECK((a.series.values.array() >= 0.0).all());
    CHECK(a.series.grid.same_as(y.grid));
}

TEST_CASE("bias draws have the exponential autocovariance") {
    const double sigma = 0.3, tau = 100.0, dt = 10.0;
    const std::size_t N = 2000, lag = 10, reps = 200;
    double c0 = 0.0, c1 = 0.0, clag = 0.0;
    std::size_t n0 = 0, n1 = 0, nlag = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng = make_stream(r, "test-bias");
        const Eigen::VectorXd b = draw_bias(N, dt, sigma, tau, rng);
        for (std::size_t i = 0; i < N; ++i) {
            c0 += b[i] * b[i];
            ++n0;
            if (i + 1 < N) {
                c1 += b[i] * b[i + 1];
                ++n1;
            }
            if (i + lag < N) {
                clag += b[i] * b[i + lag];
                ++nlag;
            }
        }
    }
    c0 /= n0;
    c1 /= n1;
    clag /= nlag;
    CHECK(c0 == doctest::Approx(sigma * sigma).epsilon(0.05));
    CHECK(clag == doctest::Approx(sigma * sigma * std::exp(-1.0)).epsilon(0.1));
    CHECK(c1 / c0 == doctest::Approx(std::exp(-dt / tau)).epsilon(0.05));
    Rng rng = make_stream(0, "test-bias");
    CHECK(draw_bias(10, dt, 0.0, tau, rng).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(draw_bias(10, dt, 1.0, 0.0, rng), InvalidArgument);
}

TEST_CASE("external simulator") {
    const ParameterSpace space({{"x", 0.0, 10.0}});
    ExternalSimulatorSpec spec;
    spec.grid = {0.0, 60.0, 3};
    spec.timeout_s = 5.0;
    spec.command =
        "v=$(tail -n 1 {params} | cut -d, -f2); printf 'time_s,value\\n0,%s\\n60,%s\\n120,%s\\n' $v $v $v > {output}";
    const ExternalSimulator echo(space, spec);
    const TimeSeries y = echo.run(Eigen::VectorXd::Constant(1, 2.5));
    REQUIRE(y.size() == 3);
    CHECK(y.values == Eigen::Vector3d::Constant(2.5));
    CHECK(y.grid.step == 60.0);

    ExternalSimulatorSpec slow = spec;
    slow.timeout_s = 1.0;
    slow.command = "sleep 30; echo {params} {output}";
    try {
        ExternalSimulator(space, slow).run(Eigen::VectorXd::Ones(1));
        FAIL("expected a timeout");
    } catch (const SimulatorFailure& e) {
        CHECK(e.reason() == SimulatorFailure::Reason::Timeout);
    }

    ExternalSimulatorSpec failing = spec;
    failing.command = "echo broken >&2; exit 3; {params} {output}";
    try {
        ExternalSimulator(space, failing).run(Eigen::VectorXd::Ones(1));
        FAIL("expected an exit-code failure");
    } catch (const SimulatorFailure& e) {
        CHECK(e.reason() == SimulatorFailure::Reason::ExitCode);
        CHECK(e.captured_output().find("broken") != std::string::npos);
    }

    ExternalSimulatorSpec short_out = spec;
    short_out.command = "printf 'time_s,value\\n0,1\\n60,1\\n' > {output}; : {params}";
    CHECK_THROWS_AS(ExternalSimulator(space, short_out).run(Eigen::VectorXd::Ones(1)), ProtocolError);

    ExternalSimulatorSpec bad = spec;
    bad.command = "cat {params} > {params}";
    CHECK_THROWS_AS(ExternalSimulator(space, bad), InvalidArgument);
}
