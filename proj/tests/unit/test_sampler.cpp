#include "doctest.h"

#include "mechemu/errors.hpp"
#include "mechemu/sampler.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using namespace mechemu;

namespace {

std::vector<Eigen::VectorXd> ball(std::size_t W, std::size_t d, std::uint64_t seed, double scale = 0.1) {
    Rng rng = make_stream(seed, "test-ball");
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Eigen::VectorXd> w(W, Eigen::VectorXd(static_cast<Eigen::Index>(d)));
    for (auto& x : w) {
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = scale * n(rng);
    }
    return w;
}

double std_normal(const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); }

}  // namespace

TEST_CASE("stretch move") {
    Eigen::Vector2d w(1.0, 2.0), p(-1.0, 0.5);
    const auto m = stretch_move(w, p, 1.0);
    CHECK(m.proposal == w);
    CHECK(m.log_adjust == 0.0);
    const auto m2 = stretch_move(w, p, 2.0);
    CHECK(m2.proposal.isApprox(p + 2.0 * (w - p)));
    CHECK(m2.log_adjust == doctest::Approx(std::log(2.0)));
}

TEST_CASE("stretch variable distribution") {
    Rng rng = make_stream(1, "test-z");
    const int N = 200000;
    int below = 0;
    for (int i = 0; i < N; ++i) {
        const double z = draw_stretch(rng, 2.0);
        CHECK_FALSE((z < 0.5 || z > 2.0));
        if (z <= 1.0) ++below;
    }
    const double expect = (1.0 - 1.0 / std::sqrt(2.0)) / (std::sqrt(2.0) - 1.0 / std::sqrt(2.0));
    CHECK(expect == doctest::Approx(0.41421).epsilon(1e-4));
    CHECK(static_cast<double>(below) / N == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("ensemble validation") {
    CHECK(default_walker_count(3) == 16);
    CHECK(default_walker_count(11) == 22);
    CHECK_THROWS_AS(make_ensemble(std_normal, ball(4, 3, 1), 1), InvalidArgument);
    CHECK_THROWS_AS(make_ensemble(std_normal, ball(7, 2, 1), 1), InvalidArgument);
    const LogDensity nowhere = [](const Eigen::VectorXd&) { return -std::numeric_limits<double>::infinity(); };
    CHECK_THROWS_AS(make_ensemble(nowhere, ball(8, 2, 1), 1), InvalidArgument);
}

TEST_CASE("two-half scheme equals a sequential implementation") {
    auto target = [](const Eigen::VectorXd& x) {
        return -0.5 * (x[0] * x[0] / 4.0 + (x[1] - x[0]) * (x[1] - x[0]) + x[2] * x[2] * 9.0);
    };
    const auto init = ball(12, 3, 4);
    EnsembleState s = make_ensemble(target, init, 99);
    const Chain c = run_ensemble(target, s, 200);
    const auto ref = oracle::sequential_stretch(target, init, make_stream(99, "mcmc", 0), 200, 2.0);
    REQUIRE(c.states.size() == ref.states.size());
    for (std::size_t i = 0; i < c.states.size(); ++i) CHECK(c.states[i] == ref.states[i]);
    CHECK(c.accepted == ref.accepted);
    for (std::size_t i = 0; i < c.log_density.size(); ++i) CHECK(c.log_density[i] == target(c.states[i]));
}

TEST_CASE("chains do not depend on the thread count and are reproducible") {
    const auto init = ball(16, 4, 5);
    EnsembleState a = make_ensemble(std_normal, init, 3);
    EnsembleState b = make_ensemble(std_normal, init, 3);
    EnsembleState c = make_ensemble(std_normal, init, 3);
    SamplerOptions one, four;
    four.threads = 4;
    const Chain ca = run_ensemble(std_normal, a, 100, one);
    const Chain cb = run_ensemble(std_normal, b, 100, four);
    const Chain cc = run_ensemble(std_normal, c, 100, one);
    CHECK(ca.states == cb.states);
    CHECK(ca.states == cc.states);
}

TEST_CASE("correlated gaussian and support") {
    const double rho = 0.8;
    auto target = [&](const Eigen::VectorXd& x) {
        return -0.5 * (x[0] * x[0] - 2 * rho * x[0] * x[1] + x[1] * x[1]) / (1 - rho * rho);
    };
    EnsembleState s = make_ensemble(target, ball(16, 2, 6), 11);
    const Chain c = run_ensemble(target, s, 4000);
    const auto pts = flat_sample(c, 1000);
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& p : pts) {
        sxy += p[0] * p[1];
        sxx += p[0] * p[0];
        syy += p[1] * p[1];
    }
    CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(rho).epsilon(0.05 / rho));

    auto bounded = [](const Eigen::VectorXd& x) {
        return (x[0] > 0.0 && x[0] < 1.0) ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    std::vector<Eigen::VectorXd> w;
    for (int i = 0; i < 8; ++i) w.push_back(Eigen::VectorXd::Constant(1, 0.1 + 0.1 * i));
    EnsembleState b = make_ensemble(bounded, w, 2);
    const Chain cb = run_ensemble(bounded, b, 500);
    for (const auto& x : cb.states) CHECK((x[0] > 0.0 && x[0] < 1.0));
}

TEST_CASE("flat sample arithmetic") {
    EnsembleState s = make_ensemble(std_normal, ball(8, 2, 7), 1);
    const Chain c = run_ensemble(std_normal, s, 50);
    CHECK(flat_sample(c, 0, 1).size() == c.states.size());
    CHECK(flat_sample(c, 0, 50).size() == 8);
    CHECK(flat_sample(c, 10, 7).size() == 8 * ((50 - 10) / 7));
    CHECK(flat_sample(c, 10, 7).front() == c.state(16, 0));
}

TEST_CASE("autocorrelation time of an AR(1) chain") {
    // Feed a synthetic chain: every walker an independent AR(1) series.
    const double phi = 0.8;
    Chain c;
    c.walkers = 32;
    c.dim = 1;
    const std::size_t steps = 4000;
    std::vector<double> x(c.walkers, 0.0);
    Rng rng = make_stream(12, "test-ar1");
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t w = 0; w < c.walkers; ++w) {
            x[w] = phi * x[w] + std::sqrt(1 - phi * phi) * n(rng);
            c.states.push_back(Eigen::VectorXd::Constant(1, x[w]));
            c.log_density.push_back(0.0);
        }
    }
    const double tau = integrated_autocorr_time(c, 0, 200);
    CHECK(tau == doctest::Approx((1 + phi) / (1 - phi)).epsilon(0.1));
    CHECK(effective_sample_size(c, 0, 200) == doctest::Approx(32.0 * 3800.0 / tau));
    CHECK(suggested_thinning(c, 200) == static_cast<std::size_t>(std::ceil(tau)));
}
