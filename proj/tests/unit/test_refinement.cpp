#include "doctest.h"

#include "mechemu/config.hpp"
#include "mechemu/errors.hpp"
#include "mechemu/refinement.hpp"

#include <cmath>
#include <set>

using namespace mechemu;

namespace {

PosteriorSample cloud(std::size_t n, std::uint64_t seed) {
    PosteriorSample s;
    s.names = {"width", "slope", "sigma_E", "sigma_B"};
    Rng rng = make_stream(seed, "test-cloud");
    std::normal_distribution<double> g(1.0, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd p(4);
        p << g(rng), g(rng), 0.01, 0.02;
        s.points.push_back(p);
        s.log_posterior.push_back(0.0);
    }
    return s;
}

}  // namespace

TEST_CASE("schedule") {
    Schedule s;
    CHECK(s.sizes() == std::vector<std::size_t>{64, 80, 96, 112, 128});
    s.budget = 16;
    CHECK(s.sizes() == std::vector<std::size_t>{8, 10, 12, 14, 16});
    s.budget = 100;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.budget = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("refinement sampler draws distinct points inside the box") {
    const ParameterSpace box({{"width", 0.95, 1.05}, {"slope", 0.5, 1.5}});
    const auto post = cloud(100, 1);
    RefinementSampler draw(post, 1.1, box, {}, make_stream(1, "test-refine"));
    std::vector<ParameterVector> got;
    for (int i = 0; i < 30; ++i) got.push_back(draw.next());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(box.contains(got[i]));
        for (std::size_t j = 0; j < i; ++j) CHECK((got[i] - got[j]).norm() > 0.0);
    }
    RefinementSampler small(cloud(3, 2), 1.1, box, {}, make_stream(1, "test-refine"));
    for (int i = 0; i < 3; ++i) small.next();
    CHECK_THROWS_AS(small.next(), InvalidArgument);
}

TEST_CASE("existing points are never drawn again") {
    const ParameterSpace box({{"width", 0.0, 2.0}, {"slope", 0.0, 2.0}});
    auto post = cloud(5, 3);
    for (auto& p : post.points) p.head(2) = Eigen::Vector2d(1.0, 1.0);
    RefinementSampler draw(post, 1.0, box, {Eigen::Vector2d(1.0, 1.0)}, make_stream(2, "test-refine"));
    CHECK_THROWS_AS(draw.next(), InvalidArgument);
}

TEST_CASE("linear simulator designs are reproduced exactly by the emulator") {
    const ParameterSpace space({{"width", 0.5, 1.5}, {"slope", 0.5, 1.5}});
    Eigen::VectorXd r = Eigen::VectorXd::Zero(40);
    for (int i = 2; i < 12; ++i) r[i] = 5e-6;
    const TimeSeries rain({0.0, 120.0, 40}, r, "m/s");
    AuxiliaryParameters aux;
    aux.k = 0.004;
    aux.t0 = 0.0;
    aux.A = 5e4;
    aux.sigma = 1e-3;
    const CatchmentAggregates cat{{1000.0, 0.1, 0.015, 0.4}};
    const LinearSimulator sim(space, rain, aux, cat);
    const DesignSet d = initial_design(sim, 8, 1.05);
    const Emulator em(d, rain, aux, cat);
    ParameterVector q(2);
    q << 0.8, 1.3;
    const Eigen::VectorXd z = sim.run(q).values;
    CHECK((em.predict_mean(q) - z).cwiseAbs().maxCoeff() <= 1e-9 * z.cwiseAbs().maxCoeff());
}

TEST_CASE("a small refinement run") {
    RunConfig cfg = load_config(std::string(MECHEMU_DATA_DIR) + "/toy_2param_quick.json");
    LoadedProblem lp = load_problem(cfg);
    RefinementOptions opt;
    opt.schedule.budget = 16;
    opt.gamma = cfg.gamma;
    opt.emulator = cfg.emulator;
    opt.mcmc = cfg.mcmc;
    opt.mcmc.steps = 150;
    opt.compare_size = 60;
    opt.seed = 4;
    std::size_t callbacks = 0;
    opt.on_iteration = [&](const IterationRecord&) { ++callbacks; };
    const RefinementResult res = run_refinement(*lp.simulator, lp.problem, opt);

    CHECK(res.simulator_calls == 16);
    CHECK(res.design.size() == 16);
    CHECK(callbacks == 5);
    const DesignSet halton = initial_design(*lp.simulator, 8, cfg.emulator.overreach);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(res.design.points[i] == halton.points[i]);
        CHECK(res.design.origins[i] == "halton");
    }
    std::set<std::string> origins(res.design.origins.begin() + 8, res.design.origins.end());
    CHECK(origins == std::set<std::string>{"refine1", "refine2", "refine3", "refine4"});

    const Table diag = diagnostics_table(res);
    REQUIRE(diag.rows.size() == 5);
    CHECK(std::isnan(diag.rows[0][2]));
    for (std::size_t i = 1; i < 5; ++i) {
        CHECK(std::isfinite(diag.rows[i][2]));
        CHECK(diag.rows[i][1] == doctest::Approx(8.0 + 2.0 * static_cast<double>(i)));
    }
    CHECK(res.posteriors.size() == 5);
    CHECK(res.aux.sigma > 0.0);
}
