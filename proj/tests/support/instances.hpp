#pragma once

// Seeded random emulator instances shared by unit and acceptance tests.

#include "mechemu/emulator.hpp"
#include "mechemu/random.hpp"
#include "oracles.hpp"

#include <cmath>

namespace testing_instances {

struct EmulatorInstance {
    mechemu::DesignSet design;
    mechemu::TimeSeries rain;
    mechemu::AuxiliaryParameters aux;
    mechemu::CatchmentAggregates catchment;
    mechemu::ParameterVector query;
};

/// n design runs of a perturbed linear reservoir on a random rain series of
/// `steps` samples. No lag, so the rain is the model input as is.
inline EmulatorInstance random_instance(std::uint64_t seed, int n, int steps) {
    using namespace mechemu;
    Rng rng = make_stream(seed, "test-instance");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EmulatorInstance in;
    const double dt = 60.0 + 120.0 * u(rng);
    Eigen::VectorXd r(steps);
    for (int i = 0; i < steps; ++i) r[i] = u(rng) < 0.6 ? 1e-5 * u(rng) : 0.0;
    in.rain = TimeSeries({0.0, dt, static_cast<std::size_t>(steps)}, r, "m/s");
    in.catchment = CatchmentAggregates{{500.0 + 1000.0 * u(rng), 0.05 + 0.1 * u(rng), 0.015, 0.3 + 0.3 * u(rng)}};
    in.aux.k = 0.002 + 0.004 * u(rng);
    in.aux.t0 = 0.0;
    in.aux.A = 2e4 + 4e4 * u(rng);
    in.aux.gamma = 1.0 + 6.0 * u(rng);
    in.aux.sigma = 1e-3 * (0.5 + u(rng));
    const ParameterSpace space({{"width", 0.5, 1.5}, {"slope", 0.5, 1.5}, {"n_imp", 0.5, 1.5}});
    in.design.space = space;
    for (int a = 0; a < n; ++a) {
        ParameterVector th(3);
        for (int j = 0; j < 3; ++j) th[j] = 0.5 + u(rng);
        TimeSeries y = simulate_linear(th, space, in.aux, in.catchment, in.rain);
        const double phase = 6.0 * u(rng);
        for (int i = 0; i < steps; ++i) y.values[i] *= 1.0 + 0.2 * std::sin(0.3 * i + phase);
        in.design.append(th, y, "random");
    }
    in.query = ParameterVector(3);
    for (int j = 0; j < 3; ++j) in.query[j] = 0.5 + u(rng);
    return in;
}

inline std::vector<oracle::Replica> replicas(const EmulatorInstance& in) {
    std::vector<oracle::Replica> out;
    for (const auto& p : in.design.points) {
        const auto g = in.catchment.at(p, in.design.space);
        out.push_back({p, mechemu::release_rate(g, in.aux), mechemu::output_gain(g, in.aux)});
    }
    return out;
}

inline oracle::Replica query_replica(const EmulatorInstance& in, const mechemu::ParameterVector& q) {
    const auto g = in.catchment.at(q, in.design.space);
    return {q, mechemu::release_rate(g, in.aux), mechemu::output_gain(g, in.aux)};
}

/// Absolute design-noise variance: relative jitter times the largest prior
/// marginal output variance of the design runs (at the last grid time).
inline double jitter_variance(const EmulatorInstance& in, double jitter) {
    double m = 0.0;
    const double t_end = in.rain.grid.step * static_cast<double>(in.rain.size());
    for (const auto& r : replicas(in)) m = std::max(m, oracle::prior_variance(r.kappa, r.gain, in.aux.sigma, t_end));
    return jitter * m;
}

inline oracle::DenseResult oracle_condition(const EmulatorInstance& in, const mechemu::ParameterVector& q,
                                            double jitter) {
    std::vector<Eigen::VectorXd> outputs;
    for (const auto& y : in.design.outputs) outputs.push_back(y.values);
    return oracle::dense_gp(replicas(in), outputs, query_replica(in, q), in.rain.values, in.rain.grid.step,
                            in.aux.sigma, in.aux.gamma, in.design.space.spans(), jitter_variance(in, jitter));
}

}  // namespace testing_instances
