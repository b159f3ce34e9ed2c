#pragma once

#include "mechemu/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace mechemu {

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Walker positions with their cached log densities and the ensemble's RNG.
struct EnsembleState {
    std::vector<Eigen::VectorXd> walkers;
    std::vector<double> log_density;
    Rng rng;
    std::size_t step = 0;

    std::size_t size() const { return walkers.size(); }
    std::size_t dim() const { return walkers.empty() ? 0 : static_cast<std::size_t>(walkers[0].size()); }
};

/// max(2d, 16), rounded up to an even count.
std::size_t default_walker_count(std::size_t dim);

/// Evaluate `log_post` at every walker. Throws InvalidArgument if W < 2d, W is
/// odd, or no walker has a finite log density.
EnsembleState make_ensemble(const LogDensity& log_post, std::vector<Eigen::VectorXd> walkers,
                            std::uint64_t seed, std::uint64_t stream = 0);

/// Draw z with density proportional to 1/sqrt(z) on [1/a, a].
double draw_stretch(Rng& rng, double a);

struct StretchProposal {
    Eigen::VectorXd proposal;
    double log_adjust = 0.0;  ///< (d - 1) ln z
};

/// partner + z (walker - partner).
StretchProposal stretch_move(const Eigen::VectorXd& walker, const Eigen::VectorXd& partner, double z);

/// States are stored step-major: state(s, w) for step s and walker w.
struct Chain {
    std::size_t walkers = 0;
    std::size_t dim = 0;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> log_density;
    std::size_t proposed = 0;
    std::size_t accepted = 0;

    std::size_t steps() const { return walkers == 0 ? 0 : states.size() / walkers; }
    const Eigen::VectorXd& state(std::size_t s, std::size_t w) const { return states[s * walkers + w]; }
    double log_density_at(std::size_t s, std::size_t w) const { return log_density[s * walkers + w]; }
    double acceptance_rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

struct SamplerOptions {
    double a = 2.0;
    /// Worker threads for the log-density evaluations within one half-ensemble.
    unsigned threads = 1;
};

/// Stretch-move ensemble sampler with the two-half update: each half moves
/// against the frozen complementary half. All random numbers for a half are
/// drawn before any evaluation, so the chain does not depend on `threads`.
/// `state` is advanced in place.
Chain run_ensemble(const LogDensity& log_post, EnsembleState& state, std::size_t steps,
                   const SamplerOptions& options = {});

/// Post-burn-in states: the last step of each complete block of `thin` steps,
/// W floor((steps - burn_in) / thin) states in walker order within a step.
std::vector<Eigen::VectorXd> flat_sample(const Chain& chain, std::size_t burn_in, std::size_t thin = 1);

/// Integrated autocorrelation time of one coordinate, from the walker-averaged
/// autocorrelation function with a self-consistent window (c = 5).
double integrated_autocorr_time(const Chain& chain, std::size_t component, std::size_t burn_in = 0);

/// W (steps - burn_in) / tau for one coordinate.
double effective_sample_size(const Chain& chain, std::size_t component, std::size_t burn_in = 0);

/// Largest autocorrelation time over all coordinates, rounded up (at least 1).
std::size_t suggested_thinning(const Chain& chain, std::size_t burn_in = 0);

}  // namespace mechemu
