#pragma once

#include "mechemu/crossmatch.hpp"
#include "mechemu/design_sampling.hpp"
#include "mechemu/emulator.hpp"
#include "mechemu/io.hpp"
#include "mechemu/likelihood.hpp"
#include "mechemu/prior_model.hpp"
#include "mechemu/sampler.hpp"
#include "mechemu/simulators.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace mechemu {

struct McmcSettings {
    std::size_t walkers = 0;      ///< 0: max(2d, 16)
    std::size_t steps = 4000;
    double burn_in = 0.25;        ///< fraction of steps
    std::size_t thin = 0;         ///< 0: ceil of the largest autocorrelation time
    double a = 2.0;
    unsigned threads = 1;
    int init_evaluations = 1000;  ///< Nelder-Mead budget for locating the start
};

/// Retained posterior states on the natural scale: (theta, sigma_E, sigma_B).
struct PosteriorSample {
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> points;
    std::vector<double> log_posterior;  ///< log prior + log likelihood at each point
    double acceptance = 0.0;
    std::size_t thin = 1;
    std::size_t evaluations = 0;
    double autocorr_time = 1.0;

    std::size_t model_dim() const { return names.size() - 2; }
    std::vector<Eigen::VectorXd> model_parameters() const;
    Table table() const;
    static PosteriorSample from_table(const Table& table);
};

/// Locate a high-posterior start by Nelder-Mead from the prior modes, spread the
/// walkers in a small ball around it and run the ensemble sampler.
PosteriorSample sample_posterior(const PosteriorTarget& target, const ParameterSpace& space,
                                 const McmcSettings& settings, std::uint64_t seed, std::uint64_t stream = 0);

/// Cross-match distance after seeded subsampling of both samples to
/// min(size, |a|, |b|) points.
CrossMatch compare_samples(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b,
                           std::size_t size, std::uint64_t seed, std::uint64_t stream = 0);

struct Schedule {
    std::size_t budget = 128;

    std::size_t initial() const { return budget / 2; }
    std::size_t batch() const { return budget / 8; }
    static constexpr std::size_t iterations = 4;
    std::vector<std::size_t> sizes() const;
    void validate() const;
};

/// The calibration problem: observations, error model and priors.
struct Problem {
    ParameterSpace space;
    PriorSpec prior;
    TimeSeries rain;
    TimeSeries observed;
    double lambda = 0.35;
    CatchmentAggregates catchment;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t design_size = 0;
    double d_previous = std::numeric_limits<double>::quiet_NaN();
    double d_reference = std::numeric_limits<double>::quiet_NaN();
    double acceptance = 0.0;
    double design_seconds = 0.0;
    double inference_seconds = 0.0;
    std::size_t failures = 0;
};

struct RefinementOptions {
    Schedule schedule;
    double stretch = 1.1;
    double gamma = 5.0;
    EmulatorOptions emulator;
    AuxFitOptions aux_fit;
    McmcSettings mcmc;
    std::size_t compare_size = 200;
    double convergence_threshold = 0.2;
    std::uint64_t seed = 0;
    bool iterate = true;  ///< false: one Halton design of the full budget
    std::function<void(const IterationRecord&)> on_iteration;
};

struct RefinementResult {
    DesignSet design;
    AuxiliaryParameters aux;
    std::vector<PosteriorSample> posteriors;
    std::vector<IterationRecord> records;
    bool converged = false;
    std::size_t simulator_calls = 0;
    std::size_t failed_calls = 0;
};

/// Halton design of `count` points over the over-reached calibration box, run
/// through the simulator.
DesignSet initial_design(const Simulator& simulator, std::size_t count, double overreach);

/// Fit (k, t0, A) and sigma to a design, gamma given.
AuxiliaryParameters calibrate_aux(const DesignSet& design, const Problem& problem, double gamma,
                                  const AuxFitOptions& options);

/// Posterior with the emulator mean standing in for the simulator.
PosteriorSample emulator_posterior(const Emulator& emulator, const Problem& problem, const McmcSettings& settings,
                                   std::uint64_t seed, std::uint64_t stream = 0);

/// Posterior with the simulator itself in the likelihood.
PosteriorSample direct_posterior(const Simulator& simulator, const Problem& problem, const McmcSettings& settings,
                                 std::uint64_t seed, std::uint64_t stream = 0);

/// Draws model-parameter points from a posterior sample without replacement,
/// stretched about the sample's center of mass and clipped to `box`. Points
/// closer than 1e-6 (in box-span units) to an accepted or existing point are
/// skipped.
class RefinementSampler {
public:
    RefinementSampler(const PosteriorSample& posterior, double stretch, ParameterSpace box,
                      std::vector<ParameterVector> existing, Rng rng);
    /// Next point; throws InvalidArgument when the sample is exhausted.
    ParameterVector next();

private:
    std::vector<ParameterVector> candidates_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    ParameterSpace box_;
    std::vector<ParameterVector> taken_;
};

/// The iterative scheme: n/2 Halton points, then four batches of n/8 points
/// drawn from the current posterior. Auxiliary parameters (including sigma) are
/// fitted once to the initial design and then frozen. `reference`, when
/// given, is a posterior sample every iteration is compared to.
RefinementResult run_refinement(const Simulator& simulator, const Problem& problem, const RefinementOptions& options,
                                const PosteriorSample* reference = nullptr);

/// Deterministic per-iteration diagnostics (wall-clock timings are kept out so
/// that reruns reproduce the file byte for byte).
Table diagnostics_table(const RefinementResult& result);

}  // namespace mechemu
