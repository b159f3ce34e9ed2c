#pragma once

#include "mechemu/design_sampling.hpp"
#include "mechemu/random.hpp"
#include "mechemu/types.hpp"

#include <cstdint>
#include <string>

namespace mechemu {

/// Catchment-averaged quantities entering the reservoir release rate.
struct Aggregates {
    double width = 1.0;           ///< overland flow width w [m]
    double slope = 1.0;           ///< slope s [-]
    double manning = 1.0;         ///< surface roughness n [s m^-1/3]
    double imperviousness = 1.0;  ///< impervious fraction r [-]
};

/// Base aggregates and the multiplicative map from scaling-factor parameters to
/// aggregates. A parameter named "width", "slope", "n_imp" or "imperviousness"
/// scales the matching base value; absent parameters leave the base untouched.
struct CatchmentAggregates {
    Aggregates base;

    Aggregates at(const ParameterVector& theta, const ParameterSpace& space) const;
};

/// theta' = (k, t0, A, gamma, sigma).
struct AuxiliaryParameters {
    double k = 1.0;      ///< linearisation constant [m^(2/3)]
    double t0 = 0.0;     ///< lag [s]
    double A = 1.0;      ///< effective area [m^2]
    double gamma = 5.0;  ///< correlation length in normalised parameter space
    double sigma = 0.0;  ///< noise intensity of the coupled system

    void validate() const;
};

/// kappa = -k w sqrt(s) / (A n r), in 1/s. Always negative.
double release_rate(const Aggregates& agg, const AuxiliaryParameters& aux);

/// Output gain h = k w sqrt(s) / n, so that Q = h d. Equals |kappa| * A * r.
double output_gain(const Aggregates& agg, const AuxiliaryParameters& aux);

/// Rain delayed by `lag` seconds, linearly interpolated between grid samples;
/// rain before the first sample is zero.
Eigen::VectorXd lagged_rain(const TimeSeries& rain, double lag);

/// Noise-free reservoir output on the rain grid. Sample i of the input acts on
/// (t_i - dt, t_i]; the state starts at zero one step before the first sample.
Eigen::VectorXd linear_response(double kappa, double gain, const Eigen::VectorXd& input, double dt);

/// d' = kappa d + p(t - t0), Q = h d, with rain in m/s. Output is flow in m^3/s.
TimeSeries simulate_linear(const ParameterVector& theta, const ParameterSpace& space,
                           const AuxiliaryParameters& aux, const CatchmentAggregates& catchment,
                           const TimeSeries& rain);

struct AuxFitOptions {
    int starts = 5;
    int max_evaluations = 4000;
    std::uint64_t seed = 0;
};

struct AuxFit {
    AuxiliaryParameters aux;
    double ssq_init = 0.0;
    double ssq = 0.0;
};

/// Least-squares fit of (k, t0, A) of the linear model to the design outputs.
/// Nelder-Mead on (log k, t0, log A) with seeded restarts; gamma and sigma are
/// copied from `init`.
AuxFit estimate_aux(const DesignSet& design, const TimeSeries& rain,
                    const CatchmentAggregates& catchment, const AuxiliaryParameters& init,
                    const AuxFitOptions& options = {});

/// Starting values for `estimate_aux` from design-output moments: A from the
/// runoff-to-rain volume ratio, the release rate from the lag between the rain
/// and flow centroids, t0 = 0. gamma and sigma are copied from `base`.
AuxiliaryParameters guess_aux(const DesignSet& design, const TimeSeries& rain,
                              const CatchmentAggregates& catchment, const AuxiliaryParameters& base = {});

/// Sum of squared differences between design outputs and the linear model.
double aux_objective(const DesignSet& design, const TimeSeries& rain,
                     const CatchmentAggregates& catchment, const AuxiliaryParameters& aux);

/// sigma^2 = (y - z)^T Sigma*^-1 (y - z) / (n N_t) with Sigma* the unit-noise
/// covariance of the n design replicas. Evaluated from Kalman innovations.
double estimate_sigma(const DesignSet& design, const TimeSeries& rain,
                      const CatchmentAggregates& catchment, const AuxiliaryParameters& aux);

}  // namespace mechemu
