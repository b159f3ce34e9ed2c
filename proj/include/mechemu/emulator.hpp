#pragma once

#include "mechemu/design_sampling.hpp"
#include "mechemu/prior_model.hpp"
#include "mechemu/types.hpp"

#include <memory>
#include <vector>

namespace mechemu {

/// exp(-(1/gamma) * || (theta_a - theta_b) / rho ||) for every pair.
Eigen::MatrixXd correlation_matrix(const std::vector<ParameterVector>& thetas, double gamma,
                                   const Eigen::VectorXd& spans);

/// Correlations of `query` with each of `thetas` (one row of the matrix above).
Eigen::VectorXd correlation_vector(const std::vector<ParameterVector>& thetas,
                                   const ParameterVector& query, double gamma,
                                   const Eigen::VectorXd& spans);

/// n+1 linear reservoirs coupled through correlated white noise.
struct CoupledSystem {
    Eigen::VectorXd kappas;       ///< release rates, all < 0
    Eigen::VectorXd gains;        ///< output gains h
    Eigen::MatrixXd correlation;  ///< (R R^T), unit diagonal
    Eigen::VectorXd input;        ///< lagged rain on the output grid [m/s]
    double sigma = 0.0;
    double dt = 1.0;
};

/// Exact one-step transition of the coupled system.
struct Discretization {
    Eigen::VectorXd transition;     ///< exp(kappa_a dt)
    Eigen::MatrixXd process_noise;  ///< sigma^2 C_ab (exp((k_a+k_b)dt) - 1)/(k_a+k_b)
};

Discretization discretize(const CoupledSystem& system);

/// (exp(s dt) - 1)/s with the s -> 0 limit dt.
double exp_integral(double s, double dt);

struct EmulatorPrediction {
    TimeSeries mean;
    Eigen::VectorXd variance;   ///< per-time marginal variance, output units^2
    double rmse_estimate = 0.0; ///< sqrt(mean(variance))
    bool outside_design_box = false;
};

/// sqrt of the mean per-time variance.
double predicted_rmse(const EmulatorPrediction& prediction);

struct EmulatorOptions {
    /// Observation noise on design outputs, relative to the largest prior
    /// marginal output variance among the design replicas.
    double jitter = 1e-10;
    double overreach = 1.05;
};

namespace detail {
struct DesignFilter;
}

/// Mechanistic emulator conditioned on a design set.
///
/// Construction runs the Kalman filter and the adjoint (Bryson-Frazier)
/// backward pass for the n design replicas; these do not depend on the query.
/// Each prediction then propagates only the query replica's cross-covariance
/// with the design replicas through the stored gains, which gives the smoothed
/// mean and marginal variance of replica n+1 in O(N_t n^2).
///
/// Immutable after construction; `predict` and `predict_mean` are safe to call
/// concurrently.
class Emulator {
public:
    Emulator(DesignSet design, TimeSeries rain, AuxiliaryParameters aux,
             CatchmentAggregates catchment, EmulatorOptions options = {});
    ~Emulator();
    Emulator(Emulator&&) noexcept;
    Emulator& operator=(Emulator&&) noexcept;

    EmulatorPrediction predict(const ParameterVector& query) const;
    Eigen::VectorXd predict_mean(const ParameterVector& query) const;

    const DesignSet& design() const { return design_; }
    const AuxiliaryParameters& aux() const { return aux_; }
    const TimeSeries& rain() const { return rain_; }
    const CatchmentAggregates& catchment() const { return catchment_; }
    double jitter_variance() const;

private:
    struct QueryTerms;
    QueryTerms query_terms(const ParameterVector& query) const;

    DesignSet design_;
    TimeSeries rain_;
    AuxiliaryParameters aux_;
    CatchmentAggregates catchment_;
    EmulatorOptions options_;
    ParameterSpace box_;
    Eigen::VectorXd spans_;
    Eigen::VectorXd input_;
    Eigen::VectorXd kappas_;
    Eigen::VectorXd gains_;
    Eigen::VectorXd transition_;
    std::unique_ptr<detail::DesignFilter> filter_;
};

/// Build an emulator and predict at one query.
EmulatorPrediction condition(const DesignSet& design, const AuxiliaryParameters& aux,
                             const TimeSeries& rain, const CatchmentAggregates& catchment,
                             const ParameterVector& query, const EmulatorOptions& options = {});

struct DensePrediction {
    EmulatorPrediction prediction;
    Eigen::MatrixXd covariance;  ///< full N_t x N_t conditioned covariance
};

/// Reference conditioning with explicit mean vectors and Green's-function
/// covariance blocks over all (n+1) N_t outputs. Refuses n N_t > 2000.
DensePrediction dense_condition(const DesignSet& design, const AuxiliaryParameters& aux,
                                const TimeSeries& rain, const CatchmentAggregates& catchment,
                                const ParameterVector& query, const EmulatorOptions& options = {});

/// Unconditioned covariance between replica outputs a and b at grid times i, j
/// (time measured from one step before the first sample).
double prior_output_covariance(double kappa_a, double kappa_b, double gain_a, double gain_b,
                               double correlation, double sigma, double elapsed_i, double elapsed_j);

}  // namespace mechemu
