#pragma once

#include "mechemu/types.hpp"

#include <atomic>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace mechemu {

/// g(y) = (y^lambda - 1) / lambda for y >= 0.
double box_cox(double y, double lambda);
/// Inverse of box_cox; z at the lower domain edge -1/lambda maps to 0.
double box_cox_inverse(double z, double lambda);
Eigen::VectorXd box_cox(const Eigen::VectorXd& y, double lambda);

/// Sigma_B[i,j] = sigma_B^2 exp(-|t_i - t_j| / tau).
Eigen::MatrixXd bias_covariance(const Eigen::VectorXd& times, double sigma_b, double tau);

struct ErrorModelParams {
    double sigma_e = 1.0;  ///< white-noise sd, transformed scale
    double sigma_b = 0.0;  ///< bias sd, transformed scale
    double tau = 1.0;      ///< bias correlation time [s]
    double lambda = 0.35;  ///< Box-Cox exponent

    void validate() const;
};

/// Log density of N(0, sigma_E^2 I + Sigma_B) at `residuals` (transformed scale),
/// on a uniform grid of step `dt`. O(N_t) through a scalar Kalman filter on the
/// AR(1) form of the exponential bias kernel.
double log_likelihood_residuals(const Eigen::VectorXd& residuals, double dt, const ErrorModelParams& err);

/// Bias-corrected log likelihood of observed flow given a model output series.
double log_likelihood(const TimeSeries& observed, const TimeSeries& model, const ErrorModelParams& err);

/// Beta prior on [lower, upper] given by its mode and concentration alpha + beta.
struct BetaPrior {
    double lower = 0.0;
    double upper = 1.0;
    double mode = 0.5;
    double concentration = 6.0;

    double alpha() const;
    double beta() const;
    double log_density(double x) const;
    void validate() const;
};

struct PriorSpec {
    std::vector<BetaPrior> parameters;
    double sigma_e2_mean = 0.01;  ///< normal prior on sigma_E^2, truncated at 0
    double sigma_e2_sd = 0.01;
    double sigma_b2_rate = 10.0;  ///< exponential prior on sigma_B^2
    double tau = 6000.0;          ///< delta prior on tau [s]

    void validate() const;
};

/// Sum of independent marginal log densities; -inf outside the support.
double log_prior(const ParameterVector& theta, const ErrorModelParams& err, const PriorSpec& spec);

double log_posterior(const ParameterVector& theta, const ErrorModelParams& err, const PriorSpec& spec,
                     const TimeSeries& observed, const TimeSeries& model);

/// tau = one third of the recession time of `flow`: the time it takes the flow
/// to fall to e^-3 of its value when the rain stops.
double tau_from_recession(const TimeSeries& flow, const TimeSeries& rain);

/// Unnormalised log posterior over the sampler vector x = (theta, ln sigma_E, ln sigma_B).
/// Includes the Jacobian of the log transform of sigma_E and sigma_B. Negative
/// model outputs are clipped to zero before the Box-Cox transform.
class PosteriorTarget {
public:
    using Model = std::function<Eigen::VectorXd(const ParameterVector&)>;

    PosteriorTarget(PriorSpec prior, TimeSeries observed, double lambda, Model model);

    std::size_t model_dim() const { return prior_.parameters.size(); }
    std::size_t dim() const { return model_dim() + 2; }
    double operator()(const Eigen::VectorXd& x) const;

    ParameterVector theta(const Eigen::VectorXd& x) const { return x.head(model_dim()); }
    ErrorModelParams error_params(const Eigen::VectorXd& x) const;
    const PriorSpec& prior() const { return prior_; }
    const TimeSeries& observed() const { return observed_; }
    double lambda() const { return lambda_; }
    std::size_t evaluations() const { return evaluations_->load(); }

    /// Model-plus-error vector on the natural scale: (theta, sigma_E, sigma_B).
    Eigen::VectorXd natural(const Eigen::VectorXd& x) const;

private:
    PriorSpec prior_;
    TimeSeries observed_;
    Eigen::VectorXd observed_transformed_;
    double lambda_;
    Model model_;
    std::shared_ptr<std::atomic<std::size_t>> evaluations_;
};

}  // namespace mechemu
