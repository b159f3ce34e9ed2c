#include "mechemu/likelihood.hpp"

#include "mechemu/errors.hpp"

#include <cmath>
#include <numbers>

namespace mechemu {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

double box_cox(double y, double lambda) {
    if (lambda == 0.0) throw InvalidArgument("Box-Cox exponent must be non-zero");
    if (!(y >= 0.0)) throw InvalidArgument("Box-Cox transform needs non-negative flows");
    return (std::pow(y, lambda) - 1.0) / lambda;
}

double box_cox_inverse(double z, double lambda) {
    if (lambda == 0.0) throw InvalidArgument("Box-Cox exponent must be non-zero");
    const double base = lambda * z + 1.0;
    if (base < 0.0 || !std::isfinite(base)) {
        throw InvalidArgument("inverse Box-Cox outside its domain (lambda z + 1 < 0)");
    }
    return std::pow(base, 1.0 / lambda);
}

Eigen::VectorXd box_cox(const Eigen::VectorXd& y, double lambda) {
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = box_cox(y[i], lambda);
    return out;
}

Eigen::MatrixXd bias_covariance(const Eigen::VectorXd& times, double sigma_b, double tau) {
    if (!(sigma_b >= 0.0) || !(tau > 0.0)) throw InvalidArgument("bias covariance needs sigma_B >= 0, tau > 0");
    const Eigen::Index n = times.size();
    Eigen::MatrixXd S(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            S(i, j) = sigma_b * sigma_b * std::exp(-std::abs(times[i] - times[j]) / tau);
        }
    }
    return S;
}

void ErrorModelParams::validate() const {
    if (!(sigma_e > 0.0) || !(sigma_b >= 0.0) || !(tau > 0.0) || !(lambda > 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("error model needs sigma_E > 0, sigma_B >= 0, tau > 0, lambda in (0, 1]");
    }
}

double log_likelihood_residuals(const Eigen::VectorXd& residuals, double dt, const ErrorModelParams& err) {
    err.validate();
    const double ve = err.sigma_e * err.sigma_e;
    const double vb = err.sigma_b * err.sigma_b;
    const double phi = std::exp(-dt / err.tau);
    const double innovation_var = vb * (1.0 - phi * phi);
    double m = 0.0;
    double P = vb;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        if (i > 0) {
            m *= phi;
            P = phi * phi * P + innovation_var;
        }
        const double S = P + ve;
        if (!(S > 0.0)) throw NumericalFailure("likelihood covariance is not positive definite");
        const double nu = residuals[i] - m;
        ll -= 0.5 * (kLog2Pi + std::log(S) + nu * nu / S);
        const double K = P / S;
        m += K * nu;
        P = P * ve / S;
    }
    return ll;
}

double log_likelihood(const TimeSeries& observed, const TimeSeries& model, const ErrorModelParams& err) {
    if (!observed.grid.same_as(model.grid)) throw InvalidArgument("observed and model series use different grids");
    const Eigen::VectorXd r = box_cox(observed.values, err.lambda) - box_cox(model.values, err.lambda);
    return log_likelihood_residuals(r, observed.grid.step, err);
}

double BetaPrior::alpha() const { return 1.0 + (concentration - 2.0) * (mode - lower) / (upper - lower); }
double BetaPrior::beta() const { return concentration - alpha(); }

void BetaPrior::validate() const {
    if (!(lower < upper)) throw InvalidArgument("beta prior needs lower < upper");
    if (!(mode > lower && mode < upper)) throw InvalidArgument("beta prior mode must lie strictly inside its bounds");
    if (!(concentration > 2.0)) throw InvalidArgument("beta prior concentration must exceed 2");
}

double BetaPrior::log_density(double x) const {
    if (!(x > lower && x < upper)) return kNegInf;
    const double a = alpha();
    const double b = beta();
    const double u = (x - lower) / (upper - lower);
    const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_norm - std::log(upper - lower);
}

void PriorSpec::validate() const {
    for (const auto& p : parameters) p.validate();
    if (!(sigma_e2_sd > 0.0)) throw InvalidArgument("sigma_E^2 prior sd must be positive");
    if (!(sigma_b2_rate > 0.0)) throw InvalidArgument("sigma_B^2 prior rate must be positive");
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
}

double log_prior(const ParameterVector& theta, const ErrorModelParams& err, const PriorSpec& spec) {
    if (static_cast<std::size_t>(theta.size()) != spec.parameters.size()) {
        throw InvalidArgument("parameter vector length does not match the prior");
    }
    double lp = 0.0;
    for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
        lp += spec.parameters[i].log_density(theta[static_cast<Eigen::Index>(i)]);
        if (lp == kNegInf) return kNegInf;
    }
    const double ve = err.sigma_e * err.sigma_e;
    if (!(ve > 0.0)) return kNegInf;
    const double zm = (ve - spec.sigma_e2_mean) / spec.sigma_e2_sd;
    // Normalisation over [0, inf).
    const double mass = 0.5 * std::erfc(-spec.sigma_e2_mean / (spec.sigma_e2_sd * std::numbers::sqrt2));
    lp += -0.5 * zm * zm - std::log(spec.sigma_e2_sd) - 0.5 * kLog2Pi - std::log(mass);

    const double vb = err.sigma_b * err.sigma_b;
    if (!(vb >= 0.0)) return kNegInf;
    lp += std::log(spec.sigma_b2_rate) - spec.sigma_b2_rate * vb;

    if (std::abs(err.tau - spec.tau) > 1e-9 * spec.tau) return kNegInf;
    return lp;
}

double log_posterior(const ParameterVector& theta, const ErrorModelParams& err, const PriorSpec& spec,
                     const TimeSeries& observed, const TimeSeries& model) {
    const double lp = log_prior(theta, err, spec);
    if (lp == kNegInf) return kNegInf;
    return lp + log_likelihood(observed, model, err);
}

double tau_from_recession(const TimeSeries& flow, const TimeSeries& rain) {
    if (!flow.grid.same_as(rain.grid)) throw InvalidArgument("flow and rain grids differ");
    Eigen::Index last_rain = -1;
    for (Eigen::Index i = 0; i < rain.values.size(); ++i) {
        if (rain.values[i] > 0.0) last_rain = i;
    }
    if (last_rain < 0) throw InvalidArgument("no rain in the series; cannot find a recession limb");
    const double dt = flow.grid.step;
    const double q0 = flow.values[last_rain];
    if (!(q0 > 0.0)) throw InvalidArgument("no flow at the end of rain; cannot find a recession limb");
    const double target = q0 * std::exp(-3.0);
    for (Eigen::Index i = last_rain + 1; i < flow.values.size(); ++i) {
        if (flow.values[i] <= target) {
            // Log-linear interpolation between the bracketing samples.
            const double a = std::log(flow.values[i - 1]);
            const double b = std::log(std::max(flow.values[i], 1e-300));
            const double frac = (a - std::log(target)) / (a - b);
            const double t = dt * (static_cast<double>(i - 1 - last_rain) + frac);
            return t / 3.0;
        }
    }
    // Not reached inside the series: extrapolate the mean log slope of the limb.
    const Eigen::Index end = flow.values.size() - 1;
    if (end <= last_rain || !(flow.values[end] > 0.0) || !(flow.values[end] < q0)) {
        throw InvalidArgument("recession limb does not decay inside the series");
    }
    const double rate = (std::log(q0) - std::log(flow.values[end])) / (dt * static_cast<double>(end - last_rain));
    return (3.0 / rate) / 3.0;
}

PosteriorTarget::PosteriorTarget(PriorSpec prior, TimeSeries observed, double lambda, Model model)
    : prior_(std::move(prior)),
      observed_(std::move(observed)),
      lambda_(lambda),
      model_(std::move(model)),
      evaluations_(std::make_shared<std::atomic<std::size_t>>(0)) {
    prior_.validate();
    observed_transformed_ = box_cox(observed_.values, lambda_);
}

ErrorModelParams PosteriorTarget::error_params(const Eigen::VectorXd& x) const {
    const auto d = static_cast<Eigen::Index>(model_dim());
    ErrorModelParams e;
    e.sigma_e = std::exp(x[d]);
    e.sigma_b = std::exp(x[d + 1]);
    e.tau = prior_.tau;
    e.lambda = lambda_;
    return e;
}

Eigen::VectorXd PosteriorTarget::natural(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = x;
    const auto d = static_cast<Eigen::Index>(model_dim());
    out[d] = std::exp(x[d]);
    out[d + 1] = std::exp(x[d + 1]);
    return out;
}

double PosteriorTarget::operator()(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != dim() || !x.allFinite()) return kNegInf;
    const ParameterVector th = theta(x);
    const ErrorModelParams err = error_params(x);
    if (!(err.sigma_e > 0.0) || !std::isfinite(err.sigma_b)) return kNegInf;
    double lp = log_prior(th, err, prior_);
    if (lp == kNegInf) return kNegInf;
    // Jacobian of sigma^2 -> ln sigma: d sigma^2 / d ln sigma = 2 sigma^2.
    const auto d = static_cast<Eigen::Index>(model_dim());
    lp += std::log(2.0) + 2.0 * x[d] + std::log(2.0) + 2.0 * x[d + 1];

    evaluations_->fetch_add(1, std::memory_order_relaxed);
    Eigen::VectorXd y;
    try {
        y = model_(th);
    } catch (const SimulatorFailure&) {
        return kNegInf;
    }
    if (y.size() != observed_.values.size() || !y.allFinite()) return kNegInf;
    Eigen::VectorXd r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        r[i] = observed_transformed_[i] - box_cox(std::max(y[i], 0.0), lambda_);
    }
    return lp + log_likelihood_residuals(r, observed_.grid.step, err);
}

}  // namespace mechemu
