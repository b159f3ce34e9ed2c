#include "mechemu/emulator.hpp"

#include "mechemu/errors.hpp"

#include "linear_filter.hpp"

#include <cmath>

namespace mechemu {

Eigen::MatrixXd correlation_matrix(const std::vector<ParameterVector>& thetas, double gamma,
                                   const Eigen::VectorXd& spans) {
    if (!(gamma > 0.0)) throw InvalidArgument("correlation length gamma must be positive");
    if (!(spans.array() > 0.0).all()) throw InvalidArgument("parameter spans must be positive");
    const auto n = static_cast<Eigen::Index>(thetas.size());
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        C(a, a) = 1.0;
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double dist = ((thetas[a] - thetas[b]).array() / spans.array()).matrix().norm();
            C(a, b) = C(b, a) = std::exp(-dist / gamma);
        }
    }
    return C;
}

Eigen::VectorXd correlation_vector(const std::vector<ParameterVector>& thetas,
                                   const ParameterVector& query, double gamma,
                                   const Eigen::VectorXd& spans) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(thetas.size()));
    for (std::size_t a = 0; a < thetas.size(); ++a) {
        const double dist = ((thetas[a] - query).array() / spans.array()).matrix().norm();
        c[static_cast<Eigen::Index>(a)] = std::exp(-dist / gamma);
    }
    return c;
}

double exp_integral(double s, double dt) {
    const double x = s * dt;
    if (std::abs(x) < 1e-8) return dt * (1.0 + 0.5 * x);
    return std::expm1(x) / s;
}

Discretization discretize(const CoupledSystem& system) {
    if (!(system.dt > 0.0)) throw InvalidArgument("time step must be positive");
    const Eigen::Index n = system.kappas.size();
    Discretization d;
    d.transition = (system.kappas * system.dt).array().exp();
    d.process_noise.resize(n, n);
    const double s2 = system.sigma * system.sigma;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const double q = s2 * system.correlation(a, b) *
                             exp_integral(system.kappas[a] + system.kappas[b], system.dt);
            d.process_noise(a, b) = d.process_noise(b, a) = q;
        }
    }
    return d;
}

double prior_output_covariance(double kappa_a, double kappa_b, double gain_a, double gain_b,
                               double correlation, double sigma, double elapsed_i, double elapsed_j) {
    // sigma^2 h_a h_b C_ab * int_0^min G_a(t_i, u) G_b(t_j, u) du with G(t, u) = exp(kappa (t - u)).
    const double m = std::min(elapsed_i, elapsed_j);
    const double s = kappa_a + kappa_b;
    const double integral = std::exp(kappa_a * (elapsed_i - m) + kappa_b * (elapsed_j - m)) *
                            (-std::expm1(s * m)) / (-s);
    return sigma * sigma * gain_a * gain_b * correlation * integral;
}

double predicted_rmse(const EmulatorPrediction& prediction) {
    if (prediction.variance.size() == 0) return 0.0;
    return std::sqrt(prediction.variance.mean());
}

struct Emulator::QueryTerms {
    double kappa = 0.0;
    double gain = 0.0;
    double transition = 0.0;
    double noise_qq = 0.0;
    Eigen::VectorXd noise_dq;
    Eigen::VectorXd prior_mean;
    bool outside = false;
};

Emulator::Emulator(DesignSet design, TimeSeries rain, AuxiliaryParameters aux,
                   CatchmentAggregates catchment, EmulatorOptions options)
    : design_(std::move(design)),
      rain_(std::move(rain)),
      aux_(aux),
      catchment_(catchment),
      options_(options) {
    if (!design_.has_outputs()) throw InvalidArgument("emulator needs a design set with outputs");
    aux_.validate();
    if ((rain_.values.array() < 0.0).any()) throw InvalidArgument("rain intensities must be non-negative");
    box_ = design_.space.overreached(options_.overreach);
    spans_ = design_.space.spans();
    input_ = lagged_rain(rain_, aux_.t0);
    const double dt = rain_.grid.step;
    const Eigen::Index steps = input_.size();
    const auto n = static_cast<Eigen::Index>(design_.size());

    kappas_.resize(n);
    gains_.resize(n);
    Eigen::MatrixXd residuals(n, steps);
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& y = design_.outputs[a];
        if (!y.grid.same_as(rain_.grid)) throw InvalidArgument("design output grid differs from rain grid");
        if (!y.values.allFinite()) throw InvalidArgument("design outputs must be finite");
        const Aggregates agg = catchment_.at(design_.points[a], design_.space);
        kappas_[a] = release_rate(agg, aux_);
        gains_[a] = output_gain(agg, aux_);
        residuals.row(a) = (y.values - linear_response(kappas_[a], gains_[a], input_, dt)).transpose();
    }
    transition_ = (kappas_ * dt).array().exp();
    if (aux_.sigma == 0.0) return;

    CoupledSystem sys;
    sys.kappas = kappas_;
    sys.gains = gains_;
    sys.correlation = correlation_matrix(design_.points, aux_.gamma, spans_);
    sys.sigma = aux_.sigma;
    sys.dt = dt;
    const Discretization disc = discretize(sys);

    double max_var = 0.0;
    const double elapsed = dt * static_cast<double>(steps);
    for (Eigen::Index a = 0; a < n; ++a) {
        max_var = std::max(max_var, prior_output_covariance(kappas_[a], kappas_[a], gains_[a], gains_[a],
                                                            1.0, aux_.sigma, elapsed, elapsed));
    }
    filter_ = std::make_unique<detail::DesignFilter>(detail::DesignFilter::run(
        disc.transition, disc.process_noise, gains_, residuals, options_.jitter * max_var, true));
}

Emulator::~Emulator() = default;
Emulator::Emulator(Emulator&&) noexcept = default;
Emulator& Emulator::operator=(Emulator&&) noexcept = default;

double Emulator::jitter_variance() const { return filter_ ? filter_->jitter : 0.0; }

Emulator::QueryTerms Emulator::query_terms(const ParameterVector& query) const {
    if (static_cast<std::size_t>(query.size()) != design_.space.size()) {
        throw InvalidArgument("query dimension does not match the design space");
    }
    QueryTerms q;
    const double dt = rain_.grid.step;
    const Aggregates agg = catchment_.at(query, design_.space);
    q.kappa = release_rate(agg, aux_);
    q.gain = output_gain(agg, aux_);
    q.transition = std::exp(q.kappa * dt);
    q.prior_mean = linear_response(q.kappa, q.gain, input_, dt);
    q.outside = !box_.contains(query);
    if (filter_) {
        const double s2 = aux_.sigma * aux_.sigma;
        const Eigen::VectorXd corr = correlation_vector(design_.points, query, aux_.gamma, spans_);
        q.noise_dq.resize(corr.size());
        for (Eigen::Index a = 0; a < corr.size(); ++a) {
            q.noise_dq[a] = s2 * corr[a] * exp_integral(kappas_[a] + q.kappa, dt);
        }
        q.noise_qq = s2 * exp_integral(2.0 * q.kappa, dt);
    }
    return q;
}

Eigen::VectorXd Emulator::predict_mean(const ParameterVector& query) const {
    QueryTerms q = query_terms(query);
    if (!filter_) return q.prior_mean;
    const auto& f = *filter_;
    const auto steps = static_cast<Eigen::Index>(f.adjoint.size());
    Eigen::VectorXd cross = q.noise_dq;  // predicted Cov(x_design, x_query)
    double mean_pred = 0.0;              // predicted query deviation from the prior mean
    Eigen::VectorXd out = q.prior_mean;
    Eigen::VectorXd filtered_cross(cross.size());
    for (Eigen::Index i = 0; i < steps; ++i) {
        out[i] += q.gain * (mean_pred + cross.dot(f.adjoint[i]));
        const double mean_filt = mean_pred + cross.dot(f.weighted_innov[i]);
        filtered_cross.noalias() = f.gain_complement[i] * cross;
        mean_pred = q.transition * mean_filt;
        cross = q.transition * transition_.cwiseProduct(filtered_cross) + q.noise_dq;
    }
    return out;
}

EmulatorPrediction Emulator::predict(const ParameterVector& query) const {
    QueryTerms q = query_terms(query);
    EmulatorPrediction pred;
    pred.outside_design_box = q.outside;
    const Eigen::Index steps = q.prior_mean.size();
    pred.variance = Eigen::VectorXd::Zero(steps);
    if (!filter_) {
        pred.mean = TimeSeries(rain_.grid, q.prior_mean, "m3/s");
        return pred;
    }
    const auto& f = *filter_;
    Eigen::VectorXd cross = q.noise_dq;
    double mean_pred = 0.0;
    double var_pred = q.noise_qq;
    Eigen::VectorXd mean = q.prior_mean;
    Eigen::VectorXd filtered_cross(cross.size());
    const double q_sq = q.transition * q.transition;
    const double tol = 1e-8 * q.noise_qq / (1.0 - q_sq + 1e-300);
    for (Eigen::Index i = 0; i < steps; ++i) {
        mean[i] += q.gain * (mean_pred + cross.dot(f.adjoint[i]));
        double v = var_pred - cross.dot(f.adjoint_info[i] * cross);
        if (v < 0.0) {
            if (v < -tol) {
                throw NumericalFailure("smoothed variance lost positivity at step " + std::to_string(i));
            }
            v = 0.0;
        }
        pred.variance[i] = q.gain * q.gain * v;

        const double mean_filt = mean_pred + cross.dot(f.weighted_innov[i]);
        const double var_filt = std::max(0.0, var_pred - cross.dot(f.info[i] * cross));
        filtered_cross.noalias() = f.gain_complement[i] * cross;
        mean_pred = q.transition * mean_filt;
        var_pred = q_sq * var_filt + q.noise_qq;
        cross = q.transition * transition_.cwiseProduct(filtered_cross) + q.noise_dq;
    }
    pred.mean = TimeSeries(rain_.grid, mean, "m3/s");
    pred.rmse_estimate = predicted_rmse(pred);
    return pred;
}

EmulatorPrediction condition(const DesignSet& design, const AuxiliaryParameters& aux,
                             const TimeSeries& rain, const CatchmentAggregates& catchment,
                             const ParameterVector& query, const EmulatorOptions& options) {
    return Emulator(design, rain, aux, catchment, options).predict(query);
}

DensePrediction dense_condition(const DesignSet& design, const AuxiliaryParameters& aux,
                                const TimeSeries& rain, const CatchmentAggregates& catchment,
                                const ParameterVector& query, const EmulatorOptions& options) {
    if (!design.has_outputs()) throw InvalidArgument("dense conditioning needs a design with outputs");
    const auto n = static_cast<Eigen::Index>(design.size());
    const auto steps = static_cast<Eigen::Index>(rain.size());
    if (n * steps > 2000) {
        throw InvalidArgument("dense conditioning refused: n * N_t = " + std::to_string(n * steps) +
                              " exceeds 2000");
    }
    const double dt = rain.grid.step;
    const Eigen::VectorXd input = lagged_rain(rain, aux.t0);

    // Replicas 0..n-1 are the design, replica n the query.
    std::vector<ParameterVector> thetas = design.points;
    thetas.push_back(query);
    Eigen::VectorXd kappa(n + 1), gain(n + 1);
    for (Eigen::Index a = 0; a <= n; ++a) {
        const Aggregates agg = catchment.at(thetas[a], design.space);
        kappa[a] = release_rate(agg, aux);
        gain[a] = output_gain(agg, aux);
    }
    const Eigen::MatrixXd C = correlation_matrix(thetas, aux.gamma, design.space.spans());

    // Mean by direct Green's-function convolution of the piecewise-constant input.
    Eigen::MatrixXd z(n + 1, steps);
    for (Eigen::Index a = 0; a <= n; ++a) {
        const double w = exp_integral(kappa[a], dt);
        for (Eigen::Index i = 0; i < steps; ++i) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k <= i; ++k) {
                acc += std::exp(kappa[a] * dt * static_cast<double>(i - k)) * w * input[k];
            }
            z(a, i) = gain[a] * acc;
        }
    }

    auto block = [&](Eigen::Index a, Eigen::Index b) {
        Eigen::MatrixXd B(steps, steps);
        for (Eigen::Index i = 0; i < steps; ++i) {
            for (Eigen::Index j = 0; j < steps; ++j) {
                B(i, j) = prior_output_covariance(kappa[a], kappa[b], gain[a], gain[b], C(a, b), aux.sigma,
                                                  dt * static_cast<double>(i + 1),
                                                  dt * static_cast<double>(j + 1));
            }
        }
        return B;
    };

    DensePrediction out;
    out.prediction.outside_design_box = !design.space.overreached(options.overreach).contains(query);
    const Eigen::MatrixXd sigma_qq = block(n, n);
    if (aux.sigma == 0.0) {
        out.prediction.mean = TimeSeries(rain.grid, z.row(n).transpose(), "m3/s");
        out.prediction.variance = Eigen::VectorXd::Zero(steps);
        out.covariance = Eigen::MatrixXd::Zero(steps, steps);
        return out;
    }
    Eigen::MatrixXd sigma_dd(n * steps, n * steps);
    Eigen::MatrixXd sigma_qd(steps, n * steps);
    Eigen::VectorXd resid(n * steps);
    double max_var = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const Eigen::MatrixXd B = block(a, b);
            sigma_dd.block(a * steps, b * steps, steps, steps) = B;
            sigma_dd.block(b * steps, a * steps, steps, steps) = B.transpose();
        }
        max_var = std::max(max_var, sigma_dd(a * steps + steps - 1, a * steps + steps - 1));
        sigma_qd.block(0, a * steps, steps, steps) = block(n, a);
        resid.segment(a * steps, steps) = design.outputs[a].values - z.row(a).transpose();
    }
    sigma_dd.diagonal().array() += options.jitter * max_var;

    Eigen::LLT<Eigen::MatrixXd> llt(sigma_dd);
    if (llt.info() != Eigen::Success) throw NumericalFailure("design covariance is not positive definite");
    const Eigen::VectorXd mean = z.row(n).transpose() + sigma_qd * llt.solve(resid);
    out.covariance = sigma_qq - sigma_qd * llt.solve(sigma_qd.transpose());
    out.prediction.mean = TimeSeries(rain.grid, mean, "m3/s");
    out.prediction.variance = out.covariance.diagonal().cwiseMax(0.0);
    out.prediction.rmse_estimate = predicted_rmse(out.prediction);
    return out;
}

}  // namespace mechemu
