#include "mechemu/prior_model.hpp"

#include "mechemu/emulator.hpp"
#include "mechemu/errors.hpp"

#include "linear_filter.hpp"
#include "nelder_mead.hpp"

#include <cmath>
#include <limits>

namespace mechemu {

Aggregates CatchmentAggregates::at(const ParameterVector& theta, const ParameterSpace& space) const {
    Aggregates a = base;
    auto scale = [&](const char* name, double& target) {
        const int idx = space.index_of(name);
        if (idx >= 0) target *= theta[idx];
    };
    scale("width", a.width);
    scale("slope", a.slope);
    scale("n_imp", a.manning);
    scale("imperviousness", a.imperviousness);
    return a;
}

void AuxiliaryParameters::validate() const {
    if (!(k > 0.0) || !(A > 0.0) || !(t0 >= 0.0) || !(gamma > 0.0) || !(sigma >= 0.0)) {
        throw InvalidArgument("auxiliary parameters need k > 0, A > 0, t0 >= 0, gamma > 0, sigma >= 0");
    }
}

namespace {

void check_aggregates(const Aggregates& agg) {
    if (!(agg.width > 0.0) || !(agg.slope > 0.0) || !(agg.manning > 0.0) || !(agg.imperviousness > 0.0)) {
        throw InvalidArgument("catchment aggregates must all be strictly positive");
    }
}

}  // namespace

double release_rate(const Aggregates& agg, const AuxiliaryParameters& aux) {
    check_aggregates(agg);
    if (!(aux.k > 0.0) || !(aux.A > 0.0)) throw InvalidArgument("release rate needs k > 0 and A > 0");
    return -aux.k * agg.width * std::sqrt(agg.slope) / (aux.A * agg.manning * agg.imperviousness);
}

double output_gain(const Aggregates& agg, const AuxiliaryParameters& aux) {
    check_aggregates(agg);
    return aux.k * agg.width * std::sqrt(agg.slope) / agg.manning;
}

Eigen::VectorXd lagged_rain(const TimeSeries& rain, double lag) {
    const Eigen::Index n = rain.values.size();
    Eigen::VectorXd out(n);
    const double shift = lag / rain.grid.step;
    auto sample = [&](Eigen::Index j) -> double {
        if (j < 0) return 0.0;
        if (j >= n) return rain.values[n - 1];
        return rain.values[j];
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) - shift;
        const double fl = std::floor(pos);
        const double frac = pos - fl;
        const auto j = static_cast<Eigen::Index>(fl);
        out[i] = (1.0 - frac) * sample(j) + frac * sample(j + 1);
    }
    return out;
}

Eigen::VectorXd linear_response(double kappa, double gain, const Eigen::VectorXd& input, double dt) {
    const double phi = std::exp(kappa * dt);
    const double drive = exp_integral(kappa, dt);
    Eigen::VectorXd out(input.size());
    double d = 0.0;
    for (Eigen::Index i = 0; i < input.size(); ++i) {
        d = phi * d + drive * input[i];
        out[i] = gain * d;
    }
    return out;
}

TimeSeries simulate_linear(const ParameterVector& theta, const ParameterSpace& space,
                           const AuxiliaryParameters& aux, const CatchmentAggregates& catchment,
                           const TimeSeries& rain) {
    if ((rain.values.array() < 0.0).any()) throw InvalidArgument("rain intensities must be non-negative");
    const Aggregates agg = catchment.at(theta, space);
    const double kappa = release_rate(agg, aux);
    const double gain = output_gain(agg, aux);
    return TimeSeries(rain.grid, linear_response(kappa, gain, lagged_rain(rain, aux.t0), rain.grid.step),
                      "m3/s");
}

AuxiliaryParameters guess_aux(const DesignSet& design, const TimeSeries& rain,
                              const CatchmentAggregates& catchment, const AuxiliaryParameters& base) {
    if (!design.has_outputs()) throw InvalidArgument("auxiliary guess needs a design with outputs");
    const double dt = rain.grid.step;
    double rain_depth = 0.0;
    double rain_moment = 0.0;
    for (Eigen::Index i = 0; i < rain.values.size(); ++i) {
        // Rain sample i falls on (t_i - dt, t_i]; use the interval midpoint.
        const double t = dt * (static_cast<double>(i) + 0.5);
        rain_depth += rain.values[i] * dt;
        rain_moment += rain.values[i] * dt * t;
    }
    if (!(rain_depth > 0.0)) throw InvalidArgument("auxiliary guess needs some rain");
    const double rain_centroid = rain_moment / rain_depth;

    double area_sum = 0.0;
    double rate_sum = 0.0;
    std::size_t used = 0;
    std::vector<double> rates;
    for (std::size_t a = 0; a < design.size(); ++a) {
        const auto& y = design.outputs[a].values;
        double volume = 0.0;
        double moment = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double t = dt * static_cast<double>(i + 1);
            volume += y[i] * dt;
            moment += y[i] * dt * t;
        }
        if (!(volume > 0.0)) continue;
        const Aggregates agg = catchment.at(design.points[a], design.space);
        const double lag = std::max(moment / volume - rain_centroid, dt);
        area_sum += volume / (agg.imperviousness * rain_depth);
        rates.push_back(1.0 / lag);
        rate_sum += agg.width * std::sqrt(agg.slope) / (agg.manning * agg.imperviousness);
        ++used;
    }
    if (used == 0) throw InvalidArgument("auxiliary guess needs non-zero design outputs");
    AuxiliaryParameters p = base;
    p.A = area_sum / static_cast<double>(used);
    double mean_rate = 0.0;
    for (double r : rates) mean_rate += r;
    mean_rate /= static_cast<double>(rates.size());
    // |kappa| = k * (w sqrt(s) / (n r)) / A, averaged over the design.
    p.k = mean_rate * p.A / (rate_sum / static_cast<double>(used));
    p.t0 = 0.0;
    return p;
}

double aux_objective(const DesignSet& design, const TimeSeries& rain,
                     const CatchmentAggregates& catchment, const AuxiliaryParameters& aux) {
    const Eigen::VectorXd input = lagged_rain(rain, aux.t0);
    double ssq = 0.0;
    for (std::size_t a = 0; a < design.size(); ++a) {
        const Aggregates agg = catchment.at(design.points[a], design.space);
        const Eigen::VectorXd z =
            linear_response(release_rate(agg, aux), output_gain(agg, aux), input, rain.grid.step);
        ssq += (design.outputs[a].values - z).squaredNorm();
    }
    return ssq;
}

AuxFit estimate_aux(const DesignSet& design, const TimeSeries& rain,
                    const CatchmentAggregates& catchment, const AuxiliaryParameters& init,
                    const AuxFitOptions& options) {
    if (!design.has_outputs()) throw InvalidArgument("auxiliary estimation needs a design with outputs");
    for (const auto& y : design.outputs) {
        if (!y.grid.same_as(rain.grid)) throw InvalidArgument("design output grid differs from rain grid");
    }
    init.validate();

    // Aggregate-dependent factors are fixed per design point; only k, t0, A move.
    std::vector<double> release_factor(design.size());
    std::vector<double> gain_factor(design.size());
    for (std::size_t a = 0; a < design.size(); ++a) {
        const Aggregates agg = catchment.at(design.points[a], design.space);
        check_aggregates(agg);
        gain_factor[a] = agg.width * std::sqrt(agg.slope) / agg.manning;
        release_factor[a] = gain_factor[a] / agg.imperviousness;
    }
    const double dt = rain.grid.step;
    auto unpack = [&](const Eigen::VectorXd& x) {
        AuxiliaryParameters p = init;
        p.k = std::exp(x[0]);
        p.t0 = std::abs(x[1]);
        p.A = std::exp(x[2]);
        return p;
    };
    auto objective = [&](const Eigen::VectorXd& x) {
        const AuxiliaryParameters p = unpack(x);
        const Eigen::VectorXd input = lagged_rain(rain, p.t0);
        double ssq = 0.0;
        for (std::size_t a = 0; a < design.size(); ++a) {
            const double kappa = -p.k * release_factor[a] / p.A;
            const Eigen::VectorXd z = linear_response(kappa, p.k * gain_factor[a], input, dt);
            ssq += (design.outputs[a].values - z).squaredNorm();
        }
        return ssq;
    };

    const Eigen::Vector3d x_init(std::log(init.k), init.t0, std::log(init.A));
    const Eigen::Vector3d step(0.3, std::max(0.25 * dt, 1.0), 0.3);
    Rng rng = make_stream(options.seed, "aux-fit");
    std::normal_distribution<double> normal(0.0, 1.0);

    AuxFit fit;
    fit.ssq_init = objective(x_init);
    Eigen::VectorXd best_x = x_init;
    double best_f = fit.ssq_init;

    for (int s = 0; s < std::max(1, options.starts); ++s) {
        Eigen::Vector3d x0 = x_init;
        if (s > 0) {
            x0[0] += 0.7 * normal(rng);
            x0[1] = std::abs(x0[1] + 0.5 * dt * normal(rng));
            x0[2] += 0.7 * normal(rng);
        }
        auto r = detail::nelder_mead(objective, x0, step, options.max_evaluations);
        // Restart from the result to escape a collapsed simplex.
        auto polished = detail::nelder_mead(objective, r.x, 0.1 * step, options.max_evaluations);
        if (polished.f < r.f) r = polished;
        if (r.f < best_f) {
            best_f = r.f;
            best_x = r.x;
        }
    }
    if (!std::isfinite(best_f)) {
        const AuxiliaryParameters p = unpack(best_x);
        throw EstimationFailed("auxiliary parameter fit did not converge", {p.k, p.t0, p.A});
    }
    fit.aux = unpack(best_x);
    fit.ssq = best_f;
    return fit;
}

double estimate_sigma(const DesignSet& design, const TimeSeries& rain,
                      const CatchmentAggregates& catchment, const AuxiliaryParameters& aux) {
    if (!design.has_outputs()) throw InvalidArgument("sigma estimation needs a design with outputs");
    const std::size_t n = design.size();
    const double dt = rain.grid.step;
    const Eigen::VectorXd input = lagged_rain(rain, aux.t0);
    const Eigen::Index steps = input.size();

    CoupledSystem sys;
    sys.kappas.resize(n);
    sys.gains.resize(n);
    Eigen::MatrixXd residuals(n, steps);
    for (std::size_t a = 0; a < n; ++a) {
        const Aggregates agg = catchment.at(design.points[a], design.space);
        sys.kappas[a] = release_rate(agg, aux);
        sys.gains[a] = output_gain(agg, aux);
        const auto& y = design.outputs[a].values;
        if (!y.allFinite()) throw InvalidArgument("design outputs must be finite");
        residuals.row(a) = (y - linear_response(sys.kappas[a], sys.gains[a], input, dt)).transpose();
    }
    if (residuals.squaredNorm() == 0.0) return 0.0;
    sys.correlation = correlation_matrix(design.points, aux.gamma, design.space.spans());
    sys.sigma = 1.0;
    sys.dt = dt;
    const Discretization disc = discretize(sys);

    double max_var = 0.0;
    const double elapsed = dt * static_cast<double>(steps);
    for (std::size_t a = 0; a < n; ++a) {
        max_var = std::max(max_var, prior_output_covariance(sys.kappas[a], sys.kappas[a], sys.gains[a],
                                                            sys.gains[a], 1.0, 1.0, elapsed, elapsed));
    }
    const auto filter = detail::DesignFilter::run(disc.transition, disc.process_noise, sys.gains,
                                                  residuals, 1e-10 * max_var, false);
    return std::sqrt(filter.quadratic_form / (static_cast<double>(n) * static_cast<double>(steps)));
}

}  // namespace mechemu
