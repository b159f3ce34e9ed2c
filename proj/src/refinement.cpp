#include "mechemu/refinement.hpp"

#include "mechemu/errors.hpp"

#include "nelder_mead.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mechemu {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<Eigen::VectorXd> PosteriorSample::model_parameters() const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.head(static_cast<Eigen::Index>(model_dim())));
    return out;
}

Table PosteriorSample::table() const {
    Table t;
    t.columns = names;
    t.columns.push_back("log_posterior");
    for (std::size_t i = 0; i < points.size(); ++i) {
        Eigen::VectorXd row(points[i].size() + 1);
        row << points[i], log_posterior[i];
        t.rows.push_back(std::move(row));
    }
    return t;
}

PosteriorSample PosteriorSample::from_table(const Table& table) {
    const std::size_t c = table.columns.size();
    if (c < 4 || table.columns[c - 1] != "log_posterior" || table.columns[c - 2] != "sigma_B" ||
        table.columns[c - 3] != "sigma_E") {
        throw ConfigError("posterior table needs columns <parameters...>,sigma_E,sigma_B,log_posterior");
    }
    PosteriorSample s;
    s.names.assign(table.columns.begin(), table.columns.end() - 1);
    for (const auto& r : table.rows) {
        s.points.push_back(r.head(static_cast<Eigen::Index>(c - 1)));
        s.log_posterior.push_back(r[static_cast<Eigen::Index>(c - 1)]);
    }
    return s;
}

PosteriorSample sample_posterior(const PosteriorTarget& target, const ParameterSpace& space,
                                 const McmcSettings& settings, std::uint64_t seed, std::uint64_t stream) {
    const std::size_t d = target.dim();
    const std::size_t md = target.model_dim();
    if (space.size() != md) throw InvalidArgument("parameter space does not match the prior");
    if (settings.steps < 2) throw InvalidArgument("MCMC needs at least two steps");
    const std::size_t W = settings.walkers == 0 ? default_walker_count(d) : settings.walkers;
    const auto burn = static_cast<std::size_t>(std::floor(settings.burn_in * static_cast<double>(settings.steps)));
    if (burn >= settings.steps) throw InvalidArgument("burn-in must be shorter than the chain");

    // Start: prior modes, sigma_E^2 and sigma_B^2 at their prior means.
    const PriorSpec& prior = target.prior();
    Eigen::VectorXd x0(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < md; ++i) x0[static_cast<Eigen::Index>(i)] = prior.parameters[i].mode;
    x0[static_cast<Eigen::Index>(md)] = 0.5 * std::log(std::max(prior.sigma_e2_mean, prior.sigma_e2_sd));
    x0[static_cast<Eigen::Index>(md + 1)] = 0.5 * std::log(1.0 / prior.sigma_b2_rate);

    Eigen::VectorXd scale(static_cast<Eigen::Index>(d));
    scale.head(static_cast<Eigen::Index>(md)) = space.spans();
    scale.tail(2).setConstant(1.0);

    auto negative = [&](const Eigen::VectorXd& x) {
        const double v = target(x);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };
    Eigen::VectorXd start = x0;
    if (settings.init_evaluations > 0) {
        auto r = detail::nelder_mead(negative, x0, 0.1 * scale, settings.init_evaluations, 1e-10, 1e-8);
        if (std::isfinite(r.f)) start = r.x;
    }

    Rng rng = make_stream(seed, "mcmc-init", stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::VectorXd> walkers;
    walkers.reserve(W);
    for (std::size_t w = 0; w < W; ++w) {
        Eigen::VectorXd x = start;
        for (int attempt = 0; attempt < 100; ++attempt) {
            Eigen::VectorXd trial = start;
            for (Eigen::Index j = 0; j < trial.size(); ++j) trial[j] += 1e-2 * scale[j] * normal(rng);
            if (std::isfinite(target(trial))) {
                x = trial;
                break;
            }
        }
        walkers.push_back(std::move(x));
    }

    LogDensity log_post = [&target](const Eigen::VectorXd& x) { return target(x); };
    EnsembleState state = make_ensemble(log_post, std::move(walkers), seed, stream);
    SamplerOptions opts;
    opts.a = settings.a;
    opts.threads = settings.threads;
    const Chain chain = run_ensemble(log_post, state, settings.steps, opts);

    PosteriorSample out;
    out.names = space.names();
    out.names.push_back("sigma_E");
    out.names.push_back("sigma_B");
    out.acceptance = chain.acceptance_rate();
    double tau = 1.0;
    for (std::size_t c = 0; c < d; ++c) tau = std::max(tau, integrated_autocorr_time(chain, c, burn));
    out.autocorr_time = tau;
    out.thin = settings.thin == 0 ? static_cast<std::size_t>(std::ceil(tau)) : settings.thin;
    out.thin = std::min(out.thin, settings.steps - burn);
    out.evaluations = target.evaluations();
    for (std::size_t s = burn + out.thin - 1; s < chain.steps(); s += out.thin) {
        for (std::size_t w = 0; w < chain.walkers; ++w) {
            const Eigen::VectorXd& x = chain.state(s, w);
            out.points.push_back(target.natural(x));
            // Drop the log-scale Jacobian to report the natural-scale density.
            const double jac = 2.0 * std::log(2.0) + 2.0 * x[static_cast<Eigen::Index>(md)] +
                               2.0 * x[static_cast<Eigen::Index>(md + 1)];
            out.log_posterior.push_back(chain.log_density_at(s, w) - jac);
        }
    }
    return out;
}

CrossMatch compare_samples(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b,
                           std::size_t size, std::uint64_t seed, std::uint64_t stream) {
    const std::size_t m = std::min({size, a.size(), b.size()});
    if (m == 0) throw InvalidArgument("cannot compare empty samples");
    Rng rng = make_stream(seed, "crossmatch", stream);
    const auto sa = subsample(a, m, rng);
    const auto sb = subsample(b, m, rng);
    return cross_match(sa, sb);
}

std::vector<std::size_t> Schedule::sizes() const {
    std::vector<std::size_t> s{initial()};
    for (std::size_t i = 0; i < iterations; ++i) s.push_back(s.back() + batch());
    return s;
}

void Schedule::validate() const {
    if (budget == 0 || budget % 8 != 0) {
        throw InvalidArgument("design budget must be a positive multiple of 8 (got " + std::to_string(budget) + ")");
    }
}

DesignSet initial_design(const Simulator& simulator, std::size_t count, double overreach) {
    DesignSet design;
    design.space = simulator.space();
    const auto unit = halton_points(count, simulator.space().size());
    for (auto& p : scale_to_box(unit, simulator.space(), overreach)) {
        TimeSeries y = simulator.run(p);
        design.append(std::move(p), std::move(y), "halton");
    }
    return design;
}

AuxiliaryParameters calibrate_aux(const DesignSet& design, const Problem& problem, double gamma,
                                  const AuxFitOptions& options) {
    AuxiliaryParameters base;
    base.gamma = gamma;
    const AuxiliaryParameters init = guess_aux(design, problem.rain, problem.catchment, base);
    AuxiliaryParameters aux = estimate_aux(design, problem.rain, problem.catchment, init, options).aux;
    aux.sigma = estimate_sigma(design, problem.rain, problem.catchment, aux);
    return aux;
}

PosteriorSample emulator_posterior(const Emulator& emulator, const Problem& problem, const McmcSettings& settings,
                                   std::uint64_t seed, std::uint64_t stream) {
    PosteriorTarget target(problem.prior, problem.observed, problem.lambda,
                           [&emulator](const ParameterVector& theta) { return emulator.predict_mean(theta); });
    return sample_posterior(target, problem.space, settings, seed, stream);
}

PosteriorSample direct_posterior(const Simulator& simulator, const Problem& problem, const McmcSettings& settings,
                                 std::uint64_t seed, std::uint64_t stream) {
    PosteriorTarget target(problem.prior, problem.observed, problem.lambda,
                           [&simulator](const ParameterVector& theta) { return simulator.run(theta).values; });
    return sample_posterior(target, problem.space, settings, seed, stream);
}

RefinementSampler::RefinementSampler(const PosteriorSample& posterior, double stretch, ParameterSpace box,
                                     std::vector<ParameterVector> existing, Rng rng)
    : box_(std::move(box)), taken_(std::move(existing)) {
    const auto theta = posterior.model_parameters();
    if (theta.empty()) throw InvalidArgument("refinement needs a non-empty posterior sample");
    candidates_ = stretch_sample(theta, stretch);
    order_.resize(candidates_.size());
    std::iota(order_.begin(), order_.end(), 0);
    for (std::size_t i = 0; i + 1 < order_.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order_.size() - 1);
        std::swap(order_[i], order_[pick(rng)]);
    }
}

ParameterVector RefinementSampler::next() {
    const Eigen::VectorXd spans = box_.spans();
    while (cursor_ < order_.size()) {
        const ParameterVector p = clip_to_box(candidates_[order_[cursor_++]], box_);
        const bool close = std::any_of(taken_.begin(), taken_.end(), [&](const ParameterVector& q) {
            return ((p - q).array() / spans.array()).matrix().norm() < 1e-6;
        });
        if (close) continue;
        taken_.push_back(p);
        return p;
    }
    throw InvalidArgument("posterior sample exhausted while drawing refinement points");
}

RefinementResult run_refinement(const Simulator& simulator, const Problem& problem, const RefinementOptions& options,
                                const PosteriorSample* reference) {
    options.schedule.validate();
    const std::uint64_t seed = options.seed;
    const ParameterSpace box = problem.space.overreached(options.emulator.overreach);
    RefinementResult result;

    auto t0 = std::chrono::steady_clock::now();
    const std::size_t first = options.iterate ? options.schedule.initial() : options.schedule.budget;
    result.design = initial_design(simulator, first, options.emulator.overreach);
    result.simulator_calls = first;
    AuxFitOptions fit = options.aux_fit;
    fit.seed = seed;
    result.aux = calibrate_aux(result.design, problem, options.gamma, fit);
    double design_seconds = seconds_since(t0);

    const std::size_t rounds = options.iterate ? Schedule::iterations : 0;
    for (std::size_t it = 0; it <= rounds; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        if (it > 0) {
            t0 = std::chrono::steady_clock::now();
            RefinementSampler draw(result.posteriors.back(), options.stretch, box, result.design.points,
                                   make_stream(seed, "refinement", it));
            for (std::size_t k = 0; k < options.schedule.batch(); ++k) {
                for (int attempt = 0;; ++attempt) {
                    ParameterVector p = draw.next();
                    try {
                        TimeSeries y = simulator.run(p);
                        ++result.simulator_calls;
                        result.design.append(std::move(p), std::move(y), "refine" + std::to_string(it));
                        break;
                    } catch (const SimulatorFailure&) {
                        ++rec.failures;
                        ++result.failed_calls;
                        if (attempt + 1 >= 3) throw;
                    }
                }
            }
            design_seconds = seconds_since(t0);
        }
        rec.design_size = result.design.size();
        rec.design_seconds = design_seconds;

        t0 = std::chrono::steady_clock::now();
        const Emulator emulator(result.design, problem.rain, result.aux, problem.catchment, options.emulator);
        result.posteriors.push_back(emulator_posterior(emulator, problem, options.mcmc, seed, it));
        rec.inference_seconds = seconds_since(t0);
        const PosteriorSample& post = result.posteriors.back();
        rec.acceptance = post.acceptance;
        if (it > 0) {
            rec.d_previous =
                compare_samples(result.posteriors[it - 1].points, post.points, options.compare_size, seed, it).distance;
        }
        if (reference != nullptr) {
            rec.d_reference =
                compare_samples(post.points, reference->points, options.compare_size, seed, 100 + it).distance;
        }
        result.records.push_back(rec);
        if (options.on_iteration) options.on_iteration(rec);
    }

    if (options.iterate) {
        const auto& r = result.records;
        const double last = r.back().d_previous;
        const double before = r[r.size() - 2].d_previous;
        result.converged = last <= options.convergence_threshold && last <= before;
    }
    return result;
}

Table diagnostics_table(const RefinementResult& result) {
    Table t;
    t.columns = {"iteration", "design_size", "d_cm_previous", "d_cm_reference", "acceptance_rate", "failures"};
    for (const auto& r : result.records) {
        Eigen::VectorXd row(6);
        row << static_cast<double>(r.iteration), static_cast<double>(r.design_size), r.d_previous, r.d_reference,
            r.acceptance, static_cast<double>(r.failures);
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace mechemu
