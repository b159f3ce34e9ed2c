#include "mechemu/sampler.hpp"

#include "mechemu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <exception>
#include <thread>

namespace mechemu {

std::size_t default_walker_count(std::size_t dim) {
    std::size_t w = std::max<std::size_t>(2 * dim, 16);
    return w + (w % 2);
}

EnsembleState make_ensemble(const LogDensity& log_post, std::vector<Eigen::VectorXd> walkers,
                            std::uint64_t seed, std::uint64_t stream) {
    if (walkers.empty()) throw InvalidArgument("ensemble needs walkers");
    const auto d = walkers[0].size();
    for (const auto& w : walkers) {
        if (w.size() != d) throw InvalidArgument("walkers have different dimensions");
    }
    if (walkers.size() < 2 * static_cast<std::size_t>(d)) {
        throw InvalidArgument("ensemble needs at least 2d walkers (got " + std::to_string(walkers.size()) +
                              " for d = " + std::to_string(d) + ")");
    }
    if (walkers.size() % 2 != 0) throw InvalidArgument("ensemble size must be even");

    EnsembleState state;
    state.rng = make_stream(seed, "mcmc", stream);
    state.log_density.reserve(walkers.size());
    bool any_finite = false;
    for (const auto& w : walkers) {
        const double lp = log_post(w);
        any_finite = any_finite || std::isfinite(lp);
        state.log_density.push_back(lp);
    }
    if (!any_finite) throw InvalidArgument("all initial walkers have zero posterior density");
    state.walkers = std::move(walkers);
    return state;
}

double draw_stretch(Rng& rng, double a) {
    if (!(a > 1.0)) throw InvalidArgument("stretch scale a must exceed 1");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    const double s = 1.0 + u * (a - 1.0);
    return s * s / a;
}

StretchProposal stretch_move(const Eigen::VectorXd& walker, const Eigen::VectorXd& partner, double z) {
    StretchProposal p;
    p.proposal = partner + z * (walker - partner);
    p.log_adjust = static_cast<double>(walker.size() - 1) * std::log(z);
    return p;
}

namespace {

void evaluate_all(const LogDensity& log_post, const std::vector<Eigen::VectorXd>& points,
                  std::vector<double>& out, unsigned threads) {
    out.assign(points.size(), 0.0);
    if (threads <= 1 || points.size() < 2) {
        for (std::size_t i = 0; i < points.size(); ++i) out[i] = log_post(points[i]);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, points.size());
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < points.size(); i += workers) out[i] = log_post(points[i]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

Chain run_ensemble(const LogDensity& log_post, EnsembleState& state, std::size_t steps,
                   const SamplerOptions& options) {
    const std::size_t W = state.size();
    if (W < 2 || W % 2 != 0) throw InvalidArgument("ensemble size must be even and at least 2");
    if (state.log_density.size() != W) throw InvalidArgument("ensemble state has no cached log densities");
    if (std::none_of(state.log_density.begin(), state.log_density.end(),
                     [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("all walkers have zero posterior density");
    }
    const std::size_t half = W / 2;

    Chain chain;
    chain.walkers = W;
    chain.dim = state.dim();
    chain.states.reserve(steps * W);
    chain.log_density.reserve(steps * W);

    std::uniform_int_distribution<std::size_t> pick(0, half - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Eigen::VectorXd> proposals(half);
    std::vector<double> adjust(half), log_u(half), proposal_lp;

    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t h = 0; h < 2; ++h) {
            const std::size_t first = h * half;
            const std::size_t other = (1 - h) * half;
            for (std::size_t k = 0; k < half; ++k) {
                const std::size_t partner = other + pick(state.rng);
                const double z = draw_stretch(state.rng, options.a);
                auto move = stretch_move(state.walkers[first + k], state.walkers[partner], z);
                proposals[k] = std::move(move.proposal);
                adjust[k] = move.log_adjust;
                log_u[k] = std::log(unif(state.rng));
            }
            evaluate_all(log_post, proposals, proposal_lp, options.threads);
            for (std::size_t k = 0; k < half; ++k) {
                const std::size_t i = first + k;
                ++chain.proposed;
                const double lp_new = proposal_lp[k];
                if (!std::isfinite(lp_new)) continue;
                const double log_ratio = adjust[k] + lp_new - state.log_density[i];
                if (log_u[k] < log_ratio) {
                    state.walkers[i] = proposals[k];
                    state.log_density[i] = lp_new;
                    ++chain.accepted;
                }
            }
        }
        for (std::size_t w = 0; w < W; ++w) {
            chain.states.push_back(state.walkers[w]);
            chain.log_density.push_back(state.log_density[w]);
        }
        ++state.step;
    }
    return chain;
}

std::vector<Eigen::VectorXd> flat_sample(const Chain& chain, std::size_t burn_in, std::size_t thin) {
    if (thin == 0) throw InvalidArgument("thinning interval must be positive");
    if (burn_in >= chain.steps()) throw InvalidArgument("burn-in must be shorter than the chain");
    std::vector<Eigen::VectorXd> out;
    // Last state of each complete block of `thin` steps.
    for (std::size_t s = burn_in + thin - 1; s < chain.steps(); s += thin) {
        for (std::size_t w = 0; w < chain.walkers; ++w) out.push_back(chain.state(s, w));
    }
    if (out.empty()) throw InvalidArgument("flat sample is empty");
    return out;
}

double integrated_autocorr_time(const Chain& chain, std::size_t component, std::size_t burn_in) {
    if (component >= chain.dim) throw InvalidArgument("component index out of range");
    if (burn_in >= chain.steps()) throw InvalidArgument("burn-in must be shorter than the chain");
    const std::size_t N = chain.steps() - burn_in;
    const std::size_t W = chain.walkers;
    if (N < 2) return 1.0;

    Eigen::MatrixXd x(N, W);
    for (std::size_t s = 0; s < N; ++s) {
        for (std::size_t w = 0; w < W; ++w) {
            x(s, w) = chain.state(burn_in + s, w)[static_cast<Eigen::Index>(component)];
        }
    }
    x.rowwise() -= x.colwise().mean();
    const Eigen::RowVectorXd var0 = x.colwise().squaredNorm() / static_cast<double>(N);

    auto rho = [&](std::size_t lag) {
        double acc = 0.0;
        std::size_t used = 0;
        for (std::size_t w = 0; w < W; ++w) {
            if (!(var0[w] > 0.0)) continue;
            const double c = x.col(w).head(N - lag).dot(x.col(w).tail(N - lag)) / static_cast<double>(N);
            acc += c / var0[w];
            ++used;
        }
        return used == 0 ? 0.0 : acc / static_cast<double>(used);
    };

    double tau = 1.0;
    for (std::size_t m = 1; m < N; ++m) {
        tau += 2.0 * rho(m);
        if (static_cast<double>(m) >= 5.0 * tau) return std::max(tau, 1.0);
    }
    return std::max(tau, 1.0);
}

double effective_sample_size(const Chain& chain, std::size_t component, std::size_t burn_in) {
    const double tau = integrated_autocorr_time(chain, component, burn_in);
    return static_cast<double>(chain.walkers * (chain.steps() - burn_in)) / tau;
}

std::size_t suggested_thinning(const Chain& chain, std::size_t burn_in) {
    double tau = 1.0;
    for (std::size_t c = 0; c < chain.dim; ++c) {
        tau = std::max(tau, integrated_autocorr_time(chain, c, burn_in));
    }
    return static_cast<std::size_t>(std::ceil(tau));
}

}  // namespace mechemu
