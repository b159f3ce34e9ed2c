#include "mechemu/commands.hpp"

#include "mechemu/errors.hpp"
#include "mechemu/io.hpp"
#include "mechemu/svg.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace mechemu {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("missing artifact: " + path.string());
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
}

std::string join(const std::vector<std::size_t>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
    return s;
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string short_num(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

// Type-7 quantile of a sorted vector.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_posterior(const fs::path& path, const PosteriorSample& post) { write_table(path, post.table()); }

json posterior_summary(const PosteriorSample& post, const std::string& mode) {
    return {{"mode", mode},
            {"points", post.points.size()},
            {"acceptance_rate", post.acceptance},
            {"autocorr_time", post.autocorr_time},
            {"thin", post.thin},
            {"evaluations", post.evaluations}};
}

}  // namespace

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw ConfigError("run directory is locked: " + path_.string() +
                              " exists (another command is running, or remove the stale lock)");
        }
        throw ConfigError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

void write_design(const fs::path& dir, const DesignSet& design, const AuxiliaryParameters& aux, double tau) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir / "outputs");
    std::string text = "index";
    for (const auto& name : design.space.names()) text += "," + name;
    text += ",origin\n";
    for (std::size_t i = 0; i < design.size(); ++i) {
        text += std::to_string(i);
        for (Eigen::Index j = 0; j < design.points[i].size(); ++j) text += "," + format_number(design.points[i][j]);
        text += "," + design.origins[i] + "\n";
        write_time_series(dir / "outputs" / (std::to_string(i) + ".csv"), design.outputs[i]);
    }
    write_text(dir / "design.csv", text);
    write_json(dir / "meta.json", {{"design_size", design.size()},
                                   {"k", aux.k},
                                   {"t0_s", aux.t0},
                                   {"A_m2", aux.A},
                                   {"gamma", aux.gamma},
                                   {"sigma", aux.sigma},
                                   {"tau_s", tau}});
}

StoredDesign read_design(const fs::path& dir, const ParameterSpace& space, const std::string& unit) {
    const fs::path csv = dir / "design.csv";
    if (!fs::is_regular_file(csv)) throw ConfigError("missing artifact: " + csv.string() + " (run `design` first)");
    std::istringstream in(read_text(csv));
    std::string line;
    std::getline(in, line);
    std::vector<std::string> expected{"index"};
    for (const auto& n : space.names()) expected.push_back(n);
    expected.push_back("origin");
    if (split_csv_line(line) != expected) {
        throw ConfigError(csv.string() + ": header does not match the configured parameters");
    }
    StoredDesign s;
    s.design.space = space;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != expected.size()) throw ConfigError(csv.string() + ": row " + std::to_string(row) + " has the wrong width");
        ParameterVector p(static_cast<Eigen::Index>(space.size()));
        try {
            for (std::size_t j = 0; j < space.size(); ++j) p[static_cast<Eigen::Index>(j)] = std::stod(cells[j + 1]);
        } catch (const std::exception&) {
            throw ConfigError(csv.string() + ": row " + std::to_string(row) + " is not numeric");
        }
        TimeSeries y = read_time_series(dir / "outputs" / (cells[0] + ".csv"), unit);
        s.design.append(std::move(p), std::move(y), cells.back());
    }
    if (s.design.size() == 0) throw ConfigError(csv.string() + " has no design points");
    const json meta = read_json(dir / "meta.json");
    try {
        s.aux.k = meta.at("k").get<double>();
        s.aux.t0 = meta.at("t0_s").get<double>();
        s.aux.A = meta.at("A_m2").get<double>();
        s.aux.gamma = meta.at("gamma").get<double>();
        s.aux.sigma = meta.at("sigma").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError((dir / "meta.json").string() + ": " + e.what());
    }
    return s;
}

RunConfig resolve_config(const CommandOptions& options) {
    RunConfig c = load_config(options.config);
    if (options.seed) c.seed = *options.seed;
    if (options.out) c.output_dir = fs::absolute(*options.out).lexically_normal();
    return c;
}

int cmd_design(const CommandOptions& options, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    if (options.stage != "initial" && options.stage != "full") {
        throw InvalidArgument("--stage must be 'initial' or 'full'");
    }
    RunLock lock(cfg.output_dir);
    write_text(cfg.output_dir / "config.json", cfg.snapshot());
    LoadedProblem lp = load_problem(cfg);
    const Schedule schedule{cfg.budget};
    const std::size_t count = options.stage == "initial" ? schedule.initial() : schedule.budget;
    log << "design: " << count << " Halton points (budget " << cfg.budget << ", stage " << options.stage << ", "
        << lp.simulator->name() << " simulator)\n";

    const auto t0 = Clock::now();
    const DesignSet design = initial_design(*lp.simulator, count, cfg.emulator.overreach);
    const double run_ms = ms_since(t0);
    AuxFitOptions fit = cfg.aux_fit;
    fit.seed = cfg.seed;
    const auto t1 = Clock::now();
    const AuxiliaryParameters aux = calibrate_aux(design, lp.problem, cfg.gamma, fit);
    const double fit_ms = ms_since(t1);

    write_design(cfg.output_dir / "design", design, aux, lp.problem.prior.tau);
    write_json(cfg.output_dir / "design" / "timings.json", {{"simulator_ms", run_ms}, {"aux_fit_ms", fit_ms}});
    log << "aux: k=" << short_num(aux.k) << " t0=" << short_num(aux.t0) << " s A=" << short_num(aux.A)
        << " m2 sigma=" << short_num(aux.sigma) << " tau=" << short_num(lp.problem.prior.tau) << " s\n";
    log << "wrote " << (cfg.output_dir / "design").string() << "\n";
    return 0;
}

int cmd_infer(const CommandOptions& options, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    if (options.mode != "emulator" && options.mode != "direct") {
        throw InvalidArgument("--mode must be 'emulator' or 'direct'");
    }
    RunLock lock(cfg.output_dir);
    write_text(cfg.output_dir / "config.json", cfg.snapshot());
    LoadedProblem lp = load_problem(cfg);
    const fs::path dir = cfg.output_dir / ("infer_" + options.mode);

    const auto t0 = Clock::now();
    PosteriorSample post;
    json summary;
    if (options.mode == "emulator") {
        const StoredDesign stored = read_design(cfg.output_dir / "design", cfg.space, cfg.flow_unit);
        for (const auto& y : stored.design.outputs) {
            if (!y.grid.same_as(lp.problem.rain.grid)) throw ConfigError("design outputs are not on the rain grid");
        }
        const Emulator emulator(stored.design, lp.problem.rain, stored.aux, lp.problem.catchment, cfg.emulator);
        log << "infer: emulator with " << stored.design.size() << " design points\n";
        post = emulator_posterior(emulator, lp.problem, cfg.mcmc, cfg.seed, 0);
        summary = posterior_summary(post, options.mode);
        summary["design_size"] = stored.design.size();
    } else {
        log << "infer: direct " << lp.simulator->name() << " simulator\n";
        post = direct_posterior(*lp.simulator, lp.problem, cfg.mcmc, cfg.seed, 0);
        summary = posterior_summary(post, options.mode);
        log << "direct inference used " << post.evaluations << " simulator evaluations\n";
        if (static_cast<double>(cfg.mcmc.steps) < 50.0 * post.autocorr_time) {
            log << "warning: " << cfg.mcmc.steps << " steps are fewer than 50 autocorrelation times ("
                << fixed(post.autocorr_time, 1) << "); " << post.evaluations
                << " simulator evaluations may be too few for a reliable posterior\n";
        }
    }
    const double total_ms = ms_since(t0);
    if (post.points.empty()) throw NumericalFailure("no posterior points retained after burn-in and thinning");
    std::error_code ec;
    fs::remove_all(dir, ec);
    write_posterior(dir / "posterior.csv", post);
    write_json(dir / "summary.json", summary);
    write_json(dir / "timings.json", {{"inference_ms", total_ms}});
    log << "posterior: " << post.points.size() << " points, acceptance " << fixed(post.acceptance) << ", tau "
        << fixed(post.autocorr_time, 1) << ", thin " << post.thin << "\n";
    log << "wrote " << (dir / "posterior.csv").string() << "\n";
    return 0;
}

int cmd_refine(const CommandOptions& options, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    RunLock lock(cfg.output_dir);
    write_text(cfg.output_dir / "config.json", cfg.snapshot());
    LoadedProblem lp = load_problem(cfg);

    RefinementOptions ro;
    ro.schedule.budget = cfg.budget;
    ro.stretch = cfg.stretch;
    ro.gamma = cfg.gamma;
    ro.emulator = cfg.emulator;
    ro.aux_fit = cfg.aux_fit;
    ro.mcmc = cfg.mcmc;
    ro.compare_size = cfg.compare_size;
    ro.convergence_threshold = cfg.convergence_threshold;
    ro.seed = cfg.seed;
    ro.on_iteration = [&log](const IterationRecord& r) {
        log << "iteration " << r.iteration << ": n=" << r.design_size;
        if (std::isfinite(r.d_previous)) log << " d_cm(previous)=" << fixed(r.d_previous);
        if (std::isfinite(r.d_reference)) log << " d_cm(reference)=" << fixed(r.d_reference);
        log << " acceptance=" << fixed(r.acceptance) << "\n";
    };
    log << "schedule: " << join(ro.schedule.sizes(), "/") << "\n";

    std::optional<PosteriorSample> reference;
    const fs::path ref_path = cfg.output_dir / "infer_direct" / "posterior.csv";
    if (fs::is_regular_file(ref_path)) {
        PosteriorSample r = PosteriorSample::from_table(read_table(ref_path));
        std::vector<std::string> names = cfg.space.names();
        names.push_back("sigma_E");
        names.push_back("sigma_B");
        if (r.names == names) {
            reference = std::move(r);
            log << "reference: " << ref_path.string() << "\n";
        } else {
            log << "warning: ignoring " << ref_path.string() << " (columns differ from the configured parameters)\n";
        }
    }

    const auto t0 = Clock::now();
    const RefinementResult result =
        run_refinement(*lp.simulator, lp.problem, ro, reference ? &*reference : nullptr);
    const double total_ms = ms_since(t0);

    const fs::path dir = cfg.output_dir / "refine";
    std::error_code ec;
    fs::remove_all(dir, ec);
    write_design(dir / "design", result.design, result.aux, lp.problem.prior.tau);
    for (std::size_t i = 0; i < result.posteriors.size(); ++i) {
        write_posterior(dir / ("posterior_" + std::to_string(i) + ".csv"), result.posteriors[i]);
    }
    write_posterior(dir / "posterior.csv", result.posteriors.back());
    write_table(dir / "diagnostics.csv", diagnostics_table(result));
    std::vector<std::size_t> sizes;
    for (const auto& r : result.records) sizes.push_back(r.design_size);
    write_json(dir / "status.json", {{"converged", result.converged},
                                     {"design_sizes", sizes},
                                     {"final_d_cm_previous", result.records.back().d_previous},
                                     {"simulator_calls", result.simulator_calls},
                                     {"failed_calls", result.failed_calls}});
    json timing = json::array();
    for (const auto& r : result.records) {
        timing.push_back({{"iteration", r.iteration},
                          {"design_ms", 1e3 * r.design_seconds},
                          {"inference_ms", 1e3 * r.inference_seconds}});
    }
    write_json(dir / "timings.json", {{"total_ms", total_ms}, {"iterations", timing}});
    log << "converged: " << (result.converged ? "true" : "false") << "\n";
    log << "wrote " << dir.string() << "\n";
    return 0;
}

int cmd_compare(const fs::path& a, const fs::path& b, std::uint64_t seed, std::size_t size,
                const std::optional<fs::path>& out, std::ostream& log) {
    auto load = [](const fs::path& p) {
        if (!fs::is_regular_file(p)) throw ConfigError("sample file not found: " + p.string());
        Table t = read_table(p);
        const int lp = t.column("log_posterior");
        if (lp >= 0) {
            t.columns.erase(t.columns.begin() + lp);
            for (auto& r : t.rows) {
                Eigen::VectorXd keep(r.size() - 1);
                keep << r.head(lp), r.tail(r.size() - lp - 1);
                r = keep;
            }
        }
        if (t.rows.empty()) throw ConfigError("sample file has no rows: " + p.string());
        return t;
    };
    const Table ta = load(a);
    const Table tb = load(b);
    if (ta.columns != tb.columns) throw ConfigError("sample files have different columns");

    const std::size_t m = std::min({size == 0 ? ta.rows.size() : size, ta.rows.size(), tb.rows.size()});
    log << "A: " << a.string() << " (" << ta.rows.size() << " rows)\n";
    log << "B: " << b.string() << " (" << tb.rows.size() << " rows)\n";
    if (ta.rows.size() != m || tb.rows.size() != m) {
        log << "subsampling to " << m << " rows per sample (seed " << seed << ", stream crossmatch/0)\n";
    }
    const CrossMatch cm = compare_samples(ta.rows, tb.rows, m, seed, 0);
    log << "cross-match pairs: " << cm.cross_pairs << " of " << m << (cm.exact ? "" : " (greedy matching)") << "\n";
    log << "d_cm = " << fixed(cm.distance, 4) << "\n";
    if (out) {
        RunLock lock(*out);
        write_json(*out / "compare.json", {{"sample_a", a.string()},
                                           {"sample_b", b.string()},
                                           {"rows_a", ta.rows.size()},
                                           {"rows_b", tb.rows.size()},
                                           {"per_sample", m},
                                           {"seed", seed},
                                           {"cross_pairs", cm.cross_pairs},
                                           {"exact", cm.exact},
                                           {"d_cm", cm.distance}});
    }
    return 0;
}

namespace {

struct Source {
    std::string name;
    fs::path path;
    PosteriorSample sample;
};

struct Band {
    Eigen::VectorXd lower, median, upper;
    double coverage = 0.0;
};

// Posterior predictive band of the observations: simulator output at up to
// 100 posterior points plus a fresh bias and noise draw for each.
Band predictive_band(const PosteriorSample& post, const Problem& problem, const Simulator& sim, std::uint64_t seed) {
    const std::size_t n = post.points.size();
    const std::size_t count = std::min<std::size_t>(100, n);
    const std::size_t T = problem.observed.size();
    const double dt = problem.observed.grid.step;
    const std::size_t md = post.model_dim();
    std::vector<std::vector<double>> draws(T);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < count; ++k) {
        const Eigen::VectorXd& x = post.points[k * n / count];
        const Eigen::VectorXd y = sim.run(x.head(static_cast<Eigen::Index>(md))).values;
        const double se = x[static_cast<Eigen::Index>(md)];
        const double sb = x[static_cast<Eigen::Index>(md + 1)];
        Rng rng = make_stream(seed, "report", k);
        const Eigen::VectorXd bias = draw_bias(T, dt, sb, problem.prior.tau, rng);
        for (std::size_t t = 0; t < T; ++t) {
            const auto ti = static_cast<Eigen::Index>(t);
            const double z = box_cox(std::max(y[ti], 0.0), problem.lambda) + bias[ti] + se * normal(rng);
            draws[t].push_back(problem.lambda * z + 1.0 <= 0.0 ? 0.0 : box_cox_inverse(z, problem.lambda));
        }
    }
    Band band;
    band.lower.resize(static_cast<Eigen::Index>(T));
    band.median.resize(static_cast<Eigen::Index>(T));
    band.upper.resize(static_cast<Eigen::Index>(T));
    std::size_t inside = 0;
    for (std::size_t t = 0; t < T; ++t) {
        auto& d = draws[t];
        std::sort(d.begin(), d.end());
        const auto ti = static_cast<Eigen::Index>(t);
        band.lower[ti] = quantile(d, 0.025);
        band.median[ti] = quantile(d, 0.5);
        band.upper[ti] = quantile(d, 0.975);
        const double o = problem.observed.values[ti];
        if (o >= band.lower[ti] && o <= band.upper[ti]) ++inside;
    }
    band.coverage = static_cast<double>(inside) / static_cast<double>(T);
    return band;
}

}  // namespace

int cmd_report(const fs::path& run_dir, std::ostream& log) {
    if (!fs::is_directory(run_dir)) throw ConfigError("run directory not found: " + run_dir.string());
    const fs::path cfg_path = run_dir / "config.json";
    if (!fs::is_regular_file(cfg_path)) {
        throw ConfigError("missing artifact: " + cfg_path.string() + " (not a run directory, or nothing has run yet)");
    }
    std::vector<Source> sources;
    for (const auto& [name, rel] : std::vector<std::pair<std::string, std::string>>{
             {"emulator", "infer_emulator/posterior.csv"},
             {"direct", "infer_direct/posterior.csv"},
             {"refined", "refine/posterior.csv"}}) {
        const fs::path p = run_dir / rel;
        if (fs::is_regular_file(p)) sources.push_back({name, p, PosteriorSample::from_table(read_table(p))});
    }
    if (sources.empty()) {
        throw ConfigError("missing artifact: no posterior.csv under infer_emulator/, infer_direct/ or refine/ in " +
                          run_dir.string());
    }
    RunLock lock(run_dir);
    const RunConfig cfg = load_config(cfg_path);
    LoadedProblem lp = load_problem(cfg);
    const fs::path plots = run_dir / "report";
    fs::create_directories(plots);

    std::ostringstream md;
    md << "# Calibration report\n\n";
    md << "Run directory: `" << run_dir.string() << "`  \n";
    md << "Simulator: " << lp.simulator->name() << ", " << cfg.space.size() << " parameters, flow unit "
       << cfg.flow_unit << ", tau = " << short_num(lp.problem.prior.tau) << " s\n\n";

    for (const Source& src : sources) {
        const PosteriorSample& post = src.sample;
        if (post.model_dim() != cfg.space.size()) throw ConfigError(src.path.string() + " does not match the config");
        md << "## Posterior: " << src.name << "\n\n";
        md << "`" << src.path.lexically_relative(run_dir).string() << "`, " << post.points.size() << " points\n\n";
        md << "| parameter | mean | sd | 2.5% | 97.5% |";
        if (cfg.synthetic) md << " truth |";
        md << "\n|---|---|---|---|---|" << (cfg.synthetic ? "---|" : "") << "\n";
        for (std::size_t j = 0; j < post.names.size(); ++j) {
            std::vector<double> v;
            v.reserve(post.points.size());
            for (const auto& p : post.points) v.push_back(p[static_cast<Eigen::Index>(j)]);
            std::sort(v.begin(), v.end());
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
            std::optional<double> truth;
            if (cfg.synthetic) {
                if (j < post.model_dim()) {
                    truth = cfg.synthetic->truth[static_cast<Eigen::Index>(j)];
                } else {
                    truth = j == post.model_dim() ? cfg.synthetic->sigma_e : cfg.synthetic->sigma_b;
                }
            }
            md << "| " << post.names[j] << " | " << short_num(mean) << " | " << short_num(sd) << " | "
               << short_num(quantile(v, 0.025)) << " | " << short_num(quantile(v, 0.975)) << " |";
            if (truth) md << " " << short_num(*truth) << " |";
            md << "\n";
            const std::string file = "hist_" + src.name + "_" + post.names[j] + ".svg";
            write_text(plots / file,
                       histogram_svg({src.name + " posterior: " + post.names[j], post.names[j], "density"}, v, 30,
                                     truth));
        }
        const Band band = predictive_band(post, lp.problem, *lp.simulator, cfg.seed);
        BandPlot bp;
        bp.axes = {src.name + " posterior: predictive band", "time [h]", "flow [" + cfg.flow_unit + "]"};
        bp.x.resize(static_cast<Eigen::Index>(lp.problem.observed.size()));
        for (std::size_t t = 0; t < lp.problem.observed.size(); ++t) {
            bp.x[static_cast<Eigen::Index>(t)] = lp.problem.observed.grid.time(t) / 3600.0;
        }
        bp.lower = band.lower;
        bp.upper = band.upper;
        bp.median = band.median;
        bp.observed = lp.problem.observed.values;
        const std::string band_file = "band_" + src.name + ".svg";
        write_text(plots / band_file, band_svg(bp));
        md << "\n95% predictive band covers " << fixed(100.0 * band.coverage, 1)
           << "% of the observations. Plots: `report/" << band_file << "`, `report/hist_" << src.name
           << "_*.svg`\n\n";
    }

    if (sources.size() > 1) {
        md << "## Cross-match distances\n\n| A | B | d_cm |\n|---|---|---|\n";
        for (std::size_t i = 0; i < sources.size(); ++i) {
            for (std::size_t j = i + 1; j < sources.size(); ++j) {
                const CrossMatch cm = compare_samples(sources[i].sample.points, sources[j].sample.points,
                                                      cfg.compare_size, cfg.seed, 0);
                md << "| " << sources[i].name << " | " << sources[j].name << " | " << fixed(cm.distance) << " |\n";
            }
        }
        md << "\n";
    }

    const fs::path diag = run_dir / "refine" / "diagnostics.csv";
    if (fs::is_regular_file(diag)) {
        const Table t = read_table(diag);
        const int ns = t.column("design_size"), dp = t.column("d_cm_previous"), dr = t.column("d_cm_reference");
        std::vector<double> xp, yp, xr, yr;
        md << "## Refinement\n\n| design size | d_cm previous | d_cm reference |\n|---|---|---|\n";
        for (const auto& r : t.rows) {
            md << "| " << r[ns] << " | " << (std::isfinite(r[dp]) ? fixed(r[dp]) : "-") << " | "
               << (std::isfinite(r[dr]) ? fixed(r[dr]) : "-") << " |\n";
            if (std::isfinite(r[dp])) {
                xp.push_back(r[ns]);
                yp.push_back(r[dp]);
            }
            if (std::isfinite(r[dr])) {
                xr.push_back(r[ns]);
                yr.push_back(r[dr]);
            }
        }
        std::vector<LineSeries> series;
        auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval(); };
        if (!xp.empty()) series.push_back({"vs previous", vec(xp), vec(yp), true});
        if (!xr.empty()) series.push_back({"vs reference", vec(xr), vec(yr), true});
        if (!series.empty()) {
            write_text(plots / "dcm_trend.svg", lines_svg({"Cross-match distance", "design size", "d_cm"}, series));
            md << "\nPlot: `report/dcm_trend.svg`\n";
        }
        const fs::path status = run_dir / "refine" / "status.json";
        if (fs::is_regular_file(status)) {
            md << "\nConverged: " << (read_json(status).value("converged", false) ? "yes" : "no") << "\n";
        }
    }
    write_text(run_dir / "report.md", md.str());
    log << "wrote " << (run_dir / "report.md").string() << "\n";
    return 0;
}

int cmd_bench(const CommandOptions& options, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    RunLock lock(cfg.output_dir);
    write_text(cfg.output_dir / "config.json", cfg.snapshot());
    LoadedProblem lp = load_problem(cfg);
    AuxFitOptions fit = cfg.aux_fit;
    fit.seed = cfg.seed;
    const ParameterSpace box = cfg.space.overreached(cfg.emulator.overreach);
    ErrorModelParams err;
    err.sigma_e = std::sqrt(cfg.prior.sigma_e2_mean);
    err.sigma_b = std::sqrt(1.0 / cfg.prior.sigma_b2_rate);
    err.tau = lp.problem.prior.tau;
    err.lambda = cfg.lambda;
    const Eigen::VectorXd obs = box_cox(lp.problem.observed.values, cfg.lambda);

    std::string csv = "design_size,conditioning_ms,emulation_ms,loglik_ms\n";
    log << "design_size  conditioning_ms  emulation_ms  loglik_ms\n";
    for (std::size_t n : cfg.bench_sizes) {
        const DesignSet design = initial_design(*lp.simulator, n, cfg.emulator.overreach);
        const AuxiliaryParameters aux = calibrate_aux(design, lp.problem, cfg.gamma, fit);

        constexpr int kConditionReps = 3;
        auto t0 = Clock::now();
        std::unique_ptr<Emulator> emulator;
        for (int r = 0; r < kConditionReps; ++r) {
            emulator = std::make_unique<Emulator>(design, lp.problem.rain, aux, lp.problem.catchment, cfg.emulator);
        }
        const double cond_ms = ms_since(t0) / kConditionReps;

        Rng rng = make_stream(cfg.seed, "bench", n);
        std::vector<ParameterVector> queries;
        for (std::size_t q = 0; q < cfg.bench_queries; ++q) {
            ParameterVector p(static_cast<Eigen::Index>(box.size()));
            for (std::size_t j = 0; j < box.size(); ++j) {
                p[static_cast<Eigen::Index>(j)] = std::uniform_real_distribution<double>(box[j].lower, box[j].upper)(rng);
            }
            queries.push_back(std::move(p));
        }
        t0 = Clock::now();
        Eigen::VectorXd mean;
        for (const auto& q : queries) mean = emulator->predict(q).mean.values;
        const double emu_ms = ms_since(t0) / static_cast<double>(queries.size());

        const Eigen::VectorXd residuals = obs - box_cox(mean.cwiseMax(0.0), cfg.lambda);
        constexpr int kLikReps = 2000;
        double sink = 0.0;
        t0 = Clock::now();
        for (int r = 0; r < kLikReps; ++r) sink += log_likelihood_residuals(residuals, lp.problem.rain.grid.step, err);
        const double lik_ms = ms_since(t0) / kLikReps;
        if (!std::isfinite(sink)) throw NumericalFailure("benchmark log likelihood is not finite");

        csv += std::to_string(n) + "," + format_number(cond_ms) + "," + format_number(emu_ms) + "," +
               format_number(lik_ms) + "\n";
        log << std::setw(11) << n << "  " << std::setw(15) << fixed(cond_ms) << "  " << std::setw(12) << fixed(emu_ms)
            << "  " << std::setw(9) << fixed(lik_ms, 4) << "\n";
    }
    write_text(cfg.output_dir / "bench.csv", csv);
    log << "wrote " << (cfg.output_dir / "bench.csv").string() << " (times in milliseconds)\n";
    return 0;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return 2;
    if (dynamic_cast<const SimulatorFailure*>(&e) || dynamic_cast<const ProtocolError*>(&e)) return 3;
    if (dynamic_cast<const NumericalFailure*>(&e) || dynamic_cast<const EstimationFailed*>(&e)) return 4;
    return 1;
}

}  // namespace mechemu
