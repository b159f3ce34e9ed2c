#include "mechemu/config.hpp"

#include "mechemu/errors.hpp"
#include "mechemu/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <set>

namespace mechemu {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads keys off one JSON object and rejects whatever is left unread.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError("missing required key " + name(key));
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            seen_.insert(key);
            if (!fallback) throw ConfigError("missing required key " + name(key));
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(name(key) + " must be a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
        if (!has(key)) {
            seen_.insert(key);
            if (!fallback) throw ConfigError("missing required key " + name(key));
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(name(key) + " must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            seen_.insert(key);
            if (!fallback) throw ConfigError("missing required key " + name(key));
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(name(key) + " must be a string");
        return v.get<std::string>();
    }

    Section child(const std::string& key) {
        if (!has(key)) {
            seen_.insert(key);
            static const json empty = json::object();
            return Section(empty, name(key));
        }
        return Section(at(key), name(key));
    }

    std::string name(const std::string& key) const { return path_.empty() ? "'" + key + "'" : "'" + path_ + "." + key + "'"; }
    std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key " + name(it.key()));
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return fs::absolute(path.is_absolute() ? path : base / path).lexically_normal();
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw ConfigError(what + " file not found: " + p.string());
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Section root(doc, "");

    c.rain_path = resolve(base_dir, root.text("rain"));
    require_file(c.rain_path, "rain");
    c.rain_unit = root.text("rain_unit", "m/s");
    if (c.rain_unit != "m/s" && c.rain_unit != "mm/h") throw ConfigError("'rain_unit' must be \"m/s\" or \"mm/h\"");
    c.flow_unit = root.text("flow_unit", "m3/s");
    c.output_dir = resolve(base_dir, root.text("output_dir", "run"));
    c.seed = root.count("seed", 0);

    // Simulator first: toy bounds serve as parameter defaults.
    {
        Section s = root.child("simulator");
        c.simulator.type = s.text("type", "toy");
        if (c.simulator.type == "toy") {
            ToyCatchment& t = c.simulator.toy;
            t.area = s.number("area", t.area);
            t.imperviousness = s.number("imperviousness", t.imperviousness);
            t.width = s.number("width", t.width);
            t.slope = s.number("slope", t.slope);
            t.manning = s.number("manning", t.manning);
            t.storage = s.number("storage", t.storage);
            t.no_storage_share = s.number("no_storage_share", t.no_storage_share);
            t.pipe_time = s.number("pipe_time", t.pipe_time);
            t.pervious_share = s.number("pervious_share", t.pervious_share);
            t.substeps = static_cast<int>(s.count("substeps", static_cast<std::uint64_t>(t.substeps)));
            t.delay_ms = static_cast<int>(s.count("delay_ms", 0));
            if (!(t.area > 0 && t.width > 0 && t.slope > 0 && t.manning > 0 && t.storage > 0 && t.pipe_time > 0)) {
                throw ConfigError("'simulator' toy constants must be positive");
            }
        } else if (c.simulator.type == "linear") {
            c.simulator.linear.k = s.number("k");
            c.simulator.linear.t0 = s.number("t0", 0.0);
            c.simulator.linear.A = s.number("A");
        } else if (c.simulator.type == "external") {
            c.simulator.command = s.text("command");
            c.simulator.working_directory = s.text("working_directory", "");
            c.simulator.timeout_s = s.number("timeout_s", 60.0);
        } else {
            throw ConfigError("'simulator.type' must be toy, linear or external");
        }
        s.finish();
    }

    if (root.has("catchment")) {
        Section s = root.child("catchment");
        Aggregates a;
        a.width = s.number("width");
        a.slope = s.number("slope");
        a.manning = s.number("manning");
        a.imperviousness = s.number("imperviousness");
        s.finish();
        if (!(a.width > 0 && a.slope > 0 && a.manning > 0 && a.imperviousness > 0)) {
            throw ConfigError("'catchment' values must be positive");
        }
        c.catchment = a;
    } else {
        root.child("catchment");
        if (c.simulator.type == "external") throw ConfigError("missing required key 'catchment' for an external simulator");
    }

    {
        const json& params = root.at("parameters");
        if (!params.is_array() || params.empty()) throw ConfigError("'parameters' must be a non-empty array");
        std::vector<Dimension> dims;
        for (std::size_t i = 0; i < params.size(); ++i) {
            Section p(params[i], "parameters[" + std::to_string(i) + "]");
            Dimension d;
            d.name = p.text("name");
            std::optional<double> lo, hi;
            if (c.simulator.type == "toy") {
                try {
                    const Dimension def = toy_parameter_space({d.name})[0];
                    lo = def.lower;
                    hi = def.upper;
                } catch (const InvalidArgument& e) {
                    throw ConfigError(std::string("parameters[") + std::to_string(i) + "]: " + e.what());
                }
            }
            d.lower = p.number("lower", lo);
            d.upper = p.number("upper", hi);
            if (!(d.lower < d.upper)) throw ConfigError("parameter '" + d.name + "' needs lower < upper");
            const double fallback = (d.lower < 1.0 && 1.0 < d.upper) ? 1.0 : d.center();
            BetaPrior b;
            b.lower = d.lower;
            b.upper = d.upper;
            b.mode = p.number("mode", fallback);
            b.concentration = p.number("concentration", 6.0);
            p.finish();
            try {
                b.validate();
            } catch (const InvalidArgument& e) {
                throw ConfigError("parameter '" + d.name + "': " + e.what());
            }
            dims.push_back(d);
            c.prior.parameters.push_back(b);
        }
        try {
            c.space = ParameterSpace(std::move(dims));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("'parameters': ") + e.what());
        }
    }

    {
        Section s = root.child("error_model");
        c.lambda = s.number("lambda", 0.35);
        if (!(c.lambda > 0.0 && c.lambda <= 1.0)) throw ConfigError("'error_model.lambda' must be in (0, 1]");
        if (s.has("tau") && s.at("tau").is_number()) {
            c.tau = s.number("tau");
            if (!(*c.tau > 0.0)) throw ConfigError("'error_model.tau' must be positive");
        } else if (s.text("tau", "recession") != "recession") {
            throw ConfigError("'error_model.tau' must be a number or \"recession\"");
        }
        c.prior.sigma_e2_mean = s.number("sigma_E2_mean", c.prior.sigma_e2_mean);
        c.prior.sigma_e2_sd = s.number("sigma_E2_sd", c.prior.sigma_e2_sd);
        c.prior.sigma_b2_rate = s.number("sigma_B2_rate", c.prior.sigma_b2_rate);
        s.finish();
        if (!(c.prior.sigma_e2_sd > 0.0) || !(c.prior.sigma_b2_rate > 0.0)) {
            throw ConfigError("'error_model' prior scales must be positive");
        }
    }

    {
        Section s = root.child("emulator");
        c.gamma = s.number("gamma", 5.0);
        c.emulator.overreach = s.number("overreach", 1.05);
        c.emulator.jitter = s.number("jitter", 1e-10);
        s.finish();
        if (!(c.gamma > 0.0) || !(c.emulator.overreach >= 1.0) || !(c.emulator.jitter >= 0.0)) {
            throw ConfigError("'emulator' needs gamma > 0, overreach >= 1, jitter >= 0");
        }
    }

    {
        Section s = root.child("aux_fit");
        c.aux_fit.starts = static_cast<int>(s.count("starts", 5));
        c.aux_fit.max_evaluations = static_cast<int>(s.count("max_evaluations", 4000));
        s.finish();
        if (c.aux_fit.starts < 1) throw ConfigError("'aux_fit.starts' must be at least 1");
    }

    {
        Section s = root.child("refinement");
        c.budget = s.count("budget", 128);
        c.stretch = s.number("stretch", 1.1);
        c.compare_size = s.count("compare_size", 200);
        c.convergence_threshold = s.number("convergence_threshold", 0.2);
        s.finish();
        if (c.budget == 0 || c.budget % 8 != 0) throw ConfigError("'refinement.budget' must be a positive multiple of 8");
        if (!(c.stretch >= 1.0)) throw ConfigError("'refinement.stretch' must be at least 1");
        if (c.compare_size < 2) throw ConfigError("'refinement.compare_size' must be at least 2");
    }

    {
        Section s = root.child("sampler");
        c.mcmc.walkers = s.count("walkers", 0);
        c.mcmc.steps = s.count("steps", 4000);
        c.mcmc.burn_in = s.number("burn_in", 0.25);
        c.mcmc.thin = s.count("thin", 0);
        c.mcmc.a = s.number("a", 2.0);
        c.mcmc.threads = static_cast<unsigned>(s.count("threads", 1));
        c.mcmc.init_evaluations = static_cast<int>(s.count("init_evaluations", 1000));
        s.finish();
        if (c.mcmc.steps < 2) throw ConfigError("'sampler.steps' must be at least 2");
        if (!(c.mcmc.burn_in >= 0.0 && c.mcmc.burn_in < 1.0)) throw ConfigError("'sampler.burn_in' must be in [0, 1)");
        if (!(c.mcmc.a > 1.0)) throw ConfigError("'sampler.a' must exceed 1");
        if (c.mcmc.walkers % 2 != 0) throw ConfigError("'sampler.walkers' must be even");
        if (c.mcmc.threads == 0) c.mcmc.threads = 1;
    }

    {
        Section s = root.child("bench");
        if (s.has("sizes")) {
            const json& sizes = s.at("sizes");
            if (!sizes.is_array() || sizes.empty()) throw ConfigError("'bench.sizes' must be a non-empty array");
            c.bench_sizes.clear();
            for (const auto& v : sizes) {
                if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
                    throw ConfigError("'bench.sizes' entries must be positive integers");
                }
                c.bench_sizes.push_back(v.get<std::size_t>());
            }
        }
        c.bench_queries = s.count("queries", 20);
        s.finish();
        if (c.bench_queries == 0) throw ConfigError("'bench.queries' must be positive");
    }

    const bool has_obs = root.has("observation");
    const bool has_syn = root.has("synthetic_observation");
    if (has_obs == has_syn) throw ConfigError("exactly one of 'observation' and 'synthetic_observation' is required");
    if (has_obs) {
        c.observation_path = resolve(base_dir, root.text("observation"));
        require_file(c.observation_path, "observation");
    } else {
        Section s = root.child("synthetic_observation");
        SyntheticObservation syn;
        Section truth = s.child("truth");
        syn.truth.resize(static_cast<Eigen::Index>(c.space.size()));
        for (std::size_t i = 0; i < c.space.size(); ++i) {
            syn.truth[static_cast<Eigen::Index>(i)] = truth.number(c.space[i].name);
        }
        truth.finish();
        syn.sigma_e = s.number("sigma_E", 0.0);
        syn.sigma_b = s.number("sigma_B", 0.0);
        syn.seed = s.count("seed", 0);
        s.finish();
        if (!(syn.sigma_e >= 0.0) || !(syn.sigma_b >= 0.0)) {
            throw ConfigError("'synthetic_observation' noise levels must be non-negative");
        }
        if (!c.space.contains(syn.truth)) throw ConfigError("'synthetic_observation.truth' lies outside the parameter bounds");
        c.synthetic = syn;
    }

    root.finish();
    return c;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
    return parse_config(read_text(path), path.parent_path());
}

std::string RunConfig::snapshot() const {
    json j;
    j["rain"] = rain_path.string();
    j["rain_unit"] = rain_unit;
    j["flow_unit"] = flow_unit;
    j["output_dir"] = output_dir.string();
    j["seed"] = seed;
    if (synthetic) {
        json truth = json::object();
        for (std::size_t i = 0; i < space.size(); ++i) truth[space[i].name] = synthetic->truth[static_cast<Eigen::Index>(i)];
        j["synthetic_observation"] = {{"truth", truth},
                                      {"sigma_E", synthetic->sigma_e},
                                      {"sigma_B", synthetic->sigma_b},
                                      {"seed", synthetic->seed}};
    } else {
        j["observation"] = observation_path.string();
    }
    json params = json::array();
    for (std::size_t i = 0; i < space.size(); ++i) {
        params.push_back({{"name", space[i].name},
                          {"lower", space[i].lower},
                          {"upper", space[i].upper},
                          {"mode", prior.parameters[i].mode},
                          {"concentration", prior.parameters[i].concentration}});
    }
    j["parameters"] = params;
    j["error_model"] = {{"lambda", lambda},
                        {"sigma_E2_mean", prior.sigma_e2_mean},
                        {"sigma_E2_sd", prior.sigma_e2_sd},
                        {"sigma_B2_rate", prior.sigma_b2_rate}};
    if (tau) {
        j["error_model"]["tau"] = *tau;
    } else {
        j["error_model"]["tau"] = "recession";
    }
    j["emulator"] = {{"gamma", gamma}, {"overreach", emulator.overreach}, {"jitter", emulator.jitter}};
    j["aux_fit"] = {{"starts", aux_fit.starts}, {"max_evaluations", aux_fit.max_evaluations}};
    j["refinement"] = {{"budget", budget},
                       {"stretch", stretch},
                       {"compare_size", compare_size},
                       {"convergence_threshold", convergence_threshold}};
    j["sampler"] = {{"walkers", mcmc.walkers}, {"steps", mcmc.steps},     {"burn_in", mcmc.burn_in},
                    {"thin", mcmc.thin},       {"a", mcmc.a},             {"threads", mcmc.threads},
                    {"init_evaluations", mcmc.init_evaluations}};
    json sim = {{"type", simulator.type}};
    if (simulator.type == "toy") {
        const ToyCatchment& t = simulator.toy;
        sim.update({{"area", t.area},
                    {"imperviousness", t.imperviousness},
                    {"width", t.width},
                    {"slope", t.slope},
                    {"manning", t.manning},
                    {"storage", t.storage},
                    {"no_storage_share", t.no_storage_share},
                    {"pipe_time", t.pipe_time},
                    {"pervious_share", t.pervious_share},
                    {"substeps", t.substeps},
                    {"delay_ms", t.delay_ms}});
    } else if (simulator.type == "linear") {
        sim.update({{"k", simulator.linear.k}, {"t0", simulator.linear.t0}, {"A", simulator.linear.A}});
    } else {
        sim.update({{"command", simulator.command},
                    {"working_directory", simulator.working_directory},
                    {"timeout_s", simulator.timeout_s}});
    }
    j["simulator"] = sim;
    if (catchment) {
        j["catchment"] = {{"width", catchment->width},
                          {"slope", catchment->slope},
                          {"manning", catchment->manning},
                          {"imperviousness", catchment->imperviousness}};
    }
    j["bench"] = {{"sizes", bench_sizes}, {"queries", bench_queries}};
    return j.dump(2) + "\n";
}

CatchmentAggregates RunConfig::aggregates() const {
    if (catchment) return CatchmentAggregates{*catchment};
    return simulator.type == "toy" ? simulator.toy.aggregates() : ToyCatchment{}.aggregates();
}

std::unique_ptr<Simulator> make_simulator(const RunConfig& config, const TimeSeries& rain) {
    if (config.simulator.type == "toy") {
        return std::make_unique<ToySimulator>(config.space, rain, config.simulator.toy);
    }
    if (config.simulator.type == "linear") {
        AuxiliaryParameters aux = config.simulator.linear;
        try {
            aux.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("'simulator': ") + e.what());
        }
        return std::make_unique<LinearSimulator>(config.space, rain, aux, config.aggregates());
    }
    ExternalSimulatorSpec spec;
    spec.command = config.simulator.command;
    spec.working_directory = config.simulator.working_directory;
    spec.timeout_s = config.simulator.timeout_s;
    spec.grid = rain.grid;
    try {
        return std::make_unique<ExternalSimulator>(config.space, spec);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("'simulator': ") + e.what());
    }
}

LoadedProblem load_problem(const RunConfig& config) {
    LoadedProblem out;
    Problem& p = out.problem;
    p.space = config.space;
    p.prior = config.prior;
    p.lambda = config.lambda;
    p.catchment = config.aggregates();

    p.rain = read_time_series(config.rain_path, "m/s");
    if (config.rain_unit == "mm/h") p.rain.values /= 3.6e6;
    if ((p.rain.values.array() < 0.0).any()) throw ConfigError("rain file has negative intensities: " + config.rain_path.string());
    out.simulator = make_simulator(config, p.rain);

    ParameterVector modes(static_cast<Eigen::Index>(config.space.size()));
    for (std::size_t i = 0; i < config.space.size(); ++i) {
        modes[static_cast<Eigen::Index>(i)] = config.prior.parameters[i].mode;
    }
    p.prior.tau = config.tau ? *config.tau : tau_from_recession(out.simulator->run(modes), p.rain);

    if (config.synthetic) {
        ErrorModelParams err;
        err.sigma_e = config.synthetic->sigma_e;
        err.sigma_b = config.synthetic->sigma_b;
        err.tau = p.prior.tau;
        err.lambda = config.lambda;
        Observation obs = make_observation(out.simulator->run(config.synthetic->truth), err, config.synthetic->seed);
        p.observed = obs.series;
        out.clipped = obs.clipped;
    } else {
        p.observed = read_time_series(config.observation_path, config.flow_unit);
        if (!p.observed.grid.same_as(p.rain.grid)) {
            throw ConfigError("observation grid does not match the rain grid: " + config.observation_path.string());
        }
        if ((p.observed.values.array() < 0.0).any()) {
            throw ConfigError("observation file has negative values: " + config.observation_path.string());
        }
    }
    p.observed.unit = config.flow_unit;
    return out;
}

}  // namespace mechemu
