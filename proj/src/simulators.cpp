#include "mechemu/simulators.hpp"

#include "mechemu/errors.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <thread>

namespace mechemu {

CatchmentAggregates ToyCatchment::aggregates() const {
    CatchmentAggregates c;
    c.base.width = width;
    c.base.slope = slope;
    c.base.manning = manning;
    c.base.imperviousness = imperviousness;
    return c;
}

std::vector<std::string> toy_parameter_names() {
    return {"imperviousness", "width", "slope", "storage_imp", "n_imp", "storage_per", "imp_no_storage", "n_pipe"};
}

ParameterSpace toy_parameter_space(const std::vector<std::string>& names) {
    std::vector<Dimension> dims;
    for (const auto& name : names) {
        if (name == "imperviousness") {
            dims.push_back({name, 0.5, 1.1});
        } else if (name == "imp_no_storage") {
            dims.push_back({name, 1.0, 1.5});
        } else {
            const auto all = toy_parameter_names();
            if (std::find(all.begin(), all.end(), name) == all.end()) {
                throw InvalidArgument("unknown toy parameter '" + name + "'");
            }
            dims.push_back({name, 0.5, 1.5});
        }
    }
    return ParameterSpace(std::move(dims));
}

ToyRun toy_run(const ParameterVector& theta, const ParameterSpace& space, const TimeSeries& rain,
               const ToyCatchment& catchment) {
    if (static_cast<std::size_t>(theta.size()) != space.size()) {
        throw InvalidArgument("parameter vector length does not match the parameter space");
    }
    if (!theta.allFinite() || (theta.array() <= 0.0).any()) {
        throw InvalidArgument("toy simulator needs positive, finite scaling factors");
    }
    if ((rain.values.array() < 0.0).any()) throw InvalidArgument("rain intensities must be non-negative");
    if (catchment.substeps < 1) throw InvalidArgument("toy simulator needs at least one substep");

    auto factor = [&](const char* name) {
        const int i = space.index_of(name);
        return i < 0 ? 1.0 : theta[i];
    };
    const double r = catchment.imperviousness * factor("imperviousness");
    const double W = catchment.width * factor("width");
    const double S = catchment.slope * factor("slope");
    const double ds = catchment.storage * factor("storage_imp");
    const double n = catchment.manning * factor("n_imp");
    const double ds_per = catchment.storage * factor("storage_per");
    const double f0 = catchment.no_storage_share * factor("imp_no_storage");
    const double T = catchment.pipe_time * factor("n_pipe") / std::sqrt(factor("slope"));
    if (!(r > 0.0 && r <= 1.0) || !(f0 > 0.0 && f0 < 1.0)) {
        throw InvalidArgument("toy simulator: impervious fractions out of range");
    }
    const double A_imp = catchment.area * r;
    const double alpha = W * std::sqrt(S) / (n * A_imp);
    const double retained = catchment.pervious_share * ds_per / (ds_per + catchment.storage);

    // State: surface levels without/with depression storage [m], pipe volume
    // [m^3], cumulative outflow [m^3].
    using State = std::array<double, 4>;
    auto rates = [&](const State& x, double p) {
        const double q0 = alpha * std::pow(std::max(x[0], 0.0), 5.0 / 3.0);
        const double q1 = alpha * std::pow(std::max(x[1] - ds, 0.0), 5.0 / 3.0);
        const double inflow = A_imp * (f0 * q0 + (1.0 - f0) * q1 * (1.0 - retained));
        const double out = std::max(x[2], 0.0) / T;
        return State{p - q0, p - q1, inflow - out, out};
    };

    const double dt = rain.grid.step;
    const double h = dt / catchment.substeps;
    State x{0.0, 0.0, 0.0, 0.0};
    Eigen::VectorXd flow(rain.values.size());
    double rain_depth = 0.0;
    for (Eigen::Index i = 0; i < rain.values.size(); ++i) {
        const double p = rain.values[i];
        rain_depth += p * dt;
        for (int s = 0; s < catchment.substeps; ++s) {
            const State k1 = rates(x, p);
            State tmp;
            for (int j = 0; j < 4; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
            const State k2 = rates(tmp, p);
            for (int j = 0; j < 4; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
            const State k3 = rates(tmp, p);
            for (int j = 0; j < 4; ++j) tmp[j] = x[j] + h * k3[j];
            const State k4 = rates(tmp, p);
            for (int j = 0; j < 4; ++j) x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2])) {
            throw SimulatorFailure(SimulatorFailure::Reason::Instability,
                                   "toy simulator state became non-finite at step " + std::to_string(i));
        }
        flow[i] = std::max(x[2], 0.0) / T;
    }
    if (catchment.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(catchment.delay_ms));

    ToyRun run;
    run.flow = TimeSeries(rain.grid, flow, "m3/s");
    run.outflow_volume = x[3];
    run.impervious_rain = A_imp * rain_depth;
    return run;
}

TimeSeries toy_simulate(const ParameterVector& theta, const ParameterSpace& space, const TimeSeries& rain,
                        const ToyCatchment& catchment) {
    return toy_run(theta, space, rain, catchment).flow;
}

ToySimulator::ToySimulator(ParameterSpace space, TimeSeries rain, ToyCatchment catchment)
    : space_(std::move(space)), rain_(std::move(rain)), catchment_(catchment) {
    toy_parameter_space(space_.names());  // rejects unknown names
}

TimeSeries ToySimulator::run(const ParameterVector& theta) const {
    return toy_simulate(theta, space_, rain_, catchment_);
}

LinearSimulator::LinearSimulator(ParameterSpace space, TimeSeries rain, AuxiliaryParameters aux,
                                 CatchmentAggregates catchment)
    : space_(std::move(space)), rain_(std::move(rain)), aux_(aux), catchment_(catchment) {
    aux_.validate();
}

TimeSeries LinearSimulator::run(const ParameterVector& theta) const {
    return simulate_linear(theta, space_, aux_, catchment_, rain_);
}

Eigen::VectorXd draw_bias(std::size_t steps, double dt, double sigma, double tau, Rng& rng) {
    if (!(sigma >= 0.0) || !(tau > 0.0)) throw InvalidArgument("bias draw needs sigma >= 0 and tau > 0");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double phi = std::exp(-dt / tau);
    const double innovation = sigma * std::sqrt(1.0 - phi * phi);
    Eigen::VectorXd b(static_cast<Eigen::Index>(steps));
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double xi = normal(rng);
        b[i] = i == 0 ? sigma * xi : phi * b[i - 1] + innovation * xi;
    }
    return b;
}

Observation make_observation(const TimeSeries& model_output, const ErrorModelParams& err, std::uint64_t seed) {
    // Noise-free observations are allowed here, unlike in the likelihood.
    if (!(err.sigma_e >= 0.0) || !(err.sigma_b >= 0.0) || !(err.tau > 0.0) ||
        !(err.lambda > 0.0 && err.lambda <= 1.0)) {
        throw InvalidArgument("observation error model needs sigma_E, sigma_B >= 0, tau > 0, lambda in (0, 1]");
    }
    Rng rng = make_stream(seed, "observation");
    Observation obs;
    obs.bias = draw_bias(model_output.size(), model_output.grid.step, err.sigma_b, err.tau, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y(model_output.values.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double noise = obs.bias[i] + err.sigma_e * normal(rng);
        if (noise == 0.0) {
            y[i] = model_output.values[i];
            continue;
        }
        const double z = box_cox(model_output.values[i], err.lambda) + noise;
        if (err.lambda * z + 1.0 < 0.0) {
            y[i] = 0.0;
            ++obs.clipped;
        } else {
            y[i] = box_cox_inverse(z, err.lambda);
        }
    }
    obs.series = TimeSeries(model_output.grid, y, model_output.unit);
    return obs;
}

}  // namespace mechemu
