#pragma once

#include "mechemu/likelihood.hpp"
#include "mechemu/prior_model.hpp"
#include "mechemu/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mechemu {

/// Anything that maps a parameter vector to an output series on a fixed grid.
/// Implementations must be safe to call concurrently.
class Simulator {
public:
    virtual ~Simulator() = default;
    virtual TimeSeries run(const ParameterVector& theta) const = 0;
    virtual const ParameterSpace& space() const = 0;
    virtual std::string name() const = 0;
};

/// Toy urban catchment. Base values are catchment averages; each parameter
/// present in the space scales one of them (absent parameters stay at 1):
///
///   imperviousness  impervious fraction           r = 0.36 theta
///   width           total overland flow width     W = 3606 m theta
///   slope           surface slope                 S = 0.114 theta
///   storage_imp     impervious depression storage ds = 2 mm theta
///   n_imp           surface Manning coefficient   n = 0.015 theta
///   storage_per     pervious depression storage   2 mm theta
///   imp_no_storage  share of impervious area without depression storage, 0.25 theta
///   n_pipe          pipe roughness                T = 600 s theta / sqrt(slope factor)
///
/// Two parallel surface reservoirs (with and without depression storage) with
/// outflow per unit area  alpha (d - ds)_+^(5/3),  alpha = W sqrt(S) / (n A_imp),
/// feed one linear pipe reservoir with residence time T. A fifth of the
/// storage-area runoff crosses pervious ground, which retains the fraction
/// s_per / (s_per + 2 mm) of it. Classical RK4 with `substeps` per grid step.
struct ToyCatchment {
    double area = 1.628e6;         ///< m^2
    double imperviousness = 0.36;
    double width = 3606.0;         ///< m
    double slope = 0.114;
    double manning = 0.015;        ///< s m^-1/3
    double storage = 0.002;        ///< m, both depression storages
    double no_storage_share = 0.25;
    double pipe_time = 600.0;      ///< s
    double pervious_share = 0.2;
    int substeps = 20;
    int delay_ms = 0;              ///< artificial wall-clock delay per run

    /// The matching linear-model aggregates (effective area is area * r).
    CatchmentAggregates aggregates() const;
};

struct ToyRun {
    TimeSeries flow;            ///< m^3/s at the grid times
    double outflow_volume = 0;  ///< m^3, integrated over the whole run
    double impervious_rain = 0; ///< m^3, rain volume on the impervious area
};

/// Names of the eight scaling factors and their calibration ranges.
ParameterSpace toy_parameter_space(const std::vector<std::string>& names);
std::vector<std::string> toy_parameter_names();

ToyRun toy_run(const ParameterVector& theta, const ParameterSpace& space, const TimeSeries& rain,
               const ToyCatchment& catchment = {});
TimeSeries toy_simulate(const ParameterVector& theta, const ParameterSpace& space, const TimeSeries& rain,
                        const ToyCatchment& catchment = {});

class ToySimulator : public Simulator {
public:
    ToySimulator(ParameterSpace space, TimeSeries rain, ToyCatchment catchment = {});
    TimeSeries run(const ParameterVector& theta) const override;
    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "toy"; }

private:
    ParameterSpace space_;
    TimeSeries rain_;
    ToyCatchment catchment_;
};

/// The linear reservoir prior model used as a simulator.
class LinearSimulator : public Simulator {
public:
    LinearSimulator(ParameterSpace space, TimeSeries rain, AuxiliaryParameters aux, CatchmentAggregates catchment);
    TimeSeries run(const ParameterVector& theta) const override;
    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "linear"; }

private:
    ParameterSpace space_;
    TimeSeries rain_;
    AuxiliaryParameters aux_;
    CatchmentAggregates catchment_;
};

struct ExternalSimulatorSpec {
    std::string command;           ///< shell command with {params} and {output}, each exactly once
    std::string working_directory; ///< parent of the per-run temp directories; empty = system temp
    double timeout_s = 60.0;
    TimeGrid grid;                 ///< expected output grid

    void validate() const;
};

/// Runs an external program per call: writes a `name,value` parameter CSV,
/// substitutes the two paths into the command, runs it through /bin/sh in a
/// private temp directory and reads a `time_s,value` series back.
class ExternalSimulator : public Simulator {
public:
    ExternalSimulator(ParameterSpace space, ExternalSimulatorSpec spec);
    TimeSeries run(const ParameterVector& theta) const override;
    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "external"; }

private:
    ParameterSpace space_;
    ExternalSimulatorSpec spec_;
};

struct Observation {
    TimeSeries series;
    std::size_t clipped = 0;  ///< points where the inverse transform left its domain
    Eigen::VectorXd bias;     ///< the drawn bias, transformed scale
};

/// y_o = g^-1(g(y) + B + E): B an exact discrete draw of the exponential-kernel
/// bias, E iid normal. Points with lambda z + 1 < 0 are set to zero and counted.
Observation make_observation(const TimeSeries& model_output, const ErrorModelParams& err, std::uint64_t seed);

/// Exact AR(1) sample of a zero-mean process with covariance
/// sigma^2 exp(-|t_i - t_j| / tau) on a uniform grid.
Eigen::VectorXd draw_bias(std::size_t steps, double dt, double sigma, double tau, Rng& rng);

}  // namespace mechemu
