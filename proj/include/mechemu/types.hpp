#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mechemu {

using ParameterVector = Eigen::VectorXd;

/// Uniform time grid: sample i sits at start + i * step (seconds).
struct TimeGrid {
    double start = 0.0;
    double step = 1.0;
    std::size_t size = 0;

    double time(std::size_t i) const { return start + step * static_cast<double>(i); }
    bool same_as(const TimeGrid& other, double rel_tol = 1e-9) const;
};

/// Scalar series sampled on a uniform grid.
struct TimeSeries {
    TimeGrid grid;
    Eigen::VectorXd values;
    std::string unit;

    TimeSeries() = default;
    TimeSeries(TimeGrid g, Eigen::VectorXd v, std::string u = {});

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;

    double span() const { return upper - lower; }
    double center() const { return 0.5 * (lower + upper); }
};

/// Named calibration hypercube. Bounds are strict (lower < upper), names unique.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<Dimension> dims);

    std::size_t size() const { return dims_.size(); }
    const Dimension& operator[](std::size_t i) const { return dims_[i]; }
    const std::vector<Dimension>& dims() const { return dims_; }
    std::vector<std::string> names() const;

    /// Index of the named dimension, or -1.
    int index_of(const std::string& name) const;

    Eigen::VectorXd spans() const;
    Eigen::VectorXd lower() const;
    Eigen::VectorXd upper() const;

    /// Same centers, half-widths multiplied by `factor`.
    ParameterSpace overreached(double factor) const;
    bool contains(const ParameterVector& theta, double slack = 0.0) const;

private:
    std::vector<Dimension> dims_;
};

}  // namespace mechemu
