#pragma once

#include "mechemu/types.hpp"

#include <string>
#include <vector>

namespace mechemu {

/// Design points with their simulator outputs. `origins` tags each point with
/// where it came from: "halton" or "refine<k>" for refinement iteration k.
struct DesignSet {
    ParameterSpace space;
    std::vector<ParameterVector> points;
    std::vector<TimeSeries> outputs;
    std::vector<std::string> origins;

    std::size_t size() const { return points.size(); }
    bool has_outputs() const { return !points.empty() && outputs.size() == points.size(); }
    void append(ParameterVector point, TimeSeries output, std::string origin);
};

constexpr int kMaxHaltonDims = 8;

/// Base-`base` radical inverse of `index` (digit reversal about the radix point).
double radical_inverse(unsigned long long index, unsigned base);

/// `count` Halton points in [0,1)^dims. Point j uses index skip + j and the
/// first `dims` primes as bases. Throws Unsupported for dims > 8.
std::vector<Eigen::VectorXd> halton_points(std::size_t count, std::size_t dims,
                                           unsigned long long skip = 1);

/// Affine map of unit-cube points onto `space` widened about its centers by `overreach`.
std::vector<ParameterVector> scale_to_box(const std::vector<Eigen::VectorXd>& unit_points,
                                          const ParameterSpace& space, double overreach = 1.05);

/// theta*_i = mu + stretch * (theta_i - mu), mu the sample mean.
std::vector<ParameterVector> stretch_sample(const std::vector<ParameterVector>& points,
                                            double stretch = 1.1);

/// Clip each coordinate into the box.
ParameterVector clip_to_box(const ParameterVector& theta, const ParameterSpace& box);

}  // namespace mechemu
