#include "mechemu/design_sampling.hpp"

#include "mechemu/errors.hpp"

#include <array>
#include <cmath>

namespace mechemu {

void DesignSet::append(ParameterVector point, TimeSeries output, std::string origin) {
    points.push_back(std::move(point));
    outputs.push_back(std::move(output));
    origins.push_back(std::move(origin));
}

namespace {

bool is_prime(unsigned b) {
    if (b < 2) return false;
    for (unsigned d = 2; d * d <= b; ++d) {
        if (b % d == 0) return false;
    }
    return true;
}

constexpr std::array<unsigned, kMaxHaltonDims> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace

double radical_inverse(unsigned long long index, unsigned base) {
    if (!is_prime(base)) throw InvalidArgument("radical inverse base must be a prime >= 2");
    if (index < 1) throw InvalidArgument("radical inverse index must be >= 1");
    const double inv_base = 1.0 / base;
    double factor = inv_base;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv_base;
    }
    return result;
}

std::vector<Eigen::VectorXd> halton_points(std::size_t count, std::size_t dims,
                                           unsigned long long skip) {
    if (dims > static_cast<std::size_t>(kMaxHaltonDims)) {
        throw Unsupported("Halton designs support at most 8 dimensions, got " + std::to_string(dims));
    }
    if (count < 1 || dims < 1) throw InvalidArgument("halton_points needs count >= 1 and dims >= 1");
    if (skip < 1) throw InvalidArgument("halton skip must be >= 1 (index 0 is the origin)");
    std::vector<Eigen::VectorXd> pts(count, Eigen::VectorXd(dims));
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t d = 0; d < dims; ++d) {
            pts[j][static_cast<Eigen::Index>(d)] = radical_inverse(skip + j, kPrimes[d]);
        }
    }
    return pts;
}

std::vector<ParameterVector> scale_to_box(const std::vector<Eigen::VectorXd>& unit_points,
                                          const ParameterSpace& space, double overreach) {
    if (!(overreach >= 1.0)) throw InvalidArgument("overreach must be >= 1");
    const ParameterSpace box = space.overreached(overreach);
    std::vector<ParameterVector> out;
    out.reserve(unit_points.size());
    for (const auto& u : unit_points) {
        if (static_cast<std::size_t>(u.size()) != space.size()) {
            throw InvalidArgument("unit point dimension does not match parameter space");
        }
        out.push_back(box.lower().array() + u.array() * box.spans().array());
    }
    return out;
}

std::vector<ParameterVector> stretch_sample(const std::vector<ParameterVector>& points,
                                            double stretch) {
    if (points.empty()) throw InvalidArgument("stretch_sample needs at least one point");
    if (!(stretch > 0.0)) throw InvalidArgument("stretch factor must be positive");
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(points.front().size());
    for (const auto& p : points) mu += p;
    mu /= static_cast<double>(points.size());
    std::vector<ParameterVector> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(mu + stretch * (p - mu));
    return out;
}

ParameterVector clip_to_box(const ParameterVector& theta, const ParameterSpace& box) {
    return theta.cwiseMax(box.lower()).cwiseMin(box.upper());
}

}  // namespace mechemu
