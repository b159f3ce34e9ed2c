#pragma once

#include "mechemu/random.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mechemu {

/// Pooled size up to which the matching is exact.
constexpr std::size_t kExactMatchingLimit = 600;

struct CrossMatch {
    double distance = 0.0;      ///< 1 - 2 n_cm / n
    std::size_t cross_pairs = 0;
    std::size_t per_sample = 0;
    bool exact = true;          ///< false when the greedy fallback was used
};

/// Cross-match distance of two equally sized samples. Coordinates are divided
/// by the pooled per-dimension standard deviation; the pooled points are then
/// paired by a minimum-total-Euclidean-distance perfect matching and the pairs
/// joining the two samples are counted. Near 0 for samples from one
/// distribution, 1 for separated samples.
CrossMatch cross_match(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

inline double cross_match_distance(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
    return cross_match(a, b).distance;
}

/// `count` distinct points drawn without replacement, in their original order.
std::vector<Eigen::VectorXd> subsample(const std::vector<Eigen::VectorXd>& points, std::size_t count, Rng& rng);

}  // namespace mechemu
