#include "mechemu/crossmatch.hpp"

#include "mechemu/errors.hpp"
#include "mechemu/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mechemu {

CrossMatch cross_match(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
    if (a.empty() || a.size() != b.size()) {
        throw InvalidArgument("cross-match needs two non-empty samples of equal size (got " +
                              std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
    }
    const auto d = a[0].size();
    const std::size_t n = a.size();
    const int pooled = static_cast<int>(2 * n);

    Eigen::MatrixXd X(pooled, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != d || b[i].size() != d) throw InvalidArgument("sample points differ in dimension");
        X.row(static_cast<Eigen::Index>(i)) = a[i].transpose();
        X.row(static_cast<Eigen::Index>(n + i)) = b[i].transpose();
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(pooled));
        if (sd > 0.0) X.col(j) /= sd;
    }

    std::vector<double> dist(static_cast<std::size_t>(pooled) * pooled, 0.0);
    double dmax = 0.0;
    for (int i = 0; i < pooled; ++i) {
        for (int j = i + 1; j < pooled; ++j) {
            const double v = (X.row(i) - X.row(j)).norm();
            dist[static_cast<std::size_t>(i) * pooled + j] = dist[static_cast<std::size_t>(j) * pooled + i] = v;
            dmax = std::max(dmax, v);
        }
    }

    CrossMatch out;
    out.per_sample = n;
    std::vector<int> mate;
    if (static_cast<std::size_t>(pooled) <= kExactMatchingLimit) {
        // Integer costs on a 1e9 scale keep the blossom duals exact.
        const double scale = dmax > 0.0 ? 1e9 / dmax : 0.0;
        std::vector<std::int64_t> cost(dist.size());
        for (std::size_t k = 0; k < dist.size(); ++k) cost[k] = std::llround(dist[k] * scale);
        mate = min_cost_perfect_matching(cost, pooled);
    } else {
        mate = greedy_perfect_matching(dist, pooled);
        out.exact = false;
    }
    for (int i = 0; i < static_cast<int>(n); ++i) {
        if (mate[i] >= static_cast<int>(n)) ++out.cross_pairs;
    }
    out.distance = 1.0 - 2.0 * static_cast<double>(out.cross_pairs) / static_cast<double>(n);
    return out;
}

std::vector<Eigen::VectorXd> subsample(const std::vector<Eigen::VectorXd>& points, std::size_t count, Rng& rng) {
    if (count > points.size()) throw InvalidArgument("cannot subsample more points than available");
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    for (auto i : idx) out.push_back(points[i]);
    return out;
}

}  // namespace mechemu
