#pragma once

#include <cstdint>
#include <vector>

namespace mechemu {

struct WeightedEdge {
    int u = 0;
    int v = 0;
    std::int64_t weight = 0;
};

/// Maximum-weight matching on a general graph (Edmonds' blossom algorithm with
/// dual variables, O(V^3)). With `max_cardinality`, maximises weight among
/// matchings of maximum size. Integer weights keep the duals exact.
/// Returns mate[v] (or -1 for an unmatched vertex).
std::vector<int> max_weight_matching(const std::vector<WeightedEdge>& edges, bool max_cardinality);

/// Minimum-total-cost perfect matching of a complete graph given a symmetric
/// integer cost matrix (row-major, n x n, n even).
std::vector<int> min_cost_perfect_matching(const std::vector<std::int64_t>& cost, int n);

/// Repeatedly pairs the globally closest unmatched points. Not optimal.
std::vector<int> greedy_perfect_matching(const std::vector<double>& cost, int n);

}  // namespace mechemu
