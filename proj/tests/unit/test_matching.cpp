#include "doctest.h"

#include "mechemu/crossmatch.hpp"
#include "mechemu/errors.hpp"
#include "mechemu/matching.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace mechemu;

namespace {

std::vector<Eigen::VectorXd> line(std::initializer_list<double> xs) {
    std::vector<Eigen::VectorXd> out;
    for (double x : xs) out.push_back(Eigen::VectorXd::Constant(1, x));
    return out;
}

std::vector<Eigen::VectorXd> gaussian(std::size_t n, std::size_t d, Rng& rng, double shift = 0.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Eigen::VectorXd> out(n, Eigen::VectorXd(static_cast<Eigen::Index>(d)));
    for (auto& x : out) {
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = g(rng) + shift;
    }
    return out;
}

}  // namespace

TEST_CASE("min-cost perfect matching agrees with exhaustive search") {
    for (std::uint64_t s = 0; s < 300; ++s) {
        Rng rng = make_stream(s, "test-matching");
        std::uniform_int_distribution<int> size(1, 5), w(0, 20);
        const int n = 2 * size(rng);
        std::vector<std::int64_t> cost(static_cast<std::size_t>(n * n), 0);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) cost[i * n + j] = cost[j * n + i] = w(rng);
        }
        const auto mate = min_cost_perfect_matching(cost, n);
        std::int64_t total = 0;
        for (int i = 0; i < n; ++i) {
            REQUIRE(mate[i] >= 0);
            CHECK(mate[mate[i]] == i);
            if (i < mate[i]) total += cost[i * n + mate[i]];
        }
        CHECK(total == oracle::brute_force_min_cost(cost, n));
    }
}

TEST_CASE("maximum weight matching basics") {
    // Path a-b-c-d with a heavy middle edge: max weight takes it alone unless
    // maximum cardinality is required.
    const std::vector<WeightedEdge> e{{0, 1, 2}, {1, 2, 5}, {2, 3, 2}};
    auto m = max_weight_matching(e, false);
    CHECK(m[1] == 2);
    CHECK(m[0] == -1);
    m = max_weight_matching(e, true);
    CHECK(m[0] == 1);
    CHECK(m[2] == 3);
}

TEST_CASE("greedy matching pairs nearest points first") {
    const std::vector<double> c{0, 1, 5, 6, 1, 0, 4, 5, 5, 4, 0, 1, 6, 5, 1, 0};
    const auto m = greedy_perfect_matching(c, 4);
    CHECK(m[0] == 1);
    CHECK(m[2] == 3);
}

TEST_CASE("cross-match limits") {
    CrossMatch cm = cross_match(line({0.0, 0.1}), line({5.0, 5.1}));
    CHECK(cm.cross_pairs == 0);
    CHECK(cm.distance == doctest::Approx(1.0));
    cm = cross_match(line({0.0, 5.0}), line({0.01, 5.01}));
    CHECK(cm.cross_pairs == 2);
    CHECK(cm.distance == doctest::Approx(-1.0));
    CHECK_THROWS_AS(cross_match(line({0.0}), line({1.0, 2.0})), InvalidArgument);
}

TEST_CASE("cross-match symmetry and affine invariance") {
    Rng rng = make_stream(4, "test-cm-affine");
    const auto a = gaussian(60, 3, rng);
    const auto b = gaussian(60, 3, rng, 0.5);
    const double d = cross_match_distance(a, b);
    CHECK(cross_match_distance(b, a) == doctest::Approx(d));
    Eigen::Vector3d scale(3.0, 0.2, 10.0), shift(1.0, -4.0, 100.0);
    auto tr = [&](std::vector<Eigen::VectorXd> v) {
        for (auto& x : v) x = x.cwiseProduct(scale) + shift;
        return v;
    };
    CHECK(cross_match_distance(tr(a), tr(b)) == doctest::Approx(d));
}

TEST_CASE("cross-match null and separated samples") {
    int within = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Rng rng = make_stream(static_cast<std::uint64_t>(rep), "test-cm-null");
        if (std::abs(cross_match_distance(gaussian(200, 4, rng), gaussian(200, 4, rng))) <= 0.15) ++within;
    }
    CHECK(within >= 18);
    Rng rng = make_stream(1, "test-cm-sep");
    const auto a = gaussian(200, 4, rng);
    auto b = gaussian(200, 4, rng);
    // Ten within-sample standard deviations along the first axis.
    for (auto& x : b) x[0] += 10.0;
    CHECK(cross_match_distance(a, b) >= 0.95);
}

TEST_CASE("greedy fallback above the exact limit") {
    Rng rng = make_stream(2, "test-cm-greedy");
    const auto cm = cross_match(gaussian(310, 2, rng), gaussian(310, 2, rng));
    CHECK_FALSE(cm.exact);
    CHECK(cm.per_sample == 310);
}

TEST_CASE("subsample draws distinct points in order") {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(Eigen::VectorXd::Constant(1, i));
    Rng rng = make_stream(3, "test-subsample");
    const auto s = subsample(pts, 20, rng);
    REQUIRE(s.size() == 20);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i][0] > s[i - 1][0]);
    Rng rng2 = make_stream(3, "test-subsample");
    CHECK(subsample(pts, 20, rng2) == s);
}
