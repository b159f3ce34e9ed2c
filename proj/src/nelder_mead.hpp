#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace mechemu::detail {

struct SimplexResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
// The best vertex is only replaced on strict improvement, so a start that is
// already optimal comes back unchanged.
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                 int max_evaluations, double ftol = 1e-14, double xtol = 1e-10) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    SimplexResult res;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    values[0] = eval(x0);
    for (Eigen::Index i = 0; i < n; ++i) {
        simplex[i + 1][i] += step[i];
        values[i + 1] = eval(simplex[i + 1]);
    }
    std::vector<int> order(n + 1);
    while (res.evaluations < max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second = order[n - 1];

        double spread = 0.0;
        for (int i = 0; i <= n; ++i) spread = std::max(spread, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
        const double frange = values[worst] - values[best];
        if (std::isfinite(frange) && frange <= ftol * (std::abs(values[best]) + ftol) && spread <= xtol) {
            res.converged = true;
            break;
        }
        if (spread <= xtol * 1e-3) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += simplex[i];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
        const double fr = eval(xr);
        if (fr < values[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                           : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        for (int i = 0; i <= n; ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    res.x = simplex[static_cast<std::size_t>(it - values.begin())];
    res.f = *it;
    return res;
}

}  // namespace mechemu::detail
