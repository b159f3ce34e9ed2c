#include "mechemu/types.hpp"

#include "mechemu/errors.hpp"

#include <cmath>
#include <unordered_set>

namespace mechemu {

bool TimeGrid::same_as(const TimeGrid& other, double rel_tol) const {
    if (size != other.size) return false;
    const double tol = rel_tol * std::max(std::abs(step), 1.0);
    return std::abs(start - other.start) <= tol && std::abs(step - other.step) <= tol;
}

TimeSeries::TimeSeries(TimeGrid g, Eigen::VectorXd v, std::string u)
    : grid(g), values(std::move(v)), unit(std::move(u)) {
    if (static_cast<std::size_t>(values.size()) != grid.size) {
        throw InvalidArgument("time series length does not match its grid");
    }
}

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    std::unordered_set<std::string> seen;
    for (const auto& d : dims_) {
        if (!(d.lower < d.upper)) {
            throw InvalidArgument("parameter '" + d.name + "': lower bound must be below upper bound");
        }
        if (!seen.insert(d.name).second) {
            throw InvalidArgument("duplicate parameter name '" + d.name + "'");
        }
    }
}

std::vector<std::string> ParameterSpace::names() const {
    std::vector<std::string> out;
    out.reserve(dims_.size());
    for (const auto& d : dims_) out.push_back(d.name);
    return out;
}

int ParameterSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

Eigen::VectorXd ParameterSpace::spans() const {
    Eigen::VectorXd s(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) s[i] = dims_[i].span();
    return s;
}

Eigen::VectorXd ParameterSpace::lower() const {
    Eigen::VectorXd s(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) s[i] = dims_[i].lower;
    return s;
}

Eigen::VectorXd ParameterSpace::upper() const {
    Eigen::VectorXd s(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) s[i] = dims_[i].upper;
    return s;
}

ParameterSpace ParameterSpace::overreached(double factor) const {
    std::vector<Dimension> out = dims_;
    for (auto& d : out) {
        const double c = d.center();
        const double h = 0.5 * d.span() * factor;
        d.lower = c - h;
        d.upper = c + h;
    }
    return ParameterSpace(std::move(out));
}

bool ParameterSpace::contains(const ParameterVector& theta, double slack) const {
    if (static_cast<std::size_t>(theta.size()) != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const double tol = slack * dims_[i].span();
        if (theta[i] < dims_[i].lower - tol || theta[i] > dims_[i].upper + tol) return false;
    }
    return true;
}

}  // namespace mechemu
