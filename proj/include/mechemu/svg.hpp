#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mechemu {

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
};

struct LineSeries {
    std::string label;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    bool markers = false;
};

/// Shaded band between `lower` and `upper` with optional median line and
/// observation points.
struct BandPlot {
    Axes axes;
    Eigen::VectorXd x;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::VectorXd median;    ///< may be empty
    Eigen::VectorXd observed;  ///< may be empty
};

std::string band_svg(const BandPlot& plot);
std::string lines_svg(const Axes& axes, const std::vector<LineSeries>& series);
std::string histogram_svg(const Axes& axes, const std::vector<double>& values, int bins = 30,
                          std::optional<double> marker = std::nullopt);

}  // namespace mechemu
