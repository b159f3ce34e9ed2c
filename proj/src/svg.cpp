#include "mechemu/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mechemu {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void add(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
    }
    void settle() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-300) {
            const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

class Canvas {
public:
    Canvas(const Axes& axes, Range x, Range y) : x_(x), y_(y) {
        x_.settle();
        y_.settle();
        const double pad = 0.05 * (y_.hi - y_.lo);
        y_.hi += pad;
        if (y_.lo != 0.0) y_.lo -= pad;
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out_ << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
             << escape(axes.title) << "</text>\n";
        const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
        out_ << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
             << "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int t = 0; t <= 5; ++t) {
            const double xv = x_.lo + (x_.hi - x_.lo) * t / 5.0;
            const double yv = y_.lo + (y_.hi - y_.lo) * t / 5.0;
            out_ << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
                 << tick_label(xv) << "</text>\n";
            out_ << "<text x=\"" << x0 - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
                 << tick_label(yv) << "</text>\n";
        }
        out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
             << escape(axes.x_label) << "</text>\n";
        out_ << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
             << escape(axes.y_label) << "</text>\n";
    }

    double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const {
        return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kBottom - kTop);
    }

    void polyline(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color, double width = 1.5) {
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" points=\"";
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            out_ << fmt(px(x[i])) << ',' << fmt(py(y[i])) << ' ';
        }
        out_ << "\"/>\n";
    }

    void dots(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            out_ << "<circle cx=\"" << fmt(px(x[i])) << "\" cy=\"" << fmt(py(y[i])) << "\" r=\"2.5\" fill=\"" << color
                 << "\"/>\n";
        }
    }

    void band(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        out_ << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
        for (Eigen::Index i = 0; i < x.size(); ++i) out_ << fmt(px(x[i])) << ',' << fmt(py(hi[i])) << ' ';
        for (Eigen::Index i = x.size() - 1; i >= 0; --i) out_ << fmt(px(x[i])) << ',' << fmt(py(lo[i])) << ' ';
        out_ << "\"/>\n";
    }

    void rect(double xa, double xb, double ya, double yb, const std::string& color) {
        out_ << "<rect x=\"" << fmt(px(xa)) << "\" y=\"" << fmt(py(yb)) << "\" width=\"" << fmt(px(xb) - px(xa))
             << "\" height=\"" << fmt(py(ya) - py(yb)) << "\" fill=\"" << color << "\" stroke=\"white\"/>\n";
    }

    void vline(double x, const std::string& color) {
        out_ << "<line x1=\"" << fmt(px(x)) << "\" x2=\"" << fmt(px(x)) << "\" y1=\"" << kTop << "\" y2=\""
             << kHeight - kBottom << "\" stroke=\"" << color << "\" stroke-width=\"2\" stroke-dasharray=\"5,3\"/>\n";
    }

    void legend(int row, const std::string& label, const std::string& color) {
        const double y = kTop + 16 + 16 * row;
        out_ << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"10\" fill=\""
             << color << "\"/>\n";
        out_ << "<text x=\"" << kWidth - kRight - 134 << "\" y=\"" << y << "\">" << escape(label) << "</text>\n";
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    Range x_, y_;
    std::ostringstream out_;
};

}  // namespace

std::string band_svg(const BandPlot& plot) {
    Range xr, yr;
    xr.add(plot.x);
    yr.add(plot.lower);
    yr.add(plot.upper);
    yr.add(plot.median);
    yr.add(plot.observed);
    yr.add(0.0);
    Canvas c(plot.axes, xr, yr);
    c.band(plot.x, plot.lower, plot.upper);
    c.legend(0, "95% band", "#9ecae1");
    if (plot.median.size() == plot.x.size()) {
        c.polyline(plot.x, plot.median, "#1f77b4");
        c.legend(1, "median", "#1f77b4");
    }
    if (plot.observed.size() == plot.x.size()) {
        c.dots(plot.x, plot.observed, "#222");
        c.legend(2, "observed", "#222");
    }
    return c.finish();
}

std::string lines_svg(const Axes& axes, const std::vector<LineSeries>& series) {
    Range xr, yr;
    for (const auto& s : series) {
        xr.add(s.x);
        yr.add(s.y);
    }
    Canvas c(axes, xr, yr);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string color = kPalette[i % 6];
        c.polyline(series[i].x, series[i].y, color);
        if (series[i].markers) c.dots(series[i].x, series[i].y, color);
        c.legend(static_cast<int>(i), series[i].label, color);
    }
    return c.finish();
}

std::string histogram_svg(const Axes& axes, const std::vector<double>& values, int bins,
                          std::optional<double> marker) {
    Range xr;
    for (double v : values) xr.add(v);
    if (marker) xr.add(*marker);
    xr.settle();
    bins = std::max(bins, 1);
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    const double width = (xr.hi - xr.lo) / bins;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - xr.lo) / width));
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    const double n = values.empty() ? 1.0 : static_cast<double>(values.size());
    Range yr;
    yr.add(0.0);
    for (double& cnt : counts) {
        cnt /= n * width;
        yr.add(cnt);
    }
    Canvas c(axes, xr, yr);
    for (int b = 0; b < bins; ++b) {
        c.rect(xr.lo + b * width, xr.lo + (b + 1) * width, 0.0, counts[static_cast<std::size_t>(b)], "#1f77b4");
    }
    if (marker) {
        c.vline(*marker, "#d62728");
        c.legend(0, "truth", "#d62728");
    }
    return c.finish();
}

}  // namespace mechemu
