#include "mechemu/io.hpp"

#include "mechemu/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mechemu {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = field.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string() : field.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty()) throw ConfigError(where + ": not a number: '" + s + "'");
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

TimeSeries parse_time_series(std::istream& in, const std::string& source, const std::string& unit) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "time_s" || header[1] != "value") {
        throw ConfigError(source + ": expected header 'time_s,value'");
    }
    std::vector<double> t, v;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = source + " row " + std::to_string(row);
        if (f.size() != 2) throw ConfigError(where + ": expected 2 fields");
        t.push_back(parse_double(f[0], where));
        v.push_back(parse_double(f[1], where));
        if (!std::isfinite(t.back()) || !std::isfinite(v.back())) throw ConfigError(where + ": non-finite value");
    }
    if (t.size() < 2) throw ConfigError(source + ": need at least two rows");
    const double step = t[1] - t[0];
    if (!(step > 0.0)) throw ConfigError(source + " row 2: time column is not increasing");
    for (std::size_t i = 2; i < t.size(); ++i) {
        const double d = t[i] - t[i - 1];
        if (std::abs(d - step) > 1e-6 * step) {
            throw ConfigError(source + " row " + std::to_string(i + 1) + ": non-uniform time grid (step " +
                              format_number(d) + " vs " + format_number(step) + ")");
        }
    }
    TimeGrid grid{t[0], step, t.size()};
    return TimeSeries(grid, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())), unit);
}

TimeSeries read_time_series(const std::filesystem::path& path, const std::string& unit) {
    auto in = open_input(path);
    return parse_time_series(in, path.string(), unit);
}

void write_time_series(const std::filesystem::path& path, const TimeSeries& series) {
    std::ostringstream out;
    out << "time_s,value\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_number(series.grid.time(i)) << ',' << format_number(series.values[static_cast<Eigen::Index>(i)])
            << '\n';
    }
    write_text(path, out.str());
}

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
}

Table read_table(const std::filesystem::path& path) {
    auto in = open_input(path);
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    table.columns = split_csv_line(line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = path.string() + " row " + std::to_string(row);
        if (f.size() != table.columns.size()) throw ConfigError(where + ": wrong number of fields");
        Eigen::VectorXd r(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) r[static_cast<Eigen::Index>(i)] = parse_double(f[i], where);
        table.rows.push_back(std::move(r));
    }
    return table;
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ostringstream out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& r : table.rows) {
        for (Eigen::Index i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
        out << '\n';
    }
    write_text(path, out.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mechemu
