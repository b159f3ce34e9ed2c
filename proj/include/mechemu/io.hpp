#pragma once

#include "mechemu/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mechemu {

/// Shortest round-trip decimal form ("%.17g").
std::string format_number(double v);

/// Reads a `time_s,value` CSV. The time column must be strictly increasing and
/// uniform; the first offending data row is named in the error. Throws ConfigError.
TimeSeries read_time_series(const std::filesystem::path& path, const std::string& unit = {});
TimeSeries parse_time_series(std::istream& in, const std::string& source, const std::string& unit = {});
void write_time_series(const std::filesystem::path& path, const TimeSeries& series);

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<Eigen::VectorXd> rows;

    int column(const std::string& name) const;
};

Table read_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mechemu
