#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace fincon {

// Shortest round-trip decimal representation (via std::to_chars).  Used for
// every number the library writes so that output files are byte-stable.
std::string format_double(double v);

// NaN renders as an empty cell; empty cells parse back to NaN.
std::string format_cell(double v);
double parse_cell(const std::string& cell);

std::vector<std::string> split_csv_line(const std::string& line);

// Matrix files carry a one-line shape header:
//   # rows=<r> cols=<c>
// followed by r comma-separated rows.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// key=value sidecar files, one pair per line, keys written in sorted order
void write_kv(const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& pairs);
std::vector<std::pair<std::string, std::string>> read_kv(const std::filesystem::path& path);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace fincon
