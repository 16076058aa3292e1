#include "fincon/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "fincon/errors.hpp"

namespace fincon {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_cell(double v) {
    if (std::isnan(v)) return "";
    return format_double(v);
}

double parse_cell(const std::string& cell) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    double out = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last)
        throw MalformedRow("cannot parse number '" + cell + "'");
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    f << "# rows=" << m.rows() << " cols=" << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << format_cell(m(i, j));
        }
        f << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::string header;
    std::getline(f, header);
    long rows = -1, cols = -1;
    if (std::sscanf(header.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 ||
        rows < 0 || cols < 0)
        throw MalformedRow("bad matrix header in " + path.string());
    Eigen::MatrixXd m(rows, cols);
    std::string line;
    for (long i = 0; i < rows; ++i) {
        if (!std::getline(f, line))
            throw MalformedRow("truncated matrix file " + path.string());
        auto cells = split_csv_line(line);
        if (static_cast<long>(cells.size()) != cols)
            throw MalformedRow("row " + std::to_string(i) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(cols) + " in " + path.string());
        for (long j = 0; j < cols; ++j) m(i, j) = parse_cell(cells[j]);
    }
    return m;
}

void write_kv(const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& pairs) {
    auto sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    for (const auto& [k, v] : sorted) f << k << '=' << v << '\n';
}

std::vector<std::pair<std::string, std::string>> read_kv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw MalformedRow("expected key=value, got '" + line + "'");
        out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    for (const auto& l : lines) f << l << '\n';
}

}  // namespace fincon
