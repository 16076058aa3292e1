#pragma once

// Shared helpers for the unit suites: scratch directories that clean up
// after themselves and a couple of dense-matrix conveniences.  Anything
// that re-derives an expected value lives next to the test that uses it,
// not here.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace testutil {

// Unique directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("fincon_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Deterministic dense matrix for tests that just need "some numbers".
inline Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = nd(eng);
    return m;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Pearson correlation of two equally long vectors; plain textbook loop so
// it stays independent of the library kernels.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cxy += (x[i] - mx) * (y[i] - my);
        cxx += (x[i] - mx) * (x[i] - mx);
        cyy += (y[i] - my) * (y[i] - my);
    }
    return cxy / std::sqrt(cxx * cyy);
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> x(a.data(), a.data() + a.size());
    std::vector<double> y(b.data(), b.data() + b.size());
    return pearson(x, y);
}

}  // namespace testutil
