#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fincon {

inline double sample_variance(const Eigen::VectorXd& x) {
    const auto n = x.size();
    if (n < 2) return 0.0;
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

inline double population_variance(const Eigen::VectorXd& x) {
    const auto n = x.size();
    if (n < 1) return 0.0;
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(n);
}

// Pearson correlation; NaN when either side has zero variance.  Finite
// results are clamped to [-1, 1].
inline double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const auto n = x.size();
    if (n != y.size() || n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = x.mean(), my = y.mean();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dx = x(i) - mx, dy = y(i) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Linear-interpolation quantile on the order statistics: with n points the
// quantile sits at position (n-1)*p and interpolates its two neighbours.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    if (lo == hi) return v[lo];
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double iqr(const std::vector<double>& v) {
    return quantile(v, 0.75) - quantile(v, 0.25);
}

inline double sample_excess_kurtosis(const Eigen::VectorXd& x) {
    const auto n = static_cast<double>(x.size());
    const double m = x.mean();
    const double m2 = (x.array() - m).square().mean();
    const double m4 = (x.array() - m).pow(4).mean();
    return m4 / (m2 * m2) - 3.0;
}

}  // namespace fincon
