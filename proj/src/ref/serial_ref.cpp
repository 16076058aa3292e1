#include "fincon/ref/serial_ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fincon/errors.hpp"

namespace fincon::ref {

Eigen::MatrixXd matmul_naive(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matmul_naive: inner dimensions differ");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (Eigen::Index l = 0; l < a.cols(); ++l) acc += a(i, l) * b(l, j);
            out(i, j) = acc;
        }
    return out;
}

AssetPanel feature_panel_serial(const AssetPanel& prices, const AssetPanel& volume,
                                FeatureKind kind, int w) {
    if (kind == FeatureKind::VWAP &&
        (prices.values.rows() != volume.values.rows() ||
         prices.values.cols() != volume.values.cols()))
        throw DimensionMismatch("feature_panel_serial: price and volume shapes differ");
    if (kind == FeatureKind::RAW_LOGRET) w = 1;
    if (kind == FeatureKind::RAW_PRICE)
        throw Precondition("feature_panel_serial: RAW_PRICE is not a derived feature");
    const long T = prices.values.rows();
    const long K = prices.values.cols();
    const long offset = kind == FeatureKind::VWAP ? w - 1 : w;
    const long rows = kind == FeatureKind::VWAP ? T - w + 1 : T - w;
    if (rows < 1) throw Precondition("feature_panel_serial: window too long");

    AssetPanel out;
    out.assets = prices.assets;
    out.kind = kind;
    out.window = w;
    out.dates.assign(prices.dates.begin() + offset, prices.dates.end());
    out.values.resize(rows, K);
    for (long j = 0; j < K; ++j) {
        if (kind == FeatureKind::VWAP) {
            for (long t = 0; t + w <= T; ++t) {
                double pv = 0.0, v = 0.0;
                for (long s = t; s < t + w; ++s) {
                    pv += prices.values(s, j) * volume.values(s, j);
                    v += volume.values(s, j);
                }
                if (v == 0.0)
                    throw ZeroVolumeWindow("feature_panel_serial: zero-volume window");
                out.values(t, j) = pv / v;
            }
        } else {
            for (long t = 0; t < T; ++t)
                if (!(prices.values(t, j) > 0.0))
                    throw NonPositivePrice("feature_panel_serial: prices must be positive");
            for (long t = 0; t + w <= T - 1; ++t) {
                double acc = 0.0;
                for (long s = t + 1; s <= t + w; ++s)
                    acc += std::log(prices.values(s, j) / prices.values(s - 1, j));
                out.values(t, j) = acc / w;
            }
        }
    }
    return out;
}

std::vector<double> rolling_pearson_naive(const std::vector<double>& x,
                                          const std::vector<double>& y, int window) {
    if (x.size() != y.size())
        throw LengthMismatch("rolling_pearson_naive: series lengths differ");
    if (window < 2) throw Precondition("rolling_pearson_naive: window must be >= 2");
    const long T = static_cast<long>(x.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> out(T, nan);
    for (long t = window - 1; t < T; ++t) {
        double mx = 0.0, my = 0.0;
        for (long s = t - window + 1; s <= t; ++s) {
            mx += x[s];
            my += y[s];
        }
        mx /= window;
        my /= window;
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (long s = t - window + 1; s <= t; ++s) {
            sxx += (x[s] - mx) * (x[s] - mx);
            syy += (y[s] - my) * (y[s] - my);
            sxy += (x[s] - mx) * (y[s] - my);
        }
        if (sxx <= 0.0 || syy <= 0.0) continue;
        out[t] = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    }
    return out;
}

WindowCorrelation window_correlation_naive(const Eigen::MatrixXd& slice,
                                           const Eigen::VectorXd& weights) {
    const long k = slice.rows();
    const long n = slice.cols();
    if (k < 1 || n < 2)
        throw Precondition("window_correlation_naive: need >= 1 row and >= 2 samples");
    std::vector<double> w(n, 1.0);
    if (weights.size() != 0) {
        if (weights.size() != n)
            throw DimensionMismatch("window_correlation_naive: weight length mismatch");
        double sum = 0.0;
        for (long s = 0; s < n; ++s) {
            if (weights(s) < 0.0)
                throw Precondition("window_correlation_naive: negative weight");
            w[s] = weights(s);
            sum += w[s];
        }
        if (sum <= 0.0)
            throw Precondition("window_correlation_naive: weights sum to zero");
    }
    double wsum = 0.0;
    for (long s = 0; s < n; ++s) wsum += w[s];

    WindowCorrelation out;
    out.corr = Eigen::MatrixXd::Identity(k, k);
    std::vector<double> mean(k, 0.0), exx(k, 0.0), sd(k, 0.0);
    std::vector<char> degenerate(k, 0);
    for (long i = 0; i < k; ++i) {
        double lo = slice(i, 0), hi = slice(i, 0);
        for (long s = 0; s < n; ++s) {
            mean[i] += w[s] * slice(i, s);
            exx[i] += w[s] * slice(i, s) * slice(i, s);
            lo = std::min(lo, slice(i, s));
            hi = std::max(hi, slice(i, s));
        }
        mean[i] /= wsum;
        exx[i] /= wsum;
        sd[i] = std::sqrt(std::max(0.0, exx[i] - mean[i] * mean[i]));
        if (hi - lo == 0.0 || sd[i] == 0.0) {
            degenerate[i] = 1;
            out.degenerate_rows.push_back(static_cast<int>(i));
            out.flagged = true;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (long i = 0; i < k; ++i)
        for (long j = i + 1; j < k; ++j) {
            double r;
            if (degenerate[i] || degenerate[j]) {
                r = nan;
            } else {
                double exy = 0.0;
                for (long s = 0; s < n; ++s) exy += w[s] * slice(i, s) * slice(j, s);
                exy /= wsum;
                r = std::clamp((exy - mean[i] * mean[j]) / (sd[i] * sd[j]), -1.0, 1.0);
            }
            out.corr(i, j) = r;
            out.corr(j, i) = r;
        }
    return out;
}

DmncTensor build_dmnc_slicewise(const ActivationMatrix& acts, int delta, int stride,
                                WindowFn fn, double gauss_sigma) {
    const long T = acts.values.cols();
    if (delta < 2) throw Precondition("build_dmnc_slicewise: delta must be >= 2");
    if (stride < 1) throw Precondition("build_dmnc_slicewise: stride must be >= 1");
    if (delta > T) throw WindowTooLong("build_dmnc_slicewise: delta exceeds series length");

    Eigen::VectorXd weights;
    if (fn == WindowFn::GAUSSIAN) {
        const double mu = (delta - 1) / 2.0;
        weights.resize(delta);
        for (int s = 0; s < delta; ++s)
            weights(s) = std::exp(-(s - mu) * (s - mu) / (2.0 * gauss_sigma * gauss_sigma));
    }

    DmncTensor out;
    out.delta = delta;
    out.stride = stride;
    out.window_fn = fn;
    out.gauss_sigma = fn == WindowFn::GAUSSIAN ? gauss_sigma : 0.0;
    const long count = (T - delta) / stride + 1;
    for (long t = 0; t < count; ++t) {
        const long start = t * stride;
        const WindowCorrelation wc =
            window_correlation_naive(acts.values.middleCols(start, delta), weights);
        out.slices.push_back(wc.corr);
        out.degenerate_rows.push_back(wc.degenerate_rows);
        out.timestamps.push_back(acts.window_labels[start + delta - 1]);
    }
    return out;
}

VolatilitySeries structural_volatility_naive(const DmncTensor& tensor, int tau) {
    const long L = tensor.size();
    if (tau < 2) throw Precondition("structural_volatility_naive: tau must be >= 2");
    if (tau > L) throw Precondition("structural_volatility_naive: tau exceeds length");
    const int k = tensor.k();

    VolatilitySeries out;
    out.start = tau - 1;
    out.values.resize(L - tau + 1);
    for (long t = tau - 1; t < L; ++t) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                double ex = 0.0, exx = 0.0;
                for (int s = 0; s < tau; ++s) {
                    const double v = tensor.slices[t - s](i, j);
                    ex += v;
                    exx += v * v;
                }
                ex /= tau;
                exx /= tau;
                acc += std::max(0.0, exx - ex * ex);
            }
        out.values[t - tau + 1] = acc / static_cast<double>(k * k);
    }
    return out;
}

Assignment assignment_bruteforce(const Eigen::MatrixXd& score) {
    const long n = score.rows();
    if (score.cols() != n) throw DimensionMismatch("assignment_bruteforce: square matrix");
    if (n < 1 || n > 8)
        throw Precondition("assignment_bruteforce: supports 1 <= n <= 8");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best;
    best.total = -std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (long i = 0; i < n; ++i) total += score(i, perm[i]);
        // Strict improvement only: permutations arrive in lexicographic
        // order, so the first optimum seen is the smallest.
        if (total > best.total) {
            best.total = total;
            best.col_of_row.assign(perm.begin(), perm.end());
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double global_efficiency_fw(const Eigen::MatrixXd& c) {
    const long n = c.rows();
    if (c.cols() != n) throw DimensionMismatch("global_efficiency_fw: square matrix");
    if (n < 2) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
    for (long i = 0; i < n; ++i) {
        d[i][i] = 0.0;
        for (long j = 0; j < n; ++j)
            if (i != j && c(i, j) > 0.0) d[i][j] = 1.0 / c(i, j);
    }
    for (long m = 0; m < n; ++m)
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j)
                if (d[i][m] + d[m][j] < d[i][j]) d[i][j] = d[i][m] + d[m][j];
    double acc = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (i != j && d[i][j] < inf) acc += 1.0 / d[i][j];
    return acc / static_cast<double>(n * (n - 1));
}

double modularity_naive(const Eigen::MatrixXd& c, const std::vector<int>& partition) {
    const long n = c.rows();
    if (c.cols() != n) throw DimensionMismatch("modularity_naive: square matrix");
    if (static_cast<long>(partition.size()) != n)
        throw DimensionMismatch("modularity_naive: partition size mismatch");
    double two_m = 0.0;
    std::vector<double> degree(n, 0.0);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (i != j && c(i, j) > 0.0) {
                degree[i] += c(i, j);
                two_m += c(i, j);
            }
    if (two_m <= 0.0) throw NoPositiveEdges("modularity_naive: no positive edge");
    double q = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            if (partition[i] != partition[j]) continue;
            const double w = i != j && c(i, j) > 0.0 ? c(i, j) : 0.0;
            q += w - degree[i] * degree[j] / two_m;
        }
    return q / two_m;
}

std::pair<double, std::vector<int>> best_partition(const Eigen::MatrixXd& c) {
    const long n = c.rows();
    if (n < 1 || n > 10) throw Precondition("best_partition: supports 1 <= n <= 10");
    // Restricted growth strings: a[0] = 0 and a[i] <= 1 + max(a[0..i-1]).
    std::vector<int> a(n, 0);
    double best_q = -std::numeric_limits<double>::infinity();
    std::vector<int> best = a;
    while (true) {
        const double q = modularity_naive(c, a);
        if (q > best_q) {
            best_q = q;
            best = a;
        }
        long i = n - 1;
        while (i > 0) {
            int hi = 0;
            for (long j = 0; j < i; ++j) hi = std::max(hi, a[j]);
            if (a[i] <= hi) break;
            --i;
        }
        if (i == 0) break;
        ++a[i];
        for (long j = i + 1; j < n; ++j) a[j] = 0;
    }
    return {best_q, best};
}

}  // namespace fincon::ref
