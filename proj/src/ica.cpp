#include "fincon/ica.hpp"

#include <cmath>
#include <string>

#include "fincon/errors.hpp"
#include "fincon/rng.hpp"

namespace fincon {

namespace {

// Fix each left singular vector's sign so its largest-magnitude entry is
// positive.  Keeps whitening stable under small perturbations of the input,
// which matters when many nearly identical windows are whitened separately.
void canonicalize_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            double a = std::abs(u(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (u(arg, c) < 0.0) {
            u.col(c) = -u.col(c);
            if (c < v.cols()) v.col(c) = -v.col(c);
        }
    }
}

}  // namespace

WhiteningResult pca_whiten(const Eigen::MatrixXd& x, int rank) {
    const auto F = x.rows();
    const auto T = x.cols();
    if (T < 2) throw Precondition("pca_whiten: need at least 2 samples");
    if (rank < 1 || rank > std::min<Eigen::Index>(F, T - 1))
        throw Precondition("pca_whiten: rank must satisfy 1 <= rank <= min(F, T-1)");

    WhiteningResult res;
    res.mean = x.rowwise().mean();
    Eigen::MatrixXd xc = x.colwise() - res.mean;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd u = svd.matrixU();
    Eigen::MatrixXd v = svd.matrixV();
    Eigen::VectorXd s = svd.singularValues();
    canonicalize_signs(u, v);

    const double cutoff = s(0) * std::max<Eigen::Index>(F, T) *
                          std::numeric_limits<double>::epsilon();
    int nonzero = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) ++nonzero;
    if (nonzero < rank)
        throw RankDeficient("pca_whiten: " + std::to_string(nonzero) +
                            " nonzero singular values, need " + std::to_string(rank));

    const double scale = std::sqrt(static_cast<double>(T - 1));
    res.forward.resize(rank, F);
    res.inverse.resize(F, rank);
    for (int i = 0; i < rank; ++i) {
        res.forward.row(i) = (scale / s(i)) * u.col(i).transpose();
        res.inverse.col(i) = (s(i) / scale) * u.col(i);
    }
    const double total = s.array().square().sum();
    res.explained = s.head(rank).array().square() / total;
    res.whitened = res.forward * xc;
    return res;
}

Contrast contrast_logcosh(double u) {
    Contrast c;
    const double a = std::abs(u);
    // ln cosh u = |u| + ln((1 + e^{-2|u|}) / 2); exact and overflow-free
    c.G = a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;
    c.g = std::tanh(u);
    c.gp = 1.0 - c.g * c.g;
    return c;
}

Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& w) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cutoff = svd.singularValues()(0) *
                          std::max(w.rows(), w.cols()) *
                          std::numeric_limits<double>::epsilon();
    if (svd.singularValues().minCoeff() <= cutoff)
        throw RankDeficient("symmetric_orthogonalize: rows are linearly dependent");
    return svd.matrixU() * svd.matrixV().transpose();
}

UnmixingMatrix ica_fixed_point(const Eigen::MatrixXd& z, int k,
                               double tol, int max_iter, std::uint64_t seed) {
    const auto R = z.rows();
    const auto T = z.cols();
    if (k < 1 || k > R)
        throw Precondition("ica_fixed_point: need 1 <= k <= rows(z)");
    if (T < 2) throw Precondition("ica_fixed_point: need at least 2 samples");
    for (Eigen::Index i = 0; i < R; ++i) {
        const double mean = z.row(i).mean();
        const double var = (z.row(i).array() - mean).square().sum() / (T - 1);
        if (var <= 0.0)
            throw DegenerateInput("ica_fixed_point: row " + std::to_string(i) +
                                  " of z has zero variance");
    }

    Rng rng(seed);
    Eigen::MatrixXd w(k, R);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < R; ++j) w(i, j) = rng.normal();
    w = symmetric_orthogonalize(w);

    UnmixingMatrix out;
    out.seed = seed;
    const double inv_t = 1.0 / static_cast<double>(T);

    for (int it = 1; it <= max_iter; ++it) {
        Eigen::MatrixXd y = w * z;                       // k x T
        Eigen::MatrixXd gy = y.array().tanh().matrix();  // g(y)
        Eigen::VectorXd gp_mean =
            (1.0 - gy.array().square()).rowwise().mean();  // E[g'(y)] per row
        Eigen::MatrixXd w_new =
            gy * z.transpose() * inv_t - gp_mean.asDiagonal() * w;
        w_new = symmetric_orthogonalize(w_new);

        double delta = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            const double d = std::abs(1.0 - std::abs(w_new.row(i).dot(w.row(i))));
            delta = std::max(delta, d);
        }
        w = w_new;
        out.iterations = it;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    out.rows = w;
    return out;
}

}  // namespace fincon
