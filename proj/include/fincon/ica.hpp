#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fincon {

// PCA whitening of an F x T data matrix (rows are features, columns are
// samples).  forward maps centered data to R decorrelated rows with unit
// sample covariance (T-1 convention); inverse maps back, forward * inverse
// is the identity on the retained subspace.
struct WhiteningResult {
    Eigen::MatrixXd whitened;    // R x T, unit sample covariance
    Eigen::MatrixXd forward;     // R x F
    Eigen::MatrixXd inverse;     // F x R
    Eigen::VectorXd mean;        // F
    Eigen::VectorXd explained;   // R, fractions of total variance, descending

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return forward * (x.colwise() - mean);
    }
};

// Throws RankDeficient when x has fewer than `rank` numerically nonzero
// singular values after centering.  Requires rank <= min(F, T-1).
WhiteningResult pca_whiten(const Eigen::MatrixXd& x, int rank);

// log cosh contrast and its first two derivatives, evaluated elementwise.
// Stable for large |u|: ln cosh u = |u| + ln((1 + e^{-2|u|}) / 2).
struct Contrast {
    double G;   // ln cosh u
    double g;   // tanh u
    double gp;  // 1 - tanh^2 u
};
Contrast contrast_logcosh(double u);

// W <- (W W^T)^{-1/2} W, rows become orthonormal.
Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& w);

struct UnmixingMatrix {
    Eigen::MatrixXd rows;  // K x R, orthonormal rows
    bool converged = false;
    int iterations = 0;
    std::uint64_t seed = 0;
};

// Symmetric fixed-point ICA on whitened data z (R x T) with the log cosh
// contrast.  All K rows update in lockstep:
//   w <- E[z g(w'z)] - E[g'(w'z)] w, followed by symmetric orthogonalization.
// Convergence is max_k |1 - |<w_new_k, w_old_k>|| < tol.  A non-converged
// solve returns converged=false rather than throwing; DegenerateInput is
// reserved for rows of z with zero variance.
UnmixingMatrix ica_fixed_point(const Eigen::MatrixXd& z, int k,
                               double tol = 1e-6, int max_iter = 4000,
                               std::uint64_t seed = 0);

}  // namespace fincon
