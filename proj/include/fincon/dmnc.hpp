#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fincon/group_ica.hpp"
#include "fincon/kmeans.hpp"

namespace fincon {

enum class WindowFn { RECT, GAUSSIAN };

std::string to_string(WindowFn f);
WindowFn window_fn_from_string(const std::string& s);

// Correlation of the rows of a K x delta slice, optionally under sample
// weights.  A constant row is reported in degenerate_rows and its
// off-diagonal entries become NaN; nothing throws.  The result is exactly
// symmetric with a unit diagonal and finite entries clamped to [-1, 1].
struct WindowCorrelation {
    Eigen::MatrixXd corr;
    std::vector<int> degenerate_rows;
    bool flagged = false;
};
WindowCorrelation window_correlation(const Eigen::MatrixXd& slice,
                                     const Eigen::VectorXd& weights = Eigen::VectorXd());

// Gaussian taper centered on the window midpoint: w(s) = exp(-(s-mu)^2 / (2 sigma^2))
// with mu = (delta-1)/2 for sample indices s = 0..delta-1.
Eigen::VectorXd gaussian_window(int delta, double sigma);

// Sequence of trailing correlation matrices over an activation matrix.
// Slice t covers activation columns [t*stride, t*stride + delta) and is
// stamped with the label of its last column; slice count is
// floor((T-delta)/stride)+1.
struct DmncTensor {
    std::vector<Eigen::MatrixXd> slices;   // each K x K
    std::vector<std::string> timestamps;   // window-end labels
    std::vector<std::vector<int>> degenerate_rows;  // per slice
    int delta = 45;
    int stride = 1;
    WindowFn window_fn = WindowFn::RECT;
    double gauss_sigma = 0.0;

    long size() const { return static_cast<long>(slices.size()); }
    int k() const { return slices.empty() ? 0 : static_cast<int>(slices[0].rows()); }
};
DmncTensor build_dmnc(const ActivationMatrix& acts, int delta, int stride = 1,
                      WindowFn fn = WindowFn::RECT, double gauss_sigma = 0.0);

// Node-level variant: one asset-by-asset correlation matrix per pseudo
// subject window, laid out in the given window order.
DmncTensor build_node_dmnc(const PseudoSubjectStack& stack, const std::vector<long>& order);

enum class SmoothKind { MOVING_AVG, EXP, ZSCORE };

// Per-component smoothing of an activation matrix.  MOVING_AVG(n) is a
// trailing mean (shorter at the start), EXP(alpha) the usual recursive
// filter, ZSCORE standardizes each row (sample std).  ZSCORE throws
// DegenerateRow on a constant row; n=1 and alpha=1 are identities.
ActivationMatrix smooth_activations(const ActivationMatrix& acts, SmoothKind kind,
                                    double param);

// Stable ordering of windows by (z_on, z_off, original index), ascending.
std::vector<long> order_windows(const std::vector<double>& z_on,
                                const std::vector<double>& z_off);

// Upper-triangle vectorization in row-major pair order (0,1), (0,2), ...
// Throws AsymmetricInput beyond 1e-8.  devectorize restores the symmetric
// matrix with a unit diagonal.
Eigen::VectorXd vectorize_upper(const Eigen::MatrixXd& c);
Eigen::MatrixXd devectorize_upper(const Eigen::VectorXd& v, int k);
std::vector<std::pair<int, int>> upper_pairs(int k);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double frobenius_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// jump[t] = 1 - cos(v_{t+1}, v_t) on vectorized slices; length size()-1.
std::vector<double> similarity_jump(const DmncTensor& tensor);

// Mahalanobis distance of every vectorized slice to the baseline mean under
// the shrunk baseline covariance Sigma + lambda I, lambda = 1e-3 tr(Sigma)/dim.
// The baseline is slices [baseline_start, baseline_end) and must hold at
// least dim+2 samples.
std::vector<double> distance_to_baseline(const DmncTensor& tensor, long baseline_start,
                                         long baseline_end);

// S(t) = (1/K^2) sum_ij Var(C[t-tau+1..t](i,j)), population variance over
// the trailing tau slices; defined from t = tau-1 on.
struct VolatilitySeries {
    long start = 0;  // tensor index of values[0]
    std::vector<double> values;
};
VolatilitySeries structural_volatility(const DmncTensor& tensor, int tau);

// Per-edge standardization across the tensor (sample std).  A zero-variance
// edge yields a NaN column.
struct EdgeZScores {
    Eigen::MatrixXd z;  // size() x n_edges
    std::vector<std::pair<int, int>> edges;
};
EdgeZScores edge_zscores(const DmncTensor& tensor);

struct RegimeLabeling {
    std::vector<int> labels;
    std::vector<std::string> timestamps;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
};
RegimeLabeling cluster_regimes(const DmncTensor& tensor, int k, std::uint64_t seed,
                               int restarts = 8);

// Principal-plane embedding of a set of vectors (rows of coords correspond
// to inputs).  Throws RankDeficient when the cloud has rank below dims.
struct Embedding {
    Eigen::MatrixXd coords;     // n x dims
    Eigen::VectorXd explained;  // dims, fractions
};
Embedding pca_embed(const std::vector<Eigen::VectorXd>& vectors, int dims = 2);

// Tensor directory: manifest.json plus one matrix CSV per slice.
void write_tensor(const std::filesystem::path& dir, const DmncTensor& tensor);
DmncTensor read_tensor(const std::filesystem::path& dir);

}  // namespace fincon
