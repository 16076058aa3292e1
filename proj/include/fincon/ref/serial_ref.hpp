#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fincon/assignment.hpp"
#include "fincon/dmnc.hpp"
#include "fincon/market_data.hpp"

// Straight-line serial implementations of the parallel kernels, written as
// plainly as possible.  Tests compare the fast paths against these, and the
// benchmark times the two side by side.  Nothing in the main library may
// call into this namespace.
namespace fincon::ref {

Eigen::MatrixXd matmul_naive(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Serial counterpart of build_feature_panel: one asset at a time.
AssetPanel feature_panel_serial(const AssetPanel& prices, const AssetPanel& volume,
                                FeatureKind kind, int w);

// Scalar-accumulator rolling correlation with the same NaN warm-up as the
// parallel kernel.
std::vector<double> rolling_pearson_naive(const std::vector<double>& x,
                                          const std::vector<double>& y, int window);

// Weighted correlation via the raw-sums identity
// r = (E[xy] - E[x]E[y]) / (sd_x sd_y), a different evaluation order from
// the centered form used by the fast path.
WindowCorrelation window_correlation_naive(const Eigen::MatrixXd& slice,
                                           const Eigen::VectorXd& weights = Eigen::VectorXd());

// Serial tensor build, one slice after another.
DmncTensor build_dmnc_slicewise(const ActivationMatrix& acts, int delta, int stride = 1,
                                WindowFn fn = WindowFn::RECT, double gauss_sigma = 0.0);

// One-pass-variance counterpart of structural_volatility.
VolatilitySeries structural_volatility_naive(const DmncTensor& tensor, int tau);

// Exhaustive maximum-total assignment for n <= 8 (n! candidates); among
// equal totals the permutation enumerated first is lexicographically
// smallest, matching the fast solver's tie rule.
Assignment assignment_bruteforce(const Eigen::MatrixXd& score);

// Floyd-Warshall all-pairs efficiency over edge lengths 1/weight.
double global_efficiency_fw(const Eigen::MatrixXd& c);

// Direct double-loop Newman modularity for a given partition.
double modularity_naive(const Eigen::MatrixXd& c, const std::vector<int>& partition);

// Exhaustive best-modularity partition for n <= 10 nodes (Bell-number
// enumeration via restricted growth strings).  Returns the maximum Q and a
// partition achieving it, labels densely numbered by lowest member.
std::pair<double, std::vector<int>> best_partition(const Eigen::MatrixXd& c);

}  // namespace fincon::ref
