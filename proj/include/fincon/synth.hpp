#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fincon/group_ica.hpp"
#include "fincon/ica.hpp"

namespace fincon {

enum class SourceDist { LAPLACE, UNIFORM, SIGNED_SQUARE };

std::string to_string(SourceDist d);
SourceDist source_dist_from_string(const std::string& s);

// K independent source rows of length T, empirically centered and scaled to
// unit sample variance.  Rows use decorrelated seed streams so K and T can
// vary without reshuffling earlier rows.
Eigen::MatrixXd gen_sources(int k, long t, SourceDist dist, std::uint64_t seed);

struct MixingModel {
    Eigen::MatrixXd mixing;   // N x K
    Eigen::MatrixXd sources;  // K x T
    Eigen::MatrixXd data;     // N x T, mixing * sources (+ noise if any)
};

// Random mixing matrix with unit-norm columns.
Eigen::MatrixXd gen_mixing(int n, int k, std::uint64_t seed);

// data = mixing * sources, plus optional isotropic Gaussian noise.
MixingModel mix(const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& sources,
                double noise = 0.0, std::uint64_t noise_seed = 0);

// Mean Hungarian-matched |corr| between recovered rows W * whiten(data) and
// the true sources.  1.0 means perfect recovery up to order and sign.
double recovery_score(const Eigen::MatrixXd& w_est, const WhiteningResult& whitening,
                      const MixingModel& model);

// Matched |corr| between estimated loading rows and true mixing columns.
double loading_recovery(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& mixing);

struct RegimeSpan {
    int regime = 0;  // index into the covariance template list
    long length = 0;
};

// Activation series with a planted covariance regime per span plus its
// per-sample regime labels.  Each template must be PSD (NotPSD otherwise)
// and noise must be positive so no row can degenerate.
struct RegimeTensorTruth {
    ActivationMatrix activations;
    std::vector<int> labels;  // per sample
};
RegimeTensorTruth gen_regime_tensor(const std::vector<Eigen::MatrixXd>& templates,
                                    const std::vector<RegimeSpan>& schedule,
                                    double noise, std::uint64_t seed);

// Majority regime per trailing window of length delta (midpoint sample).
std::vector<int> window_labels(const std::vector<int>& labels, int delta, int stride = 1);

// Bar tape for a mixed-returns scenario: prices follow exp(cumsum of r/scale),
// volume is constant, tickers are A00, A01, ...  This lets the whole
// pipeline run end to end on synthetic input.
struct SyntheticScenario {
    std::vector<DailyBar> bars;
    AssetPanel returns;  // the planted daily return panel
    MixingModel model;
};
SyntheticScenario gen_scenario(int n_assets, long t_days, int k, SourceDist dist,
                               double noise, double scale, std::uint64_t seed);

}  // namespace fincon
