#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fincon/group_ica.hpp"

namespace fincon {

enum class ResampleScheme { SEED_ONLY, WINDOW_BOOTSTRAP };

std::string to_string(ResampleScheme s);
ResampleScheme resample_scheme_from_string(const std::string& s);

struct BootstrapEnsemble {
    std::vector<ComponentMap> runs;
    ResampleScheme scheme = ResampleScheme::SEED_ONLY;
    std::vector<std::uint64_t> seeds;
};

// R independent decompositions of one stack.  SEED_ONLY re-runs ICA from a
// fresh starting point; WINDOW_BOOTSTRAP also resamples the windows with
// replacement.  Run r uses seed root_seed + r.
BootstrapEnsemble run_ensemble(const PseudoSubjectStack& stack, int r_runs, int k,
                               int subject_rank, int group_rank, std::uint64_t root_seed,
                               ResampleScheme scheme = ResampleScheme::SEED_ONLY,
                               double tol = 1e-6, int max_iter = 4000);

// Cluster stability index: 1 - (intra-cluster variance / variance of the
// full stacked component set), both as mean squared deviation from the
// mean.  Callers pass members already sign-aligned to their cluster's
// centroid member.  Throws ZeroTotalVariance when the full set has no
// spread.
double iq_score(const std::vector<Eigen::VectorXd>& members,
                const std::vector<Eigen::VectorXd>& full_stack);

struct ConsensusResult {
    ComponentMap map;                     // centroid members, ordered by iq desc
    std::vector<std::vector<int>> clusters;  // member row indices into the stack
    std::vector<int> cluster_sizes;
    bool imbalance_warning = false;       // some cluster deviates from R by > 20%
};

// Average-linkage agglomeration of all K*R component rows under the
// distance 1 - |corr|, cut at K clusters.  Each cluster is represented by
// its centroid member (maximum mean |corr| to its peers).  Components with
// iq below 0.8 keep their label but are flagged in `noisy`.
struct IcassoOptions {
    int r_runs = 50;
    ResampleScheme scheme = ResampleScheme::SEED_ONLY;
    double tol = 1e-6;
    int max_iter = 4000;
    double noisy_iq = 0.8;
};
ConsensusResult consensus_from_runs(const std::vector<ComponentMap>& runs,
                                    double noisy_iq = 0.8);
ConsensusResult icasso_consensus(const PseudoSubjectStack& stack, int k,
                                 int subject_rank, int group_rank,
                                 std::uint64_t root_seed, const IcassoOptions& opt);

std::vector<int> noisy_components(const ComponentMap& map, double threshold = 0.8);

// Hungarian pairing of two component maps on the absolute correlation of
// loading rows.  permutation[i] is the row of b matched to row i of a;
// signs[i] is the sign of the raw correlation (+1 on exact zero).
// Throws ZeroVarianceComponent when a loading row is constant.
struct MatchResult {
    std::vector<int> permutation;
    std::vector<int> signs;
    Eigen::VectorXd matched_abs_corr;
    double mean_abs_corr = 0.0;
};
MatchResult match_components(const ComponentMap& a, const ComponentMap& b);

// Reorders and sign-flips b so that row i pairs with row i of a and all
// matched correlations are >= 0.  Idempotent once aligned.
ComponentMap align_signs(const ComponentMap& a, const ComponentMap& b,
                         const MatchResult& match);

// Selects the component with the strongest mean loading over the reference
// assets as the Risk-On axis and flips it positive on that reference.  The
// Risk-Off axis is either the strongest component on an explicit defensive
// reference or, failing that, the remaining component most opposed to the
// Risk-On reference; it is flipped negative on the Risk-On reference.
struct CanonicalMap {
    ComponentMap map;
    int risk_on = -1;
    int risk_off = -1;
};
CanonicalMap canonical_polarity(const ComponentMap& map,
                                const std::vector<std::string>& reference_assets,
                                const std::vector<std::string>& riskoff_reference = {});

// Mean of already-aligned maps plus the median and interquartile range of
// each component's iq across them (linear-interpolation quantiles).
struct EraAggregate {
    std::string label;
    ComponentMap mean_map;
    Eigen::VectorXd iq_median;  // empty when no input carries iq
    Eigen::VectorXd iq_iqr;
    int n_maps = 0;
};
EraAggregate aggregate_era(const std::vector<ComponentMap>& aligned_maps,
                           const std::string& label);

// Fraction of entries strictly above the threshold.
double occurrence_rate(const std::vector<double>& iq_series, double threshold = 0.9);

struct CrossEraSimilarity {
    std::vector<std::string> labels;
    Eigen::MatrixXd mean_abs_corr;  // E x E, unit diagonal
    // per ordered pair "A|B": matched |corr| per component of A
    std::map<std::string, Eigen::VectorXd> per_component;
};
CrossEraSimilarity cross_era_similarity(const std::vector<EraAggregate>& aggregates);

}  // namespace fincon
