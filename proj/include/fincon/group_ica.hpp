#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fincon/market_data.hpp"

namespace fincon {

// Sliding windows over a feature panel, each window an assets x w_len slice.
// These play the role of subjects in a group decomposition.
struct PseudoSubjectStack {
    std::vector<Eigen::MatrixXd> windows;  // each N x w_len
    std::vector<long> start_indices;       // row offsets into the source panel
    std::vector<std::string> window_labels;  // window-end date (or index) per window
    std::vector<std::string> asset_order;
    int w_len = 0;
    int stride = 1;
};

// Component loading patterns over assets, one row per component.  iq is
// empty for a single decomposition and filled by the bootstrap consensus.
struct ComponentMap {
    Eigen::MatrixXd loadings;  // K x N, rows unit L2 norm
    std::vector<std::string> asset_order;
    std::vector<std::string> component_order;  // "IC1".."ICK"
    Eigen::VectorXd iq;        // per component, in [0, 1]; may be empty
    int window_len = 0;
    int k_ica = 0;
};

// Scalar activation per component per window.
struct ActivationMatrix {
    Eigen::MatrixXd values;  // K x T_w
    std::vector<std::string> component_order;
    std::vector<std::string> window_labels;  // one per column
};

std::vector<std::string> default_component_labels(int k);

// Full multivariate slices: window t covers panel rows
// [t*stride, t*stride + w).  Window count is floor((T-w)/stride)+1.
// Throws WindowTooLong when w exceeds the panel length.
PseudoSubjectStack build_pseudo_subjects(const AssetPanel& panel, int w, int stride = 1);

// Alternative stack where each window collapses to its single cross-asset
// summary row (w_len = 1).  Kept for comparison runs; the main pipeline
// uses the full slices.
PseudoSubjectStack build_summary_stack(const AssetPanel& panel, int w, int stride = 1);

struct GroupDecomposition {
    ComponentMap map;
    ActivationMatrix activations;
};

// Group decomposition of a window stack:
//   1. each window is PCA-whitened to subject_rank,
//   2. the reduced windows are concatenated along the sample axis,
//   3. the concatenation is PCA-whitened again to group_rank,
//   4. fixed-point ICA runs on the result,
//   5. mixing patterns are carried back to asset space through both
//      dewhitening transforms and averaged over windows.
// Loading rows are normalized to unit L2 norm; the activation of component
// k in window t is the mean of its back-reconstructed time course.
GroupDecomposition group_decompose(const PseudoSubjectStack& stack, int subject_rank,
                                   int group_rank, int k, std::uint64_t seed,
                                   double tol = 1e-6, int max_iter = 4000);

// Per-window time courses: loadings * window.  The overload taking an asset
// order enforces that it matches the map (AssetOrderMismatch otherwise).
struct BackReconstruction {
    Eigen::MatrixXd time_course;  // K x w_len
    Eigen::VectorXd activation;   // K, row means of time_course
};
BackReconstruction back_reconstruct(const ComponentMap& map, const Eigen::MatrixXd& window);
BackReconstruction back_reconstruct(const ComponentMap& map, const Eigen::MatrixXd& window,
                                    const std::vector<std::string>& window_asset_order);

// Headered CSV round trip.  Component maps: "component,iq,<asset>,...";
// activations: "window,<component>,...".
void write_component_map(const std::filesystem::path& path, const ComponentMap& map);
ComponentMap read_component_map(const std::filesystem::path& path);
void write_activations(const std::filesystem::path& path, const ActivationMatrix& acts);
ActivationMatrix read_activations(const std::filesystem::path& path);

}  // namespace fincon
