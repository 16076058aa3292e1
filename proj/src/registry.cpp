#include "fincon/registry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fincon/assignment.hpp"
#include "fincon/errors.hpp"
#include "fincon/rng.hpp"
#include "fincon/stats.hpp"

namespace fincon {

std::string to_string(ResampleScheme s) {
    return s == ResampleScheme::SEED_ONLY ? "SEED_ONLY" : "WINDOW_BOOTSTRAP";
}

ResampleScheme resample_scheme_from_string(const std::string& s) {
    if (s == "SEED_ONLY") return ResampleScheme::SEED_ONLY;
    if (s == "WINDOW_BOOTSTRAP") return ResampleScheme::WINDOW_BOOTSTRAP;
    throw ConfigError("unknown resample scheme '" + s + "'");
}

BootstrapEnsemble run_ensemble(const PseudoSubjectStack& stack, int r_runs, int k,
                               int subject_rank, int group_rank, std::uint64_t root_seed,
                               ResampleScheme scheme, double tol, int max_iter) {
    if (r_runs < 1) throw Precondition("run_ensemble: need at least one run");
    BootstrapEnsemble ens;
    ens.scheme = scheme;
    ens.runs.resize(r_runs);
    ens.seeds.resize(r_runs);
    for (int r = 0; r < r_runs; ++r) ens.seeds[r] = root_seed + static_cast<std::uint64_t>(r);

    std::exception_ptr fail;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < r_runs; ++r) {
        try {
            PseudoSubjectStack input = stack;
            if (scheme == ResampleScheme::WINDOW_BOOTSTRAP) {
                Rng pick(mix_seed(ens.seeds[r]));
                const auto n = stack.windows.size();
                input.windows.clear();
                input.start_indices.clear();
                input.window_labels.clear();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ix = pick.index(n);
                    input.windows.push_back(stack.windows[ix]);
                    input.start_indices.push_back(stack.start_indices[ix]);
                    input.window_labels.push_back(stack.window_labels[ix]);
                }
            }
            ens.runs[r] = group_decompose(input, subject_rank, group_rank, k,
                                          ens.seeds[r], tol, max_iter)
                              .map;
        } catch (...) {
#pragma omp critical
            if (!fail) fail = std::current_exception();
        }
    }
    if (fail) std::rethrow_exception(fail);
    return ens;
}

namespace {

double vector_set_msd(const std::vector<Eigen::VectorXd>& vs) {
    if (vs.empty()) return 0.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(vs[0].size());
    for (const auto& v : vs) mean += v;
    mean /= static_cast<double>(vs.size());
    double acc = 0.0;
    for (const auto& v : vs) acc += (v - mean).squaredNorm();
    return acc / static_cast<double>(vs.size());
}

int centroid_member(const std::vector<Eigen::VectorXd>& members) {
    const int n = static_cast<int>(members.size());
    if (n == 1) return 0;
    int best = 0;
    double best_score = -1.0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double r = pearson(members[i], members[j]);
            acc += std::isnan(r) ? 0.0 : std::abs(r);
        }
        const double score = acc / (n - 1);
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

std::vector<Eigen::VectorXd> sign_align_to(const std::vector<Eigen::VectorXd>& members,
                                           const Eigen::VectorXd& anchor) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(members.size());
    for (const auto& m : members) {
        const double r = pearson(anchor, m);
        out.push_back((!std::isnan(r) && r < 0.0) ? Eigen::VectorXd(-m) : m);
    }
    return out;
}

}  // namespace

double iq_score(const std::vector<Eigen::VectorXd>& members,
                const std::vector<Eigen::VectorXd>& full_stack) {
    if (members.empty()) throw Precondition("iq_score: empty cluster");
    const double total = vector_set_msd(full_stack);
    if (total <= 0.0)
        throw ZeroTotalVariance("iq_score: stacked component set has zero variance");
    return 1.0 - vector_set_msd(members) / total;
}

ConsensusResult consensus_from_runs(const std::vector<ComponentMap>& runs,
                                    double noisy_iq) {
    if (runs.empty()) throw EmptyInput("consensus: no runs");
    const int r_runs = static_cast<int>(runs.size());
    const int k = static_cast<int>(runs[0].loadings.rows());
    const auto n_assets = runs[0].loadings.cols();
    for (const auto& run : runs)
        if (run.loadings.rows() != k || run.loadings.cols() != n_assets)
            throw DimensionMismatch("consensus: runs disagree on shape");

    // Stack all component rows; row r*k + i is component i of run r.
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(static_cast<std::size_t>(r_runs) * k);
    for (const auto& run : runs)
        for (int i = 0; i < k; ++i) rows.push_back(run.loadings.row(i).transpose());
    const int n = static_cast<int>(rows.size());

    // Average-linkage agglomeration under d = 1 - |corr|, Lance-Williams
    // updates, lowest-index pair on ties, cut at k clusters.
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double r = pearson(rows[i], rows[j]);
            const double dist = std::isnan(r) ? 1.0 : 1.0 - std::abs(r);
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    std::vector<std::vector<int>> clusters(n);
    for (int i = 0; i < n; ++i) clusters[i] = {i};
    Eigen::MatrixXd cd = d;  // inter-cluster distances for active slots
    std::vector<int> active(n);
    std::iota(active.begin(), active.end(), 0);

    while (static_cast<int>(active.size()) > k) {
        int best_a = 0, best_b = 1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = a + 1; b < active.size(); ++b)
                if (cd(active[a], active[b]) < best_d) {
                    best_d = cd(active[a], active[b]);
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                }
        const int ia = active[best_a];
        const int ib = active[best_b];
        const double na = static_cast<double>(clusters[ia].size());
        const double nb = static_cast<double>(clusters[ib].size());
        for (int slot : active) {
            if (slot == ia || slot == ib) continue;
            const double merged = (na * cd(ia, slot) + nb * cd(ib, slot)) / (na + nb);
            cd(ia, slot) = merged;
            cd(slot, ia) = merged;
        }
        clusters[ia].insert(clusters[ia].end(), clusters[ib].begin(), clusters[ib].end());
        clusters[ib].clear();
        active.erase(active.begin() + best_b);
    }

    // Sign-align every cluster to its centroid member, then score.
    std::vector<Eigen::VectorXd> aligned_stack;
    aligned_stack.reserve(n);
    struct Cand {
        double iq;
        int min_member;
        Eigen::VectorXd row;
        std::vector<int> members;
    };
    std::vector<Cand> cands;
    std::vector<std::vector<Eigen::VectorXd>> aligned_clusters;
    for (int slot : active) {
        std::vector<Eigen::VectorXd> members;
        for (int ix : clusters[slot]) members.push_back(rows[ix]);
        const int c = centroid_member(members);
        auto aligned = sign_align_to(members, members[c]);
        aligned_clusters.push_back(aligned);
        for (const auto& v : aligned) aligned_stack.push_back(v);
        Cand cand;
        cand.min_member = *std::min_element(clusters[slot].begin(), clusters[slot].end());
        cand.row = members[c];
        cand.members = clusters[slot];
        std::sort(cand.members.begin(), cand.members.end());
        cand.iq = 0.0;
        cands.push_back(std::move(cand));
    }
    for (std::size_t c = 0; c < cands.size(); ++c)
        cands[c].iq = iq_score(aligned_clusters[c], aligned_stack);

    std::vector<int> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (cands[a].iq != cands[b].iq) return cands[a].iq > cands[b].iq;
        return cands[a].min_member < cands[b].min_member;
    });

    ConsensusResult out;
    out.map.loadings.resize(k, n_assets);
    out.map.iq.resize(k);
    out.map.asset_order = runs[0].asset_order;
    out.map.component_order = default_component_labels(k);
    out.map.window_len = runs[0].window_len;
    out.map.k_ica = k;
    for (int i = 0; i < k; ++i) {
        const Cand& c = cands[order[i]];
        out.map.loadings.row(i) = c.row.transpose();
        out.map.iq(i) = c.iq;
        out.clusters.push_back(c.members);
        out.cluster_sizes.push_back(static_cast<int>(c.members.size()));
        if (std::abs(static_cast<double>(c.members.size()) - r_runs) >
            0.2 * static_cast<double>(r_runs))
            out.imbalance_warning = true;
    }
    (void)noisy_iq;
    return out;
}

ConsensusResult icasso_consensus(const PseudoSubjectStack& stack, int k,
                                 int subject_rank, int group_rank,
                                 std::uint64_t root_seed, const IcassoOptions& opt) {
    const BootstrapEnsemble ens = run_ensemble(stack, opt.r_runs, k, subject_rank,
                                               group_rank, root_seed, opt.scheme,
                                               opt.tol, opt.max_iter);
    return consensus_from_runs(ens.runs, opt.noisy_iq);
}

std::vector<int> noisy_components(const ComponentMap& map, double threshold) {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < map.iq.size(); ++i)
        if (map.iq(i) < threshold) out.push_back(static_cast<int>(i));
    return out;
}

MatchResult match_components(const ComponentMap& a, const ComponentMap& b) {
    const auto k = a.loadings.rows();
    if (b.loadings.rows() != k || b.loadings.cols() != a.loadings.cols())
        throw DimensionMismatch("match_components: maps disagree on shape");

    Eigen::MatrixXd raw(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double r =
                pearson(a.loadings.row(i).transpose(), b.loadings.row(j).transpose());
            if (std::isnan(r))
                throw ZeroVarianceComponent(
                    "match_components: constant loading row (a row " + std::to_string(i) +
                    ", b row " + std::to_string(j) + ")");
            raw(i, j) = r;
        }
    }
    const Assignment asg = solve_assignment(raw.cwiseAbs());

    MatchResult out;
    out.permutation = asg.col_of_row;
    out.signs.resize(k);
    out.matched_abs_corr.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double r = raw(i, out.permutation[i]);
        out.signs[i] = r < 0.0 ? -1 : 1;
        out.matched_abs_corr(i) = std::abs(r);
    }
    out.mean_abs_corr = out.matched_abs_corr.mean();
    return out;
}

ComponentMap align_signs(const ComponentMap& a, const ComponentMap& b,
                         const MatchResult& match) {
    const auto k = a.loadings.rows();
    if (static_cast<Eigen::Index>(match.permutation.size()) != k)
        throw DimensionMismatch("align_signs: match arity differs from maps");
    ComponentMap out = b;
    out.component_order = a.component_order;
    if (b.iq.size() == k) out.iq.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const int src = match.permutation[i];
        out.loadings.row(i) = match.signs[i] * b.loadings.row(src);
        if (b.iq.size() == k) out.iq(i) = b.iq(src);
    }
    return out;
}

namespace {

double mean_reference_loading(const ComponentMap& map, Eigen::Index row,
                              const std::vector<Eigen::Index>& ref_cols) {
    double acc = 0.0;
    for (auto c : ref_cols) acc += map.loadings(row, c);
    return acc / static_cast<double>(ref_cols.size());
}

std::vector<Eigen::Index> reference_columns(const ComponentMap& map,
                                            const std::vector<std::string>& names) {
    std::vector<Eigen::Index> cols;
    for (const auto& name : names) {
        const auto it = std::find(map.asset_order.begin(), map.asset_order.end(), name);
        if (it != map.asset_order.end())
            cols.push_back(std::distance(map.asset_order.begin(), it));
    }
    return cols;
}

}  // namespace

CanonicalMap canonical_polarity(const ComponentMap& map,
                                const std::vector<std::string>& reference_assets,
                                const std::vector<std::string>& riskoff_reference) {
    const auto ref = reference_columns(map, reference_assets);
    if (ref.empty())
        throw EmptyReferenceSet("canonical_polarity: no reference asset found in map");

    CanonicalMap out;
    out.map = map;
    const auto k = map.loadings.rows();

    double best = -1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double m = std::abs(mean_reference_loading(map, i, ref));
        if (m > best) {
            best = m;
            out.risk_on = static_cast<int>(i);
        }
    }
    if (mean_reference_loading(out.map, out.risk_on, ref) < 0.0)
        out.map.loadings.row(out.risk_on) *= -1.0;

    if (k < 2) return out;

    const auto off_ref = reference_columns(map, riskoff_reference);
    if (!off_ref.empty()) {
        double best_off = -1.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (static_cast<int>(i) == out.risk_on) continue;
            const double m = std::abs(mean_reference_loading(out.map, i, off_ref));
            if (m > best_off) {
                best_off = m;
                out.risk_off = static_cast<int>(i);
            }
        }
    } else {
        // Fallback: the remaining component most opposed to the Risk-On
        // reference basket.
        double worst = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < k; ++i) {
            if (static_cast<int>(i) == out.risk_on) continue;
            const double m = mean_reference_loading(out.map, i, ref);
            if (m < worst) {
                worst = m;
                out.risk_off = static_cast<int>(i);
            }
        }
    }
    if (out.risk_off >= 0 && mean_reference_loading(out.map, out.risk_off, ref) > 0.0)
        out.map.loadings.row(out.risk_off) *= -1.0;
    return out;
}

EraAggregate aggregate_era(const std::vector<ComponentMap>& aligned_maps,
                           const std::string& label) {
    if (aligned_maps.empty()) throw EmptyInput("aggregate_era: no maps");
    const auto k = aligned_maps[0].loadings.rows();
    const auto n = aligned_maps[0].loadings.cols();
    for (const auto& m : aligned_maps)
        if (m.loadings.rows() != k || m.loadings.cols() != n)
            throw DimensionMismatch("aggregate_era: maps disagree on shape");

    EraAggregate out;
    out.label = label;
    out.n_maps = static_cast<int>(aligned_maps.size());
    out.mean_map = aligned_maps[0];
    out.mean_map.loadings = Eigen::MatrixXd::Zero(k, n);
    for (const auto& m : aligned_maps) out.mean_map.loadings += m.loadings;
    out.mean_map.loadings /= static_cast<double>(aligned_maps.size());

    bool have_iq = true;
    for (const auto& m : aligned_maps)
        if (m.iq.size() != k) have_iq = false;
    if (have_iq) {
        out.iq_median.resize(k);
        out.iq_iqr.resize(k);
        out.mean_map.iq.resize(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            std::vector<double> xs;
            for (const auto& m : aligned_maps) xs.push_back(m.iq(i));
            out.iq_median(i) = median(xs);
            out.iq_iqr(i) = iqr(xs);
            out.mean_map.iq(i) = out.iq_median(i);
        }
    } else {
        out.mean_map.iq.resize(0);
    }
    return out;
}

double occurrence_rate(const std::vector<double>& iq_series, double threshold) {
    if (iq_series.empty()) throw Precondition("occurrence_rate: empty series");
    long above = 0;
    for (double v : iq_series)
        if (v > threshold) ++above;
    return static_cast<double>(above) / static_cast<double>(iq_series.size());
}

CrossEraSimilarity cross_era_similarity(const std::vector<EraAggregate>& aggregates) {
    const auto e = static_cast<Eigen::Index>(aggregates.size());
    if (e == 0) throw EmptyInput("cross_era_similarity: no aggregates");
    CrossEraSimilarity out;
    out.mean_abs_corr = Eigen::MatrixXd::Identity(e, e);
    for (const auto& a : aggregates) out.labels.push_back(a.label);
    for (Eigen::Index i = 0; i < e; ++i) {
        for (Eigen::Index j = i + 1; j < e; ++j) {
            const MatchResult m =
                match_components(aggregates[i].mean_map, aggregates[j].mean_map);
            out.mean_abs_corr(i, j) = m.mean_abs_corr;
            out.mean_abs_corr(j, i) = m.mean_abs_corr;
            out.per_component[aggregates[i].label + "|" + aggregates[j].label] =
                m.matched_abs_corr;
        }
        const auto k = aggregates[i].mean_map.loadings.rows();
        out.per_component[aggregates[i].label + "|" + aggregates[i].label] =
            Eigen::VectorXd::Ones(k);
    }
    return out;
}

}  // namespace fincon
