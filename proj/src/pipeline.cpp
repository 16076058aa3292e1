#include "fincon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "fincon/csv.hpp"
#include "fincon/dmnc.hpp"
#include "fincon/errors.hpp"
#include "fincon/factors.hpp"
#include "fincon/graph.hpp"
#include "fincon/group_ica.hpp"
#include "fincon/market_data.hpp"
#include "fincon/parallel.hpp"
#include "fincon/registry.hpp"
#include "fincon/rng.hpp"
#include "fincon/stats.hpp"
#include "fincon/synth.hpp"

namespace fincon {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fit_id(const std::string& era, int w) {
    return era + "_w" + std::to_string(w);
}

PipelineContext make_context(const RunConfig& cfg) {
    PipelineContext ctx;
    ctx.cfg = cfg;
    ctx.outdir = cfg.require_str("outdir");
    ctx.root_seed = cfg.get_seed("seed", 42);
    if (const char* env = std::getenv("CONNECTOME_SEED")) {
        try {
            std::size_t pos = 0;
            ctx.root_seed = std::stoull(env, &pos);
            if (pos != std::string(env).size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(std::string("CONNECTOME_SEED must be an unsigned integer, got '") +
                              env + "'");
        }
    }
    set_threads(static_cast<int>(cfg.get_long("threads", 0)));
    return ctx;
}

namespace {

std::vector<int> config_windows(const RunConfig& cfg) {
    std::vector<int> out;
    for (const auto& s : cfg.get_list("windows")) out.push_back(std::stoi(s));
    if (out.empty()) out = {60, 90, 120};
    return out;
}

std::vector<EraSpec> config_eras(const RunConfig& cfg) {
    const std::string text = cfg.get_str("eras", "");
    return text.empty() ? default_eras() : parse_eras(text);
}

void write_json(const fs::path& path, const json& j) {
    write_lines(path, {j.dump(2)});
}

json read_json(const fs::path& path) {
    std::string text;
    for (const auto& l : read_lines(path)) text += l + "\n";
    return json::parse(text);
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(vector_to_json(m.row(i).transpose()));
    return rows;
}

constexpr const char* kGlobalEra = "ALL";

}  // namespace

void stage_synth(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const int n_assets = static_cast<int>(cfg.get_long("synth_assets", 20));
    const long days = cfg.get_long("synth_days", 700);
    const int k = static_cast<int>(cfg.get_long("synth_k", 4));
    const SourceDist dist =
        source_dist_from_string(cfg.get_str("synth_dist", "LAPLACE"));
    const double noise = cfg.get_double("synth_noise", 0.1);
    const double scale = cfg.get_double("synth_scale", 0.01);

    const SyntheticScenario sc = gen_scenario(n_assets, days, k, dist, noise, scale,
                                              derive_seed(ctx.root_seed, "synth"));

    const fs::path dir = ctx.outdir / "synth";
    fs::create_directories(dir);
    std::vector<std::string> lines = {"date,ticker,adj_close,close,volume"};
    for (const auto& b : sc.bars)
        lines.push_back(to_string(b.date) + "," + b.ticker + "," +
                        format_double(b.adj_close) + "," + format_double(b.close) + "," +
                        format_double(b.volume));
    write_lines(dir / "bars.csv", lines);
    write_panel_csv(dir / "panel_returns.csv", sc.returns);
    write_matrix_csv(dir / "truth_mixing.csv", sc.model.mixing);
    write_matrix_csv(dir / "truth_sources.csv", sc.model.sources);

    json summary;
    summary["n_assets"] = n_assets;
    summary["days"] = days;
    summary["k"] = k;
    summary["dist"] = to_string(dist);
    summary["noise"] = noise;
    summary["scale"] = scale;
    write_json(dir / "summary.json", summary);
}

void stage_features(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path input = cfg.require_str("input");
    const fs::path dir = ctx.outdir / "features";
    fs::create_directories(dir);

    const auto bars = load_bars(input);
    const PivotResult pivot = pivot_bars(bars);
    const AssetPanel prices = clean_panel(pivot.adj_close);
    const AssetPanel volume = clean_panel(pivot.volume);

    const AssetPanel daily = build_feature_panel(prices, volume, FeatureKind::RAW_LOGRET, 1);
    write_panel_csv(dir / "panel_RAW_LOGRET_w1.csv", daily);

    for (int w : config_windows(cfg)) {
        const AssetPanel vwap = build_feature_panel(prices, volume, FeatureKind::VWAP, w);
        write_panel_csv(dir / ("panel_VWAP_w" + std::to_string(w) + ".csv"), vwap);
        const AssetPanel lr = build_feature_panel(prices, volume, FeatureKind::LOGRET, w);
        write_panel_csv(dir / ("panel_LOGRET_w" + std::to_string(w) + ".csv"), lr);
    }

    json summary;
    summary["input"] = input.string();
    summary["n_dates"] = prices.values.rows();
    summary["n_assets"] = prices.values.cols();
    summary["windows"] = config_windows(cfg);
    write_json(dir / "summary.json", summary);
}

namespace {

struct FitRecord {
    std::string era;
    int w = 0;
    ConsensusResult consensus;
    ComponentMap aligned_map;  // aligned to the era's first-window fit
    std::uint64_t seed = 0;
    std::size_t n_windows = 0;
};

ActivationMatrix consensus_activations(const ComponentMap& map,
                                       const PseudoSubjectStack& stack) {
    ActivationMatrix acts;
    const long n_win = static_cast<long>(stack.windows.size());
    acts.values.resize(map.loadings.rows(), n_win);
    acts.component_order = map.component_order;
    acts.window_labels = stack.window_labels;
#pragma omp parallel for schedule(static)
    for (long t = 0; t < n_win; ++t)
        acts.values.col(t) = back_reconstruct(map, stack.windows[t]).activation;
    return acts;
}

}  // namespace

void stage_gica(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path features = ctx.outdir / "features";
    const fs::path dir = ctx.outdir / "gica";
    fs::create_directories(dir);

    const FeatureKind feature =
        feature_kind_from_string(cfg.get_str("feature", "LOGRET"));
    const std::vector<int> windows = config_windows(cfg);
    const int k_ica = static_cast<int>(cfg.get_long("k_ica", 6));
    const int subject_rank = static_cast<int>(cfg.get_long("subject_rank", 0));
    const int group_rank = static_cast<int>(cfg.get_long("group_rank", 0));
    const int stride = static_cast<int>(cfg.get_long("stride", 1));
    IcassoOptions opt;
    opt.r_runs = static_cast<int>(cfg.get_long("r_runs", 50));
    opt.scheme = resample_scheme_from_string(cfg.get_str("resample", "SEED_ONLY"));
    opt.tol = cfg.get_double("tol", 1e-6);
    opt.max_iter = static_cast<int>(cfg.get_long("max_iter", 4000));
    const double iq_threshold = cfg.get_double("iq_threshold", 0.9);

    const auto eras = config_eras(cfg);
    std::vector<std::string> era_labels;
    for (const auto& e : eras) era_labels.push_back(e.label);
    era_labels.push_back(kGlobalEra);

    std::map<std::string, std::vector<FitRecord>> fits_by_era;

    for (int w : windows) {
        const AssetPanel panel = read_panel_csv(
            features / ("panel_" + to_string(feature) + "_w" + std::to_string(w) + ".csv"));
        std::vector<EraPanel> segments = segment_eras(panel, eras);
        EraPanel whole;
        whole.label = kGlobalEra;
        whole.panel = panel;
        segments.push_back(std::move(whole));

        for (const auto& seg : segments) {
            const int sr = subject_rank > 0 ? subject_rank : k_ica;
            const int gr = group_rank > 0 ? group_rank : k_ica;
            const PseudoSubjectStack stack = build_pseudo_subjects(seg.panel, w, stride);
            const std::uint64_t seed =
                derive_seed(ctx.root_seed, "gica:" + seg.label + ":w", w);
            ConsensusResult consensus =
                icasso_consensus(stack, k_ica, sr, gr, seed, opt);
            consensus.map.window_len = w;

            const ActivationMatrix acts = consensus_activations(consensus.map, stack);
            const std::string id = fit_id(seg.label, w);
            write_component_map(dir / ("map_" + id + ".csv"), consensus.map);
            write_activations(dir / ("act_" + id + ".csv"), acts);

            FitRecord rec;
            rec.era = seg.label;
            rec.w = w;
            rec.seed = seed;
            rec.n_windows = stack.windows.size();
            rec.consensus = std::move(consensus);
            fits_by_era[seg.label].push_back(std::move(rec));
        }
    }

    // Align each era's fits across window lengths to the first-window fit,
    // then average into the era aggregate.  The fit summary records the
    // alignment so downstream readers can trace component identity.
    json fits_json = json::array();
    std::map<std::string, EraAggregate> aggregates;
    for (auto& [era, recs] : fits_by_era) {
        std::vector<ComponentMap> aligned;
        for (auto& rec : recs) {
            json jalign;
            if (&rec == &recs.front()) {
                rec.aligned_map = rec.consensus.map;
                std::vector<int> ident(k_ica);
                for (int i = 0; i < k_ica; ++i) ident[i] = i;
                jalign["permutation"] = ident;
                jalign["signs"] = std::vector<int>(k_ica, 1);
                jalign["matched_abs_corr"] =
                    vector_to_json(Eigen::VectorXd::Ones(k_ica));
                jalign["mean_abs_corr"] = 1.0;
            } else {
                const MatchResult m =
                    match_components(recs.front().consensus.map, rec.consensus.map);
                rec.aligned_map = align_signs(recs.front().consensus.map,
                                              rec.consensus.map, m);
                jalign["permutation"] = m.permutation;
                jalign["signs"] = m.signs;
                jalign["matched_abs_corr"] = vector_to_json(m.matched_abs_corr);
                jalign["mean_abs_corr"] = m.mean_abs_corr;
            }
            aligned.push_back(rec.aligned_map);

            json jf;
            jf["era"] = rec.era;
            jf["w"] = rec.w;
            jf["iq"] = vector_to_json(rec.consensus.map.iq);
            jf["cluster_sizes"] = rec.consensus.cluster_sizes;
            jf["imbalance_warning"] = rec.consensus.imbalance_warning;
            jf["noisy_components"] = noisy_components(rec.consensus.map, opt.noisy_iq);
            jf["n_windows"] = rec.n_windows;
            jf["seed"] = rec.seed;
            jf["alignment"] = jalign;
            fits_json.push_back(jf);
        }
        aggregates[era] = aggregate_era(aligned, era);
    }

    // Canonical polarity per aggregate; reference defaults to every asset.
    std::vector<std::string> riskon_ref = cfg.get_list("riskon_reference");
    const std::vector<std::string> riskoff_ref = cfg.get_list("riskoff_reference");
    json canonical_json;
    for (auto& [era, agg] : aggregates) {
        auto ref = riskon_ref.empty() ? agg.mean_map.asset_order : riskon_ref;
        const CanonicalMap canon = canonical_polarity(agg.mean_map, ref, riskoff_ref);
        agg.mean_map = canon.map;
        write_component_map(ctx.outdir / "gica" / ("aggregate_" + era + ".csv"),
                            canon.map);
        json jc;
        jc["risk_on"] = canon.risk_on;
        jc["risk_off"] = canon.risk_off;
        jc["n_maps"] = agg.n_maps;
        if (agg.iq_median.size() > 0) {
            jc["iq_median"] = vector_to_json(agg.iq_median);
            jc["iq_iqr"] = vector_to_json(agg.iq_iqr);
        }
        canonical_json[era] = jc;
    }

    // Cross-era table over the real eras (the whole-sample fit stays out).
    std::vector<EraAggregate> era_aggs;
    for (const auto& e : eras) era_aggs.push_back(aggregates.at(e.label));
    json cross_json;
    if (era_aggs.size() >= 1) {
        const CrossEraSimilarity sim = cross_era_similarity(era_aggs);
        cross_json["labels"] = sim.labels;
        cross_json["mean_abs_corr"] = matrix_to_json(sim.mean_abs_corr);
        json per_comp;
        for (const auto& [pair, v] : sim.per_component) per_comp[pair] = vector_to_json(v);
        cross_json["per_component"] = per_comp;
    }

    // Occurrence: every fit's iq lands on the component of the whole-sample
    // aggregate it is matched to (fit -> era aggregate -> whole-sample).
    const EraAggregate& global_agg = aggregates.at(kGlobalEra);
    const int k = global_agg.mean_map.k_ica;
    std::vector<std::vector<double>> iq_by_global(k);
    for (const auto& [era, recs] : fits_by_era) {
        const MatchResult to_global =
            match_components(global_agg.mean_map, aggregates.at(era).mean_map);
        for (const auto& rec : recs) {
            // rec.aligned_map rows already correspond to era aggregate rows
            for (int g = 0; g < k; ++g) {
                const int era_row = to_global.permutation[g];
                if (rec.aligned_map.iq.size() > era_row)
                    iq_by_global[g].push_back(rec.aligned_map.iq(era_row));
            }
        }
    }
    json occ;
    occ["components"] = default_component_labels(k);
    occ["threshold"] = iq_threshold;
    json rates = json::array();
    for (int g = 0; g < k; ++g)
        rates.push_back(iq_by_global[g].empty()
                            ? 0.0
                            : occurrence_rate(iq_by_global[g], iq_threshold));
    occ["rates"] = rates;

    json summary;
    summary["feature"] = to_string(feature);
    summary["windows"] = windows;
    summary["eras"] = era_labels;
    summary["k_ica"] = k_ica;
    summary["r_runs"] = opt.r_runs;
    summary["resample"] = to_string(opt.scheme);
    summary["fits"] = fits_json;
    summary["canonical"] = canonical_json;
    summary["cross_era"] = cross_json;
    summary["occurrence"] = occ;
    write_json(dir / "summary.json", summary);
}

void stage_factors(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path gica = ctx.outdir / "gica";
    const fs::path dir = ctx.outdir / "factors";
    fs::create_directories(dir);

    const std::string era = cfg.get_str("factor_era", kGlobalEra);
    const json gsum = read_json(gica / "summary.json");
    if (!gsum.at("canonical").contains(era))
        throw ConfigError("factors: no aggregate for era '" + era + "'");
    const int risk_on = gsum.at("canonical").at(era).at("risk_on").get<int>();
    const int risk_off = gsum.at("canonical").at(era).at("risk_off").get<int>();
    if (risk_on < 0 || risk_off < 0)
        throw ConfigError("factors: era '" + era +
                          "' has no Risk-On/Risk-Off pair (need k_ica >= 2)");

    const ComponentMap map = read_component_map(gica / ("aggregate_" + era + ".csv"));
    const AssetPanel returns =
        read_panel_csv(ctx.outdir / "features" / "panel_RAW_LOGRET_w1.csv");
    if (returns.assets != map.asset_order)
        throw AssetOrderMismatch("factors: return panel and component map disagree");

    Eigen::VectorXd w_on = map.loadings.row(risk_on).transpose();
    Eigen::VectorXd w_off = map.loadings.row(risk_off).transpose();
    // Aggregated rows are means of unit vectors; restore unit scale so the
    // index exponent stays comparable across configurations.
    if (w_on.norm() > 0) w_on /= w_on.norm();
    if (w_off.norm() > 0) w_off /= w_off.norm();

    const int rho_window = static_cast<int>(cfg.get_long("rho_window", 252));
    const FactorEngineResult res = run_factor_engine(returns, w_on, w_off, rho_window);

    write_factor_csv(dir / "factors.csv", res.series);
    write_risk_shift_csv(dir / "risk_shift.csv", res.shift);
    json summary;
    summary["factor_era"] = era;
    summary["risk_on"] = risk_on;
    summary["risk_off"] = risk_off;
    summary["rho_window"] = rho_window;
    summary["amplitude_iqr"] = res.amplitude;
    summary["n_dates"] = res.series.dates.size();
    write_json(dir / "summary.json", summary);
}

namespace {

void append_metric(std::vector<std::string>& lines, const std::string& timestamp,
                   const std::string& metric, double value) {
    lines.push_back(timestamp + "," + metric + "," + format_cell(value));
}

}  // namespace

void stage_dmnc(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path dir = ctx.outdir / "dmnc";
    fs::create_directories(dir);

    const std::string source = cfg.get_str("dmnc_source", "activations");
    const int delta = static_cast<int>(cfg.get_long("delta", 45));
    const int stride = static_cast<int>(cfg.get_long("dmnc_stride", 1));
    const WindowFn fn = window_fn_from_string(cfg.get_str("window_fn", "RECT"));
    const double sigma = cfg.get_double("gauss_sigma", delta / 6.0);

    DmncTensor tensor;
    if (source == "activations") {
        const std::string era = cfg.get_str("dmnc_era", kGlobalEra);
        const int w = static_cast<int>(
            cfg.get_long("dmnc_w", config_windows(cfg).front()));
        ActivationMatrix acts = read_activations(
            ctx.outdir / "gica" / ("act_" + fit_id(era, w) + ".csv"));
        const std::string smooth = cfg.get_str("smooth_kind", "NONE");
        if (smooth == "MOVING_AVG")
            acts = smooth_activations(acts, SmoothKind::MOVING_AVG,
                                      cfg.get_double("smooth_param", 1));
        else if (smooth == "EXP")
            acts = smooth_activations(acts, SmoothKind::EXP,
                                      cfg.get_double("smooth_param", 1.0));
        else if (smooth != "NONE")
            throw ConfigError("dmnc: unknown smooth_kind '" + smooth + "'");
        if (cfg.get_bool("zscore_activations", true))
            acts = smooth_activations(acts, SmoothKind::ZSCORE, 0.0);
        tensor = build_dmnc(acts, delta, stride, fn, sigma);
    } else if (source == "nodes") {
        // Node-level variant: per-window asset correlation matrices laid
        // out by the factor coordinates of each window.
        const int w = static_cast<int>(
            cfg.get_long("dmnc_w", config_windows(cfg).front()));
        const FeatureKind feature =
            feature_kind_from_string(cfg.get_str("feature", "LOGRET"));
        const AssetPanel panel = read_panel_csv(
            ctx.outdir / "features" /
            ("panel_" + to_string(feature) + "_w" + std::to_string(w) + ".csv"));
        const PseudoSubjectStack stack = build_pseudo_subjects(panel, w, stride);
        const FactorSeries series =
            read_factor_csv(ctx.outdir / "factors" / "factors.csv");
        std::map<std::string, std::pair<double, double>> by_date;
        for (std::size_t i = 0; i < series.dates.size(); ++i)
            by_date[to_string(series.dates[i])] = {series.z_on[i], series.z_off[i]};
        std::vector<double> z_on, z_off;
        for (const auto& label : stack.window_labels) {
            const auto it = by_date.find(label);
            if (it == by_date.end())
                throw InsufficientData("dmnc: no factor coordinates for window " + label);
            z_on.push_back(it->second.first);
            z_off.push_back(it->second.second);
        }
        tensor = build_node_dmnc(stack, order_windows(z_on, z_off));
    } else {
        throw ConfigError("dmnc: unknown source '" + source + "'");
    }

    write_tensor(dir / "tensor", tensor);

    const long L = tensor.size();
    const int k = tensor.k();
    const long dim = static_cast<long>(k) * (k - 1) / 2;
    long base_start = cfg.get_long("baseline_start", 0);
    long base_end = cfg.get_long("baseline_end", 0);
    if (base_end <= 0) base_end = std::min<long>(L, std::max<long>(dim + 2, L / 4));
    const int tau = static_cast<int>(cfg.get_long("svol_tau", 20));

    const bool abs_weights = cfg.get_bool("abs_weights", false);
    std::vector<std::string> metrics = {"timestamp,metric,value"};
    std::vector<double> eff(L), mod(L);
#pragma omp parallel for schedule(static)
    for (long t = 0; t < L; ++t) {
        eff[t] = global_efficiency(tensor.slices[t], abs_weights);
        try {
            mod[t] = modularity(tensor.slices[t],
                                detect_communities(tensor.slices[t], abs_weights),
                                abs_weights);
        } catch (const NoPositiveEdges&) {
            mod[t] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    for (long t = 0; t < L; ++t) {
        append_metric(metrics, tensor.timestamps[t], "global_efficiency", eff[t]);
        append_metric(metrics, tensor.timestamps[t], "modularity", mod[t]);
    }

    const std::vector<double> jump = similarity_jump(tensor);
    for (long t = 1; t < L; ++t)
        append_metric(metrics, tensor.timestamps[t], "similarity_jump", jump[t - 1]);

    const std::vector<double> dist = distance_to_baseline(tensor, base_start, base_end);
    for (long t = 0; t < L; ++t)
        append_metric(metrics, tensor.timestamps[t], "baseline_distance", dist[t]);

    const VolatilitySeries svol = structural_volatility(tensor, tau);
    for (std::size_t i = 0; i < svol.values.size(); ++i)
        append_metric(metrics, tensor.timestamps[svol.start + static_cast<long>(i)],
                      "structural_volatility", svol.values[i]);
    write_lines(dir / "metrics.csv", metrics);

    const EdgeZScores ez = edge_zscores(tensor);
    std::vector<std::string> zlines;
    std::string zheader = "timestamp";
    for (const auto& [i, j] : ez.edges)
        zheader += ",e" + std::to_string(i) + "_" + std::to_string(j);
    zlines.push_back(zheader);
    for (long t = 0; t < L; ++t) {
        std::string row = tensor.timestamps[t];
        for (Eigen::Index e = 0; e < ez.z.cols(); ++e)
            row += "," + format_cell(ez.z(t, e));
        zlines.push_back(std::move(row));
    }
    write_lines(dir / "edge_z.csv", zlines);

    double svol_mean = 0.0, svol_max = 0.0;
    for (double v : svol.values) {
        svol_mean += v;
        svol_max = std::max(svol_max, v);
    }
    if (!svol.values.empty()) svol_mean /= static_cast<double>(svol.values.size());

    json summary;
    summary["source"] = source;
    summary["delta"] = delta;
    summary["stride"] = stride;
    summary["window_fn"] = to_string(fn);
    summary["n_slices"] = L;
    summary["k"] = k;
    summary["baseline"] = {base_start, base_end};
    summary["svol_tau"] = tau;
    summary["svol_mean"] = svol_mean;
    summary["svol_max"] = svol_max;
    summary["mean_efficiency"] =
        Eigen::Map<const Eigen::VectorXd>(eff.data(), L).mean();
    write_json(dir / "summary.json", summary);
}

void stage_regimes(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path dir = ctx.outdir / "regimes";
    fs::create_directories(dir);

    const DmncTensor tensor = read_tensor(ctx.outdir / "dmnc" / "tensor");
    const int k = static_cast<int>(cfg.get_long("regimes_k", 4));
    const int restarts = static_cast<int>(cfg.get_long("restarts", 8));
    const int dims = static_cast<int>(cfg.get_long("embed_dims", 2));

    const RegimeLabeling labeling =
        cluster_regimes(tensor, k, derive_seed(ctx.root_seed, "regimes"), restarts);

    std::vector<Eigen::VectorXd> vs(tensor.size());
    for (long t = 0; t < tensor.size(); ++t) vs[t] = vectorize_upper(tensor.slices[t]);
    const Embedding emb = pca_embed(vs, dims);

    std::vector<std::string> lab_lines = {"timestamp,label"};
    for (long t = 0; t < tensor.size(); ++t)
        lab_lines.push_back(labeling.timestamps[t] + "," +
                            std::to_string(labeling.labels[t]));
    write_lines(dir / "labels.csv", lab_lines);

    std::vector<std::string> emb_lines;
    std::string header = "timestamp";
    for (int d = 0; d < dims; ++d) header += ",pc" + std::to_string(d + 1);
    header += ",label";
    emb_lines.push_back(header);
    for (long t = 0; t < tensor.size(); ++t) {
        std::string row = labeling.timestamps[t];
        for (int d = 0; d < dims; ++d) row += "," + format_cell(emb.coords(t, d));
        row += "," + std::to_string(labeling.labels[t]);
        emb_lines.push_back(std::move(row));
    }
    write_lines(dir / "embedding.csv", emb_lines);
    write_matrix_csv(dir / "centroids.csv", labeling.centroids);

    std::vector<long> counts(k, 0);
    for (int label : labeling.labels) ++counts[label];
    json summary;
    summary["k"] = k;
    summary["restarts"] = restarts;
    summary["inertia"] = labeling.inertia;
    summary["counts"] = counts;
    summary["embed_dims"] = dims;
    summary["explained"] = vector_to_json(emb.explained);
    write_json(dir / "summary.json", summary);
}

void stage_report(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path dir = ctx.outdir / "report";
    fs::create_directories(dir);

    json report;
    report["seed"] = ctx.root_seed;
    json stages;

    const json gsum = read_json(ctx.outdir / "gica" / "summary.json");
    stages["gica"] = true;
    report["cross_era"] = gsum.at("cross_era");
    report["occurrence"] = gsum.at("occurrence");
    report["canonical"] = gsum.at("canonical");

    // Cross-era CSV: era x era mean matched |corr|.
    {
        const auto labels = gsum.at("cross_era").at("labels").get<std::vector<std::string>>();
        const auto matrix = gsum.at("cross_era").at("mean_abs_corr");
        std::vector<std::string> lines;
        std::string header = "era";
        for (const auto& l : labels) header += "," + l;
        lines.push_back(header);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::string row = labels[i];
            for (std::size_t j = 0; j < labels.size(); ++j)
                row += "," + format_cell(matrix.at(i).at(j).get<double>());
            lines.push_back(std::move(row));
        }
        write_lines(dir / "cross_era.csv", lines);
    }
    {
        const auto comps = gsum.at("occurrence").at("components").get<std::vector<std::string>>();
        const auto rates = gsum.at("occurrence").at("rates");
        std::vector<std::string> lines = {"component,occurrence_rate"};
        for (std::size_t i = 0; i < comps.size(); ++i)
            lines.push_back(comps[i] + "," + format_cell(rates.at(i).get<double>()));
        write_lines(dir / "occurrence.csv", lines);
    }

    const fs::path fsum_path = ctx.outdir / "factors" / "summary.json";
    if (fs::exists(fsum_path)) {
        stages["factors"] = true;
        report["factors"] = read_json(fsum_path);
        const RiskShiftCurve shift =
            read_risk_shift_csv(ctx.outdir / "factors" / "risk_shift.csv");
        long defined = 0;
        for (double v : shift.rho)
            if (!std::isnan(v)) ++defined;
        report["factors"]["rho_defined_points"] = defined;
    } else {
        stages["factors"] = false;
    }

    const fs::path dsum_path = ctx.outdir / "dmnc" / "summary.json";
    if (fs::exists(dsum_path)) {
        stages["dmnc"] = true;
        report["dmnc"] = read_json(dsum_path);
    } else {
        stages["dmnc"] = false;
    }

    const fs::path rsum_path = ctx.outdir / "regimes" / "summary.json";
    if (fs::exists(rsum_path)) {
        stages["regimes"] = true;
        report["regimes"] = read_json(rsum_path);
        const auto lines = read_lines(ctx.outdir / "regimes" / "labels.csv");
        std::vector<std::string> timeline = {"timestamp,regime"};
        for (std::size_t i = 1; i < lines.size(); ++i)
            if (!lines[i].empty()) timeline.push_back(lines[i]);
        write_lines(dir / "timeline.csv", timeline);
    } else {
        stages["regimes"] = false;
    }

    // Optional second-universe comparison.
    if (cfg.has("etf_gica_dir") && cfg.has("holdings_csv")) {
        const ComponentMap stock_map = read_component_map(
            ctx.outdir / "gica" / ("aggregate_" + std::string(kGlobalEra) + ".csv"));
        const ComponentMap etf_map = read_component_map(
            fs::path(cfg.require_str("etf_gica_dir")) /
            ("aggregate_" + std::string(kGlobalEra) + ".csv"));
        const Eigen::MatrixXd holdings = read_holdings_csv(
            cfg.require_str("holdings_csv"), stock_map.asset_order, etf_map.asset_order);
        const MatchResult overlap = structural_overlap(stock_map, etf_map, holdings);
        json jo;
        jo["matched_abs_corr"] = vector_to_json(overlap.matched_abs_corr);
        jo["mean_abs_corr"] = overlap.mean_abs_corr;
        if (cfg.has("etf_factors_dir")) {
            const FactorSeries a =
                read_factor_csv(ctx.outdir / "factors" / "factors.csv");
            const FactorSeries b = read_factor_csv(
                fs::path(cfg.require_str("etf_factors_dir")) / "factors.csv");
            const SynchronyResult sync = temporal_synchrony(a, b);
            jo["synchrony_on"] = sync.corr_on;
            jo["synchrony_off"] = sync.corr_off;
            jo["n_common"] = sync.n_common;
        }
        report["cross_brain"] = jo;
        stages["cross_brain"] = true;
    }

    report["stages"] = stages;
    write_json(dir / "report.json", report);
}

}  // namespace fincon
