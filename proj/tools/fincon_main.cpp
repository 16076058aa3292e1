// Batch front end: each subcommand runs one pipeline stage against a flat
// key=value config, writing under <outdir>/<stage>/.  Exit codes: 0 ok,
// 1 computation failure, 2 configuration or input error.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fincon/config.hpp"
#include "fincon/errors.hpp"
#include "fincon/pipeline.hpp"

namespace {

struct StageArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string outdir;
    std::string input;
    std::string seed;
    std::string threads;
};

void add_common(CLI::App* sub, StageArgs& args, bool wants_input) {
    sub->add_option("-c,--config", args.config, "flat key=value config file");
    sub->add_option("-s,--set", args.sets,
                    "override a config key, e.g. --set k_ica=4 (repeatable)");
    sub->add_option("-o,--outdir", args.outdir, "output directory (config key: outdir)");
    sub->add_option("--seed", args.seed,
                    "root seed, default 42; CONNECTOME_SEED overrides both");
    sub->add_option("--threads", args.threads, "worker threads, 0 = all (default 0)");
    if (wants_input)
        sub->add_option("-i,--input", args.input, "daily bar CSV (config key: input)");
}

fincon::RunConfig build_config(const StageArgs& args) {
    fincon::RunConfig cfg;
    if (!args.config.empty()) cfg = fincon::RunConfig::from_file(args.config);
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw fincon::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.outdir.empty()) cfg.set("outdir", args.outdir);
    if (!args.input.empty()) cfg.set("input", args.input);
    if (!args.seed.empty()) cfg.set("seed", args.seed);
    if (!args.threads.empty()) cfg.set("threads", args.threads);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"financial connectome batch pipeline"};
    app.require_subcommand(1);

    StageArgs args;

    auto* synth = app.add_subcommand(
        "synth", "generate a synthetic bar tape from a planted mixing model");
    synth->footer(
        "config keys: synth_assets (20), synth_days (700), synth_k (4),\n"
        "synth_dist (LAPLACE|UNIFORM|SIGNED_SQUARE), synth_noise (0.1),\n"
        "synth_scale (0.01)");
    add_common(synth, args, false);

    auto* features = app.add_subcommand(
        "features", "clean daily bars into rolling VWAP / log-return panels");
    features->footer(
        "config keys: input, windows (60,90,120), eras\n"
        "(label:start:end,... default S1:2005..S5:2025)");
    add_common(features, args, true);

    auto* gica = app.add_subcommand(
        "gica", "group decomposition with bootstrap consensus per era and window");
    gica->footer(
        "config keys: feature (LOGRET), windows (60,90,120), k_ica (6),\n"
        "subject_rank/group_rank (k_ica), stride (1), r_runs (50),\n"
        "resample (SEED_ONLY|WINDOW_BOOTSTRAP), tol (1e-6), max_iter (4000),\n"
        "iq_threshold (0.9), eras, riskon_reference, riskoff_reference");
    add_common(gica, args, false);

    auto* factors = app.add_subcommand(
        "factors", "Risk-On / Risk-Off index levels and the rolling risk-shift curve");
    factors->footer("config keys: factor_era (ALL), rho_window (252)");
    add_common(factors, args, false);

    auto* dmnc = app.add_subcommand(
        "dmnc", "trailing correlation tensor over component activations plus network metrics");
    dmnc->footer(
        "config keys: dmnc_source (activations|nodes), dmnc_era (ALL), dmnc_w,\n"
        "delta (45), dmnc_stride (1), window_fn (RECT|GAUSSIAN), gauss_sigma\n"
        "(delta/6), smooth_kind (NONE|MOVING_AVG|EXP), smooth_param,\n"
        "zscore_activations (true), baseline_start/baseline_end, svol_tau (20),\n"
        "abs_weights (false: graph edges from positive correlations only)");
    add_common(dmnc, args, false);

    auto* regimes = app.add_subcommand(
        "regimes", "cluster tensor slices into market regimes and embed them");
    regimes->footer("config keys: regimes_k (4), restarts (8), embed_dims (2)");
    add_common(regimes, args, false);

    auto* report = app.add_subcommand(
        "report", "collate stage summaries into report.json and plot-ready CSVs");
    report->footer(
        "config keys: etf_gica_dir, holdings_csv, etf_factors_dir (optional\n"
        "cross-universe comparison)");
    add_common(report, args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const fincon::RunConfig cfg = build_config(args);
        const fincon::PipelineContext ctx = fincon::make_context(cfg);
        if (synth->parsed()) fincon::stage_synth(ctx);
        if (features->parsed()) fincon::stage_features(ctx);
        if (gica->parsed()) fincon::stage_gica(ctx);
        if (factors->parsed()) fincon::stage_factors(ctx);
        if (dmnc->parsed()) fincon::stage_dmnc(ctx);
        if (regimes->parsed()) fincon::stage_regimes(ctx);
        if (report->parsed()) fincon::stage_report(ctx);
        return 0;
    } catch (const fincon::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const fincon::ComputeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
