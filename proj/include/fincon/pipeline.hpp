#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fincon/config.hpp"

namespace fincon {

// One batch run is a sequence of stages sharing an output directory; every
// stage writes only under <outdir>/<stage>/ and reads the files earlier
// stages produced, so any prefix of the pipeline can be re-run in place.
// All randomness derives from the root seed, which CONNECTOME_SEED
// (environment) overrides.
struct PipelineContext {
    RunConfig cfg;
    std::filesystem::path outdir;
    std::uint64_t root_seed = 42;
};

PipelineContext make_context(const RunConfig& cfg);

void stage_synth(const PipelineContext& ctx);
void stage_features(const PipelineContext& ctx);
void stage_gica(const PipelineContext& ctx);
void stage_factors(const PipelineContext& ctx);
void stage_dmnc(const PipelineContext& ctx);
void stage_regimes(const PipelineContext& ctx);
void stage_report(const PipelineContext& ctx);

// Stage id for a single era/window fit, used in gica file names.
std::string fit_id(const std::string& era, int w);

}  // namespace fincon
