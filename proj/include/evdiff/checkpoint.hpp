#pragma once

#include <string>
#include <utility>

#include "evdiff/autodiff.hpp"
#include "evdiff/codec.hpp"
#include "evdiff/denoiser.hpp"
#include "evdiff/tpr.hpp"

namespace evdiff {

// Everything needed to rebuild the sampling pipeline around saved weights.
struct CheckpointMeta {
    std::string toolkit_version;
    std::string rng_algorithm;
    DenoiserConfig denoiser;
    EventEncoderConfig encoder;  // meaningful only when denoiser.events
    CodecMode codec = CodecMode::avgpool2;
    int schedule_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int image_size = 32;
    int tpr_levels = 3;
    int tpr_bins = 2;
};

// Directory layout: manifest.json (version stamp, model config, parameter
// table name -> file -> dims) plus one .ten file per parameter.
void save_checkpoint(const std::string& dir, const ParamStore& store, const CheckpointMeta& meta);
std::pair<ParamStore, CheckpointMeta> load_checkpoint(const std::string& dir);

}  // namespace evdiff
