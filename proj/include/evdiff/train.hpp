#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evdiff/checkpoint.hpp"
#include "evdiff/codec.hpp"
#include "evdiff/dataset.hpp"
#include "evdiff/denoiser.hpp"
#include "evdiff/diffusion.hpp"
#include "evdiff/haze.hpp"
#include "evdiff/metrics.hpp"

namespace evdiff {

// lambda_pix * L1 + lambda_perc * feature MSE. The perceptual term is a
// proxy: mean squared distance between activations of a fixed random-weight
// two-layer conv net (seeded constant), not a pretrained feature extractor.
struct TotalLoss {
    double total = 0.0;
    double pix = 0.0;
    double perc = 0.0;
};

TotalLoss total_loss(const Image& out, const Image& target, double lambda_pix = 1.0,
                     double lambda_perc = 0.2);

struct TrainConfig {
    DatasetConfig data;
    int train_count = 64;
    int held_count = 16;

    DenoiserConfig model;
    CodecMode codec = CodecMode::avgpool2;

    int iterations = 500;
    int batch = 4;
    double lr = 5e-5;
    double weight_decay = 0.01;
    double lambda_pix = 1.0;
    double lambda_perc = 0.2;
    std::uint64_t seed = 0;
    int log_every = 100;       // cadence of full-sample monitoring
    int monitor_steps = 15;    // DDIM steps for the monitoring sample
    bool finetune_x0 = false;  // adds the image-space loss through a 1-step x0 estimate

    int schedule_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    // key=value text file; unknown keys are an error. Flags override fields
    // after loading.
    static TrainConfig from_file(const std::string& path);
};

struct MonitorPoint {
    int iteration;
    double sample_total_loss;
};

struct TrainResult {
    std::vector<double> loss_curve;       // eps-objective per iteration
    std::vector<MonitorPoint> monitor;    // periodic full-sample image loss
    CheckpointMeta meta;
};

// AdamW training of the denoiser (and event encoder jointly when event
// conditioning is on). Aborts with the offending iteration on a non-finite
// loss. Fully deterministic for a fixed config.
TrainResult train_toy(const TrainConfig& cfg, const std::vector<ToyPair>& train_pairs, ParamStore& store,
                      std::ostream* log = nullptr);

struct SamplerSpec {
    enum class Kind { ddpm, ddim };
    enum class Init { scheduled, paper_literal };
    Kind kind = Kind::ddim;
    int steps = 15;
    double eta = 0.0;
    Init init = Init::scheduled;
};

SamplerSpec::Kind sampler_kind_from_string(const std::string& s);
SamplerSpec::Init sampler_init_from_string(const std::string& s);

// Full conditional sampling pass: encode the hazy frame, encode events when
// the model wants them, initialize x_T, run the sampler, decode.
Image run_sampler(const ParamStore& store, const CheckpointMeta& meta, const Image& hazy,
                  const TemporalPyramid* tpr, const SamplerSpec& spec, std::uint64_t seed);

struct EvalRow {
    int pair_index = 0;
    double psnr_db = 0.0;
    double ssim_v = 0.0;
    double hazy_spread = 0.0;
    double output_spread = 0.0;
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    // fraction of pairs whose output intensity spread >= hazy input spread
    double spread_expanded_fraction = 0.0;
};

EvalSummary evaluate(const ParamStore& store, const CheckpointMeta& meta,
                     const std::vector<ToyPair>& held, const SamplerSpec& spec, std::uint64_t seed);

// Returns the name of the single field in which a and b differ; throws
// ValidationError if they differ in more than one (or in none).
std::string single_factor_diff(const TrainConfig& a, const TrainConfig& b);

struct AblationRow {
    std::string config;
    double psnr_db = 0.0;
    double ssim_v = 0.0;
    double wall_seconds = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;  // per (events, sampler, seed)
    double mean_psnr_events_on = 0.0;   // at ddim-15
    double mean_psnr_events_off = 0.0;  // at ddim-15
    double mean_psnr_ddim15 = 0.0;      // events on
    double mean_psnr_ddpm5 = 0.0;       // events on
    double mean_psnr_ddpm15 = 0.0;      // events on
    double spread_expanded_fraction = 0.0;  // events-on ddim-15 outputs
};

// Matched runs over {events on, off} x {ddpm-5, ddpm-15, ddim-15} for each
// seed: same data, iterations, and shared-parameter initializations; only the
// event-guidance factor varies at training time.
AblationResult ablate(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                      std::ostream* log = nullptr);

void write_ablation_csv(const AblationResult& result, const std::string& path);

}  // namespace evdiff
