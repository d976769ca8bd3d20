#include <omp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evdiff/checkpoint.hpp"
#include "evdiff/dataset.hpp"
#include "evdiff/errors.hpp"
#include "evdiff/event_sim.hpp"
#include "evdiff/events.hpp"
#include "evdiff/haze.hpp"
#include "evdiff/manifest.hpp"
#include "evdiff/metrics.hpp"
#include "evdiff/tensor_io.hpp"
#include "evdiff/tpr.hpp"
#include "evdiff/train.hpp"
#include "evdiff/version.hpp"
#include "evdiff/viz.hpp"

namespace {

using namespace evdiff;

std::string in_dir(const std::string& out_dir, const std::string& path) {
    if (out_dir.empty() || path.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(out_dir) / path).string();
}

struct VerbContext {
    std::string verb;
    std::vector<std::string> args;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;  // first entry is the primary output
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void finish() const {
        if (outputs.empty()) return;
        RunManifest m;
        m.verb = verb;
        m.args = args;
        m.seed = seed;
        m.config_hash = config_hash(verb, args);
        m.outputs = outputs;
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_run_manifest(m, manifest_path_for(outputs.front()));
    }
};

EventStream read_events_auto(const std::string& path, int width, int height) {
    const EventFormat fmt = event_format_from_path(path);
    return read_events(path, fmt, width, height);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evdiff: event-guided diffusion dehazing toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    int threads = 1;
    std::uint64_t global_seed = 0;
    std::string out_dir;
    app.add_option("--threads", threads, "worker threads (default 1 for reproducibility)");
    app.add_option("--seed", global_seed, "default seed for verbs that take one");
    app.add_option("--out-dir", out_dir, "directory prefixed to relative output paths");

    // simulate-events
    auto* sim = app.add_subcommand("simulate-events", "render a motion trajectory and emit threshold-crossing events");
    std::string sim_image, sim_traj, sim_out = "events.bin";
    SimConfig sim_cfg;
    sim->add_option("--image", sim_image, "input .pgm/.ppm")->required();
    sim->add_option("--traj", sim_traj, "trajectory csv: t_us,dx,dy,rot,scale")->required();
    sim->add_option("--cpos", sim_cfg.c_pos, "positive contrast threshold");
    sim->add_option("--cneg", sim_cfg.c_neg, "negative contrast threshold");
    sim->add_option("--refractory", sim_cfg.refractory_us, "per-pixel refractory period, microseconds");
    sim->add_option("--log-eps", sim_cfg.log_eps, "intensity floor before log()");
    sim->add_option("--out", sim_out, "output events (.bin or .csv)");

    // make-haze
    auto* haze = app.add_subcommand("make-haze", "apply atmospheric scattering to a clean image");
    std::string haze_clean, haze_depth, haze_out = "hazy.ppm";
    double haze_beta = 1.0, haze_t = -1.0;
    std::vector<double> haze_airlight{0.9};
    haze->add_option("--clean", haze_clean, "clean input image")->required();
    haze->add_option("--depth", haze_depth, "depth map .ten (omit when using --t)");
    haze->add_option("--beta", haze_beta, "scattering coefficient for exp(-beta*depth)");
    haze->add_option("--t", haze_t, "constant transmission in [0,1] instead of a depth map");
    haze->add_option("--airlight", haze_airlight, "airlight, one value or one per channel");
    haze->add_option("--out", haze_out, "output image");

    // histogram
    auto* hist = app.add_subcommand("histogram", "intensity histogram and spread summary");
    std::string hist_image, hist_out = "hist.csv";
    int hist_bins = 32;
    hist->add_option("--image", hist_image, "input image")->required();
    hist->add_option("--bins", hist_bins, "bin count (>= 2)");
    hist->add_option("--out", hist_out, "output csv");

    // build-tpr
    auto* tprc = app.add_subcommand("build-tpr", "voxelize an event window into a temporal pyramid");
    std::string tpr_events, tpr_out = "tpr.ten";
    std::uint64_t tpr_t0 = 0, tpr_t1 = 33000;
    int tpr_levels = 3, tpr_bins = 2, tpr_w = 0, tpr_h = 0;
    std::string tpr_anchor = "end";
    bool tpr_normalize = false, tpr_split = false;
    tprc->add_option("--events", tpr_events, "event stream (.bin or .csv)")->required();
    tprc->add_option("--t0", tpr_t0, "window start, microseconds");
    tprc->add_option("--t1", tpr_t1, "window end, microseconds (exclusive)");
    tprc->add_option("--levels", tpr_levels, "pyramid levels");
    tprc->add_option("--bins", tpr_bins, "time bins per level");
    tprc->add_option("--width", tpr_w, "sensor width (csv input only)");
    tprc->add_option("--height", tpr_h, "sensor height (csv input only)");
    tprc->add_option("--pyramid-anchor", tpr_anchor, "end|start halving anchor")
        ->check(CLI::IsMember({"end", "start"}));
    tprc->add_flag("--normalize", tpr_normalize, "divide by window event count");
    tprc->add_flag("--split-polarity", tpr_split, "separate +/- channels instead of signed sums");
    tprc->add_option("--out", tpr_out, "output tensor");

    // make-dataset
    auto* mkds = app.add_subcommand("make-dataset", "generate the procedural toy corpus");
    DatasetConfig ds_cfg;
    std::string ds_out = "dataset";
    std::uint64_t ds_seed = 0;
    bool ds_seed_set = false;
    mkds->add_option("--out", ds_out, "output directory")->required();
    mkds->add_option("--count", ds_cfg.count, "number of pairs");
    mkds->add_option("--size", ds_cfg.size, "image edge (multiple of 4)");
    mkds->add_option("--seed", ds_seed, "dataset seed")->each([&](const std::string&) { ds_seed_set = true; });
    mkds->add_option("--beta-min", ds_cfg.beta_min, "min scattering coefficient");
    mkds->add_option("--beta-max", ds_cfg.beta_max, "max scattering coefficient");
    mkds->add_option("--contrast", ds_cfg.contrast_threshold, "event simulator contrast threshold");
    mkds->add_option("--frames", ds_cfg.frames, "frames per motion render");
    mkds->add_option("--tpr-levels", ds_cfg.tpr_levels, "pyramid levels");
    mkds->add_option("--tpr-bins", ds_cfg.tpr_bins, "bins per level");

    // train-toy
    auto* train = app.add_subcommand("train-toy", "train the toy denoiser (and event encoder)");
    TrainConfig tr_cfg;
    std::string tr_out = "checkpoint", tr_data, tr_config_file, tr_log_file;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false, tr_events_off = false, tr_decoder_attn = false, tr_finetune = false;
    std::string tr_codec = "avgpool2";
    train->add_option("--out", tr_out, "checkpoint directory")->required();
    train->add_option("--data", tr_data, "dataset directory (default: generate in memory)");
    train->add_option("--config", tr_config_file, "key=value config file; flags override");
    train->add_option("--iterations", tr_cfg.iterations, "training iterations");
    train->add_option("--batch", tr_cfg.batch, "batch size");
    train->add_option("--lr", tr_cfg.lr, "learning rate");
    train->add_option("--seed", tr_seed, "training seed")->each([&](const std::string&) { tr_seed_set = true; });
    train->add_option("--train-count", tr_cfg.train_count, "training pairs");
    train->add_option("--held-count", tr_cfg.held_count, "held-out pairs");
    train->add_option("--size", tr_cfg.data.size, "image edge when generating data");
    train->add_flag("--no-events", tr_events_off, "train without event conditioning");
    train->add_flag("--decoder-attention", tr_decoder_attn, "add attention at the two coarsest decoder stages");
    train->add_flag("--finetune-x0", tr_finetune, "backprop image loss through a 1-step x0 estimate");
    train->add_option("--codec", tr_codec, "latent codec: identity|avgpool2");
    train->add_option("--log", tr_log_file, "training log file (default stderr)");

    // sample
    auto* smp = app.add_subcommand("sample", "run the conditional sampler on a hazy image");
    std::string smp_ckpt, smp_hazy, smp_events_ten, smp_out = "dehazed.ppm";
    std::string smp_sampler = "ddim", smp_init = "scheduled";
    int smp_steps = 15;
    double smp_eta = 0.0;
    std::uint64_t smp_seed = 1;
    bool smp_seed_set = false;
    smp->add_option("--checkpoint", smp_ckpt, "checkpoint directory")->required();
    smp->add_option("--hazy", smp_hazy, "hazy input image")->required();
    smp->add_option("--cond-events", smp_events_ten, "event pyramid .ten (required for event-conditioned checkpoints)");
    smp->add_option("--sampler", smp_sampler, "ddpm|ddim")->check(CLI::IsMember({"ddpm", "ddim"}));
    smp->add_option("--steps", smp_steps, "denoising steps");
    smp->add_option("--eta", smp_eta, "ddim noise scale");
    smp->add_option("--init", smp_init, "scheduled|paper-literal x_T initialization")
        ->check(CLI::IsMember({"scheduled", "paper-literal"}));
    smp->add_option("--seed", smp_seed, "sampling seed")->each([&](const std::string&) { smp_seed_set = true; });
    smp->add_option("--out", smp_out, "output image");

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "metrics of a checkpoint on a dataset's held-out tail");
    std::string ev_ckpt, ev_data, ev_out = "evaluation.csv";
    std::string ev_sampler = "ddim";
    int ev_steps = 15, ev_held = 16;
    double ev_eta = 0.0;
    std::uint64_t ev_seed = 0;
    bool ev_seed_set = false;
    evl->add_option("--checkpoint", ev_ckpt, "checkpoint directory")->required();
    evl->add_option("--data", ev_data, "dataset directory")->required();
    evl->add_option("--held", ev_held, "held-out pair count (taken from the dataset tail)");
    evl->add_option("--sampler", ev_sampler, "ddpm|ddim")->check(CLI::IsMember({"ddpm", "ddim"}));
    evl->add_option("--steps", ev_steps, "denoising steps");
    evl->add_option("--eta", ev_eta, "ddim noise scale");
    evl->add_option("--seed", ev_seed, "evaluation seed")->each([&](const std::string&) { ev_seed_set = true; });
    evl->add_option("--out", ev_out, "output csv");

    // ablate
    auto* abl = app.add_subcommand("ablate", "matched event/sampler ablation grid");
    TrainConfig ab_cfg;
    std::string ab_out = "ablation.csv";
    int ab_seeds = 3;
    bool ab_decoder_attn = false;
    abl->add_option("--out", ab_out, "results csv")->required();
    abl->add_option("--seeds", ab_seeds, "number of seeds");
    abl->add_option("--iterations", ab_cfg.iterations, "training iterations per run");
    abl->add_option("--train-count", ab_cfg.train_count, "training pairs");
    abl->add_option("--held-count", ab_cfg.held_count, "held-out pairs");
    abl->add_option("--size", ab_cfg.data.size, "image edge");
    abl->add_option("--batch", ab_cfg.batch, "batch size");
    abl->add_flag("--decoder-attention", ab_decoder_attn, "attention at decoder stages too");

    // visualize-xe
    auto* viz = app.add_subcommand("visualize-xe", "heatmap of an event feature");
    std::string vz_feature, vz_tpr, vz_ckpt, vz_out = "feature.ppm";
    viz->add_option("--feature", vz_feature, "precomputed feature .ten");
    viz->add_option("--tpr", vz_tpr, "pyramid .ten to encode (needs --checkpoint)");
    viz->add_option("--checkpoint", vz_ckpt, "checkpoint with encoder weights");
    viz->add_option("--out", vz_out, "output heatmap .ppm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    omp_set_num_threads(std::max(1, threads));

    VerbContext ctx;
    for (int i = 1; i < argc; ++i) ctx.args.push_back(argv[i]);
    ctx.seed = global_seed;

    try {
        if (sim->parsed()) {
            ctx.verb = "simulate-events";
            const Image img = to_grayscale(load_image(sim_image));
            const MotionTrajectory traj = read_trajectory(sim_traj);
            const EventStream events = simulate_events(render_trajectory(img, traj), sim_cfg);
            const std::string out = in_dir(out_dir, sim_out);
            write_events(events, out, event_format_from_path(out));
            std::cerr << "wrote " << events.events.size() << " events to " << out << "\n";
            ctx.outputs = {out};
        } else if (haze->parsed()) {
            ctx.verb = "make-haze";
            const Image clean = load_image(haze_clean);
            std::vector<float> a(haze_airlight.begin(), haze_airlight.end());
            HazeParams params;
            if (!haze_depth.empty()) {
                params = HazeParams::with_map(transmission_from_depth(load_tensor(haze_depth),
                                                                      static_cast<float>(haze_beta)), a);
            } else if (haze_t >= 0.0) {
                params = HazeParams::with_scalar(static_cast<float>(haze_t), a);
            } else {
                throw ValidationError("make-haze needs either --depth or --t");
            }
            const std::string out = in_dir(out_dir, haze_out);
            save_image(synthesize_haze(clean, params), out);
            ctx.outputs = {out};
        } else if (hist->parsed()) {
            ctx.verb = "histogram";
            const HistogramSummary h = intensity_histogram(load_image(hist_image), hist_bins);
            const std::string out = in_dir(out_dir, hist_out);
            std::ofstream f(out, std::ios::trunc);
            if (!f) throw IoError("cannot open for writing: " + out);
            f << "bin,count\n";
            for (std::size_t i = 0; i < h.counts.size(); ++i) f << i << "," << h.counts[i] << "\n";
            f << "# min," << h.min_value << "\n# max," << h.max_value << "\n# spread," << h.spread << "\n";
            ctx.outputs = {out};
        } else if (tprc->parsed()) {
            ctx.verb = "build-tpr";
            const EventStream events = read_events_auto(tpr_events, tpr_w, tpr_h);
            const TemporalPyramid tpr = build_tpr(events, tpr_t0, tpr_t1, tpr_levels, tpr_bins,
                                                  tpr_anchor == "end", tpr_normalize, tpr_split);
            const std::string out = in_dir(out_dir, tpr_out);
            save_tensor(tpr.grid, out);
            ctx.outputs = {out};
        } else if (mkds->parsed()) {
            ctx.verb = "make-dataset";
            ds_cfg.seed = ds_seed_set ? ds_seed : global_seed;
            ctx.seed = ds_cfg.seed;
            const std::string out = in_dir(out_dir, ds_out);
            const std::vector<ToyPair> pairs = build_toy_dataset(ds_cfg);
            save_toy_dataset(pairs, ds_cfg, out);
            std::cerr << "wrote " << pairs.size() << " pairs to " << out << "\n";
            ctx.outputs = {(std::filesystem::path(out) / "dataset.json").string()};
        } else if (train->parsed()) {
            ctx.verb = "train-toy";
            if (!tr_config_file.empty()) {
                TrainConfig file_cfg = TrainConfig::from_file(tr_config_file);
                // flags given on the command line override file values
                file_cfg.iterations = train->count("--iterations") ? tr_cfg.iterations : file_cfg.iterations;
                file_cfg.batch = train->count("--batch") ? tr_cfg.batch : file_cfg.batch;
                file_cfg.lr = train->count("--lr") ? tr_cfg.lr : file_cfg.lr;
                file_cfg.train_count = train->count("--train-count") ? tr_cfg.train_count : file_cfg.train_count;
                file_cfg.held_count = train->count("--held-count") ? tr_cfg.held_count : file_cfg.held_count;
                file_cfg.data.size = train->count("--size") ? tr_cfg.data.size : file_cfg.data.size;
                tr_cfg = file_cfg;
            }
            tr_cfg.seed = tr_seed_set ? tr_seed : global_seed;
            tr_cfg.data.seed = tr_cfg.seed;
            if (tr_events_off) tr_cfg.model.events = false;
            if (tr_decoder_attn) tr_cfg.model.decoder_attention = true;
            if (tr_finetune) tr_cfg.finetune_x0 = true;
            if (train->count("--codec")) tr_cfg.codec = codec_mode_from_string(tr_codec);
            ctx.seed = tr_cfg.seed;

            std::vector<ToyPair> pairs;
            if (!tr_data.empty()) {
                pairs = load_toy_dataset(tr_data);
            } else {
                tr_cfg.data.count = tr_cfg.train_count + tr_cfg.held_count;
                pairs = build_toy_dataset(tr_cfg.data);
            }
            if (static_cast<int>(pairs.size()) < tr_cfg.train_count)
                throw ValidationError("dataset has fewer pairs than train_count");
            const std::vector<ToyPair> train_pairs(pairs.begin(), pairs.begin() + tr_cfg.train_count);

            std::ofstream log_file;
            std::ostream* log = &std::cerr;
            if (!tr_log_file.empty()) {
                log_file.open(in_dir(out_dir, tr_log_file), std::ios::trunc);
                if (!log_file) throw IoError("cannot open log file");
                log = &log_file;
            }
            ParamStore store;
            const TrainResult result = train_toy(tr_cfg, train_pairs, store, log);
            const std::string out = in_dir(out_dir, tr_out);
            save_checkpoint(out, store, result.meta);
            // loss curve next to the checkpoint
            const std::string curve = (std::filesystem::path(out) / "loss_curve.csv").string();
            std::ofstream cf(curve, std::ios::trunc);
            cf << "iteration,eps_loss\n";
            for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
                cf << (i + 1) << "," << result.loss_curve[i] << "\n";
            ctx.outputs = {(std::filesystem::path(out) / "manifest.json").string(), curve};
        } else if (smp->parsed()) {
            ctx.verb = "sample";
            auto [store, meta] = load_checkpoint(smp_ckpt);
            const Image hazy = load_image(smp_hazy);
            TemporalPyramid tpr;
            const TemporalPyramid* tpr_ptr = nullptr;
            if (!smp_events_ten.empty()) {
                tpr.levels = meta.tpr_levels;
                tpr.bins = meta.tpr_bins;
                tpr.grid = load_tensor(smp_events_ten);
                tpr_ptr = &tpr;
            }
            SamplerSpec spec;
            spec.kind = sampler_kind_from_string(smp_sampler);
            spec.steps = smp_steps;
            spec.eta = smp_eta;
            spec.init = sampler_init_from_string(smp_init);
            ctx.seed = smp_seed_set ? smp_seed : global_seed;
            const Image out_img = run_sampler(store, meta, hazy, tpr_ptr, spec, ctx.seed);
            const std::string out = in_dir(out_dir, smp_out);
            save_image(out_img, out);
            ctx.outputs = {out};
        } else if (evl->parsed()) {
            ctx.verb = "evaluate";
            auto [store, meta] = load_checkpoint(ev_ckpt);
            const std::vector<ToyPair> pairs = load_toy_dataset(ev_data);
            if (static_cast<int>(pairs.size()) < ev_held)
                throw ValidationError("dataset smaller than requested held-out count");
            const std::vector<ToyPair> held(pairs.end() - ev_held, pairs.end());
            SamplerSpec spec;
            spec.kind = sampler_kind_from_string(ev_sampler);
            spec.steps = ev_steps;
            spec.eta = ev_eta;
            ctx.seed = ev_seed_set ? ev_seed : global_seed;
            const EvalSummary s = evaluate(store, meta, held, spec, ctx.seed);
            const std::string out = in_dir(out_dir, ev_out);
            std::ofstream f(out, std::ios::trunc);
            if (!f) throw IoError("cannot open for writing: " + out);
            f << "pair,psnr_db,ssim,hazy_spread,output_spread\n";
            for (const auto& r : s.rows)
                f << r.pair_index << "," << r.psnr_db << "," << r.ssim_v << "," << r.hazy_spread << ","
                  << r.output_spread << "\n";
            f << "# mean_psnr," << s.mean_psnr << "\n# mean_ssim," << s.mean_ssim
              << "\n# spread_expanded_fraction," << s.spread_expanded_fraction << "\n";
            std::cerr << "mean psnr " << s.mean_psnr << " dB, mean ssim " << s.mean_ssim << "\n";
            ctx.outputs = {out};
        } else if (abl->parsed()) {
            ctx.verb = "ablate";
            ab_cfg.model.decoder_attention = ab_decoder_attn;
            std::vector<std::uint64_t> seeds;
            for (int i = 0; i < ab_seeds; ++i) seeds.push_back(global_seed + static_cast<std::uint64_t>(i));
            const AblationResult result = ablate(ab_cfg, seeds, &std::cerr);
            const std::string out = in_dir(out_dir, ab_out);
            write_ablation_csv(result, out);
            std::cerr << "mean psnr: events-on(ddim15) " << result.mean_psnr_events_on << " events-off(ddim15) "
                      << result.mean_psnr_events_off << " ddpm5(on) " << result.mean_psnr_ddpm5 << "\n";
            ctx.outputs = {out};
        } else if (viz->parsed()) {
            ctx.verb = "visualize-xe";
            Tensor feature;
            if (!vz_feature.empty()) {
                feature = load_tensor(vz_feature);
            } else if (!vz_tpr.empty() && !vz_ckpt.empty()) {
                auto [store, meta] = load_checkpoint(vz_ckpt);
                if (!meta.denoiser.events) throw ValidationError("checkpoint has no event encoder");
                TemporalPyramid tpr;
                tpr.levels = meta.tpr_levels;
                tpr.bins = meta.tpr_bins;
                tpr.grid = load_tensor(vz_tpr);
                const EventEncoder encoder(meta.encoder, store);
                feature = encode_events(tpr, encoder, store);
            } else {
                throw ValidationError("visualize-xe needs --feature, or --tpr with --checkpoint");
            }
            const std::string out = in_dir(out_dir, vz_out);
            save_image(visualize_feature(feature), out);
            ctx.outputs = {out};
        }
        ctx.finish();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
