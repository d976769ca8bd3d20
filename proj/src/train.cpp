#include "evdiff/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "evdiff/errors.hpp"
#include "evdiff/kernels.hpp"

namespace evdiff {

namespace {

// Fixed random-weight conv stack behind the perceptual proxy. Weights depend
// only on the input channel count, never on run configuration.
struct ProxyNet {
    Tensor w1;  // [8, in_ch, 3, 3]
    Tensor w2;  // [8, 8, 3, 3]
};

ProxyNet proxy_net(int in_ch) {
    Rng rng(0x5EEDFEA7ULL + static_cast<std::uint64_t>(in_ch));
    ProxyNet net;
    net.w1 = he_init(rng, {8, in_ch, 3, 3}, in_ch * 9);
    net.w2 = he_init(rng, {8, 8, 3, 3}, 8 * 9);
    return net;
}

Tensor proxy_features(const Tensor& img, const ProxyNet& net) {
    const auto& d = img.dims();
    Tensor h = Tensor::zeros({8, d[1], d[2]});
    kernels::conv2d_forward(h.data(), img.data(), net.w1.data(), static_cast<const float*>(nullptr),
                            d[0], d[1], d[2], 8, 3, 1, 1);
    for (auto& v : h.values()) v = v > 0.0f ? v : 0.0f;
    Tensor out = Tensor::zeros({8, d[1], d[2]});
    kernels::conv2d_forward(out.data(), h.data(), net.w2.data(), static_cast<const float*>(nullptr),
                            8, d[1], d[2], 8, 3, 1, 1);
    return out;
}

template <typename S>
typename Graph<S>::Id total_loss_node(Graph<S>& g, typename Graph<S>::Id out,
                                      typename Graph<S>::Id target, const ProxyNet& net,
                                      double lambda_pix, double lambda_perc) {
    auto w1 = g.leaf(net.w1.template cast<S>());
    auto w2 = g.leaf(net.w2.template cast<S>());
    auto feat = [&](typename Graph<S>::Id x) {
        return g.conv2d(g.relu(g.conv2d(x, w1, -1, 1, 1)), w2, -1, 1, 1);
    };
    auto pix = g.scale(g.l1(out, target), static_cast<S>(lambda_pix));
    auto perc = g.scale(g.mse(feat(out), feat(target)), static_cast<S>(lambda_perc));
    return g.add(pix, perc);
}

// The diffusion runs on centered latents: [0,1] codec output is mapped to
// [-1,1] so the eps-objective sees near-zero-mean data. Inverse applied
// before decoding.
Tensor to_model_latent(const Tensor& t) {
    Tensor out = t;
    for (auto& v : out.values()) v = 2.0f * v - 1.0f;
    return out;
}

Tensor from_model_latent(const Tensor& t) {
    Tensor out = t;
    for (auto& v : out.values()) v = 0.5f * (v + 1.0f);
    return out;
}

}  // namespace

TotalLoss total_loss(const Image& out, const Image& target, double lambda_pix, double lambda_perc) {
    if (!out.same_shape(target)) throw DimensionError("total_loss: image shapes differ");
    if (lambda_pix < 0.0 || lambda_perc < 0.0) throw ValidationError("loss weights must be non-negative");
    TotalLoss l;
    double acc = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        acc += std::abs(static_cast<double>(out.values[i]) - static_cast<double>(target.values[i]));
    l.pix = acc / static_cast<double>(out.values.size());

    const ProxyNet net = proxy_net(out.channels);
    Tensor fa = proxy_features(image_to_tensor(out), net);
    Tensor fb = proxy_features(image_to_tensor(target), net);
    double pacc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double d = static_cast<double>(fa[i]) - static_cast<double>(fb[i]);
        pacc += d * d;
    }
    l.perc = pacc / static_cast<double>(fa.size());
    l.total = lambda_pix * l.pix + lambda_perc * l.perc;
    return l;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    TrainConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path, lineno, "expected key=value at line " + std::to_string(lineno));
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        auto as_int = [&] { return std::stoi(val); };
        auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(val)); };
        auto as_double = [&] { return std::stod(val); };
        auto as_bool = [&] {
            if (val == "on" || val == "true" || val == "1") return true;
            if (val == "off" || val == "false" || val == "0") return false;
            throw ValidationError(path + ": boolean key " + key + " has value " + val);
        };
        if (key == "iterations") cfg.iterations = as_int();
        else if (key == "batch") cfg.batch = as_int();
        else if (key == "lr") cfg.lr = as_double();
        else if (key == "weight_decay") cfg.weight_decay = as_double();
        else if (key == "lambda_pix") cfg.lambda_pix = as_double();
        else if (key == "lambda_perc") cfg.lambda_perc = as_double();
        else if (key == "seed") cfg.seed = as_u64();
        else if (key == "log_every") cfg.log_every = as_int();
        else if (key == "monitor_steps") cfg.monitor_steps = as_int();
        else if (key == "finetune_x0") cfg.finetune_x0 = as_bool();
        else if (key == "events") cfg.model.events = as_bool();
        else if (key == "decoder_attention") cfg.model.decoder_attention = as_bool();
        else if (key == "codec") cfg.codec = codec_mode_from_string(val);
        else if (key == "train_count") cfg.train_count = as_int();
        else if (key == "held_count") cfg.held_count = as_int();
        else if (key == "schedule_steps") cfg.schedule_steps = as_int();
        else if (key == "beta_start") cfg.beta_start = as_double();
        else if (key == "beta_end") cfg.beta_end = as_double();
        else if (key == "size") cfg.data.size = as_int();
        else if (key == "data_seed") cfg.data.seed = as_u64();
        else if (key == "beta_min") cfg.data.beta_min = as_double();
        else if (key == "beta_max") cfg.data.beta_max = as_double();
        else if (key == "airlight_min") cfg.data.airlight_min = static_cast<float>(as_double());
        else if (key == "airlight_max") cfg.data.airlight_max = static_cast<float>(as_double());
        else if (key == "contrast_threshold") cfg.data.contrast_threshold = as_double();
        else if (key == "frames") cfg.data.frames = as_int();
        else if (key == "tpr_levels") cfg.data.tpr_levels = as_int();
        else if (key == "tpr_bins") cfg.data.tpr_bins = as_int();
        else throw ValidationError(path + ": unknown config key \"" + key + "\" at line " + std::to_string(lineno));
    }
    return cfg;
}

namespace {

CheckpointMeta meta_from_config(const TrainConfig& cfg, const EventEncoderConfig& enc) {
    CheckpointMeta meta;
    meta.denoiser = cfg.model;
    meta.encoder = enc;
    meta.codec = cfg.codec;
    meta.schedule_steps = cfg.schedule_steps;
    meta.beta_start = cfg.beta_start;
    meta.beta_end = cfg.beta_end;
    meta.image_size = cfg.data.size;
    meta.tpr_levels = cfg.data.tpr_levels;
    meta.tpr_bins = cfg.data.tpr_bins;
    return meta;
}

}  // namespace

TrainResult train_toy(const TrainConfig& cfg, const std::vector<ToyPair>& train_pairs, ParamStore& store,
                      std::ostream* log) {
    if (train_pairs.empty()) throw ValidationError("train_toy: empty training set");
    if (cfg.batch < 1 || cfg.iterations < 0) throw ValidationError("train_toy: batch >= 1 and iterations >= 0");
    if (cfg.lambda_pix < 0.0 || cfg.lambda_perc < 0.0) throw ValidationError("loss weights must be non-negative");

    const LatentCodec codec(cfg.codec);
    EventEncoderConfig enc_cfg;
    enc_cfg.in_ch = train_pairs[0].tpr.grid.dims()[0];
    enc_cfg.out_ch = cfg.model.event_feature_ch;

    ToyDenoiser model(cfg.model, store, cfg.seed);
    std::optional<EventEncoder> encoder;
    if (cfg.model.events) {
        std::uint64_t mix = cfg.seed ^ 0xE5C0DE0ULL;
        Rng enc_rng(Rng::splitmix64(mix));
        encoder.emplace(enc_cfg, store, enc_rng);
    }

    const NoiseSchedule sched = NoiseSchedule::linear(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);

    std::vector<Tensor> lat_clean, lat_hazy, clean_tensors;
    lat_clean.reserve(train_pairs.size());
    lat_hazy.reserve(train_pairs.size());
    for (const auto& p : train_pairs) {
        lat_clean.push_back(to_model_latent(codec.encode(p.clean)));
        lat_hazy.push_back(to_model_latent(codec.encode(p.hazy)));
        clean_tensors.push_back(image_to_tensor(p.clean));
    }
    const ProxyNet proxy = proxy_net(train_pairs[0].clean.channels);

    AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    opt_cfg.weight_decay = cfg.weight_decay;
    AdamW opt(store, opt_cfg);

    std::uint64_t mix = cfg.seed ^ 0x7124A1Full;
    Rng rng(Rng::splitmix64(mix));

    TrainResult result;
    result.meta = meta_from_config(cfg, enc_cfg);
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int it = 1; it <= cfg.iterations; ++it) {
        Graph<float> g;
        const std::vector<int> ids = bind_params(g, store);
        int loss_id = -1;
        for (int b = 0; b < cfg.batch; ++b) {
            const std::size_t idx = rng.below(train_pairs.size());
            const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
            Tensor eps = gaussian_sample(rng, lat_clean[idx].dims());
            Tensor x_t = q_sample(lat_clean[idx], t, eps, sched);

            int xe_id = -1;
            if (cfg.model.events) xe_id = encoder->forward(g, ids, g.leaf(train_pairs[idx].tpr.grid));
            const int x_t_id = g.leaf(x_t);
            const int eps_hat = model.forward(g, ids, x_t_id, g.leaf(lat_hazy[idx]), t, xe_id);
            int item = g.mse(eps_hat, g.leaf(eps));

            if (cfg.finetune_x0) {
                const double ab = sched.alpha_bar(t);
                auto scaled_eps = g.scale(eps_hat, static_cast<float>(std::sqrt(1.0 - ab)));
                auto x0_hat = g.scale(g.sub(x_t_id, scaled_eps), static_cast<float>(1.0 / std::sqrt(ab)));
                auto half = g.leaf(Tensor::full(g.value(x0_hat).dims(), 0.5f));
                auto decoded = codec.decode_node(g, g.add(g.scale(x0_hat, 0.5f), half));
                auto img_loss = total_loss_node(g, decoded, g.leaf(clean_tensors[idx]), proxy,
                                                cfg.lambda_pix, cfg.lambda_perc);
                item = g.add(item, img_loss);
            }
            loss_id = b == 0 ? item : g.add(loss_id, item);
        }
        loss_id = g.scale(loss_id, 1.0f / static_cast<float>(cfg.batch));
        g.backward(loss_id);

        const double loss_val = g.value(loss_id)[0];
        if (!std::isfinite(loss_val))
            throw ValidationError("non-finite training loss at iteration " + std::to_string(it));
        for (std::size_t i = 0; i < store.size(); ++i) store[i].grad = g.grad(ids[i]);
        opt.step(store);
        result.loss_curve.push_back(loss_val);

        if (cfg.log_every > 0 && it % cfg.log_every == 0) {
            SamplerSpec spec;
            spec.kind = SamplerSpec::Kind::ddim;
            spec.steps = cfg.monitor_steps;
            Image probe = run_sampler(store, result.meta, train_pairs[0].hazy, &train_pairs[0].tpr, spec,
                                      Rng::splitmix64(mix));
            const TotalLoss tl = total_loss(probe, train_pairs[0].clean, cfg.lambda_pix, cfg.lambda_perc);
            result.monitor.push_back({it, tl.total});
            if (log)
                (*log) << "iter " << it << " eps_loss " << loss_val << " sample_total_loss " << tl.total
                       << "\n";
        } else if (log && (it == 1 || it % 25 == 0)) {
            (*log) << "iter " << it << " eps_loss " << loss_val << "\n";
        }
    }
    return result;
}

SamplerSpec::Kind sampler_kind_from_string(const std::string& s) {
    if (s == "ddpm") return SamplerSpec::Kind::ddpm;
    if (s == "ddim") return SamplerSpec::Kind::ddim;
    throw ValidationError("unknown sampler: " + s + " (expected ddpm|ddim)");
}

SamplerSpec::Init sampler_init_from_string(const std::string& s) {
    if (s == "scheduled") return SamplerSpec::Init::scheduled;
    if (s == "paper-literal") return SamplerSpec::Init::paper_literal;
    throw ValidationError("unknown init mode: " + s + " (expected scheduled|paper-literal)");
}

Image run_sampler(const ParamStore& store, const CheckpointMeta& meta, const Image& hazy,
                  const TemporalPyramid* tpr, const SamplerSpec& spec, std::uint64_t seed) {
    const LatentCodec codec(meta.codec);
    const Image gray_in = meta.denoiser.latent_ch == 1 ? to_grayscale(hazy) : hazy;
    const Tensor x_hz = to_model_latent(codec.encode(gray_in));

    const ToyDenoiser model(meta.denoiser, store);
    Tensor x_e;
    if (meta.denoiser.events) {
        if (!tpr) throw ValidationError("this checkpoint is event-conditioned: event input required");
        const EventEncoder encoder(meta.encoder, store);
        x_e = encode_events(*tpr, encoder, store);
    }

    DenoiseFn fn = [&](const Tensor& x_t, int t) {
        Graph<float> g;
        const std::vector<int> ids = bind_params(g, store);
        const int xe_id = meta.denoiser.events ? g.leaf(x_e) : -1;
        const int out = model.forward(g, ids, g.leaf(x_t), g.leaf(x_hz), t, xe_id);
        return g.value(out);
    };

    const NoiseSchedule sched = NoiseSchedule::linear(meta.schedule_steps, meta.beta_start, meta.beta_end);
    Rng rng(seed);
    Tensor eps = gaussian_sample(rng, x_hz.dims());
    Tensor x_T;
    if (spec.init == SamplerSpec::Init::scheduled) {
        x_T = q_sample(x_hz, sched.steps(), eps, sched);
    } else {
        x_T = x_hz;
        for (std::size_t i = 0; i < x_T.size(); ++i) x_T[i] += eps[i];
    }

    Tensor x0 = spec.kind == SamplerSpec::Kind::ddim
                    ? ddim_sample(fn, x_T, sched, rng, spec.steps, spec.eta)
                    : ddpm_sample(fn, x_T, sched, rng, spec.steps);
    return codec.decode(from_model_latent(x0));
}

EvalSummary evaluate(const ParamStore& store, const CheckpointMeta& meta,
                     const std::vector<ToyPair>& held, const SamplerSpec& spec, std::uint64_t seed) {
    if (held.empty()) throw ValidationError("evaluate: empty held-out set");
    EvalSummary summary;
    double psnr_acc = 0.0, ssim_acc = 0.0;
    int expanded = 0;
    for (std::size_t i = 0; i < held.size(); ++i) {
        std::uint64_t mix = seed ^ (0xABCD1234ULL + i);
        Image out = run_sampler(store, meta, held[i].hazy, &held[i].tpr, spec, Rng::splitmix64(mix));
        EvalRow row;
        row.pair_index = static_cast<int>(i);
        row.psnr_db = psnr(out, held[i].clean);
        row.ssim_v = ssim(out, held[i].clean);
        row.hazy_spread = intensity_histogram(held[i].hazy, 32).spread;
        row.output_spread = intensity_histogram(out, 32).spread;
        if (row.output_spread >= row.hazy_spread) ++expanded;
        psnr_acc += row.psnr_db;
        ssim_acc += row.ssim_v;
        summary.rows.push_back(row);
    }
    summary.mean_psnr = psnr_acc / static_cast<double>(held.size());
    summary.mean_ssim = ssim_acc / static_cast<double>(held.size());
    summary.spread_expanded_fraction = static_cast<double>(expanded) / static_cast<double>(held.size());
    return summary;
}

std::string single_factor_diff(const TrainConfig& a, const TrainConfig& b) {
    std::vector<std::string> diffs;
    auto cmp = [&](auto va, auto vb, const char* name) {
        if (va != vb) diffs.push_back(name);
    };
    cmp(a.model.events, b.model.events, "model.events");
    cmp(a.model.decoder_attention, b.model.decoder_attention, "model.decoder_attention");
    cmp(a.model.latent_ch, b.model.latent_ch, "model.latent_ch");
    if (a.codec != b.codec) diffs.push_back("codec");
    cmp(a.iterations, b.iterations, "iterations");
    cmp(a.batch, b.batch, "batch");
    cmp(a.lr, b.lr, "lr");
    cmp(a.weight_decay, b.weight_decay, "weight_decay");
    cmp(a.lambda_pix, b.lambda_pix, "lambda_pix");
    cmp(a.lambda_perc, b.lambda_perc, "lambda_perc");
    cmp(a.seed, b.seed, "seed");
    cmp(a.finetune_x0, b.finetune_x0, "finetune_x0");
    cmp(a.schedule_steps, b.schedule_steps, "schedule_steps");
    cmp(a.beta_start, b.beta_start, "beta_start");
    cmp(a.beta_end, b.beta_end, "beta_end");
    cmp(a.train_count, b.train_count, "train_count");
    cmp(a.held_count, b.held_count, "held_count");
    cmp(a.data.seed, b.data.seed, "data.seed");
    cmp(a.data.size, b.data.size, "data.size");
    cmp(a.data.count, b.data.count, "data.count");
    cmp(a.data.beta_min, b.data.beta_min, "data.beta_min");
    cmp(a.data.beta_max, b.data.beta_max, "data.beta_max");
    if (diffs.empty()) throw ValidationError("ablation configs are identical; nothing is ablated");
    if (diffs.size() > 1) {
        std::string msg = "ablation configs vary more than one factor:";
        for (const auto& d : diffs) msg += " " + d;
        throw ValidationError(msg);
    }
    return diffs[0];
}

AblationResult ablate(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                      std::ostream* log) {
    if (seeds.empty()) throw ValidationError("ablate: needs at least one seed");
    AblationResult result;
    struct Acc {
        double on_ddim15 = 0, off_ddim15 = 0, on_ddpm5 = 0, on_ddpm15 = 0, off_ddpm5 = 0, off_ddpm15 = 0;
    } acc;
    double spread_acc = 0.0;

    for (std::uint64_t seed : seeds) {
        TrainConfig cfg_on = base;
        cfg_on.seed = seed;
        cfg_on.data.seed = seed;
        cfg_on.data.count = base.train_count + base.held_count;
        cfg_on.model.events = true;
        TrainConfig cfg_off = cfg_on;
        cfg_off.model.events = false;
        single_factor_diff(cfg_on, cfg_off);  // harness precondition

        const std::vector<ToyPair> pairs = build_toy_dataset(cfg_on.data);
        const std::vector<ToyPair> train(pairs.begin(), pairs.begin() + base.train_count);
        const std::vector<ToyPair> held(pairs.end() - base.held_count, pairs.end());

        struct Variant {
            const char* name;
            const TrainConfig* cfg;
            ParamStore store;
            TrainResult trained;
            double wall = 0.0;
        } variants[2] = {{"on", &cfg_on, {}, {}, 0.0}, {"off", &cfg_off, {}, {}, 0.0}};

        for (auto& v : variants) {
            const auto start = std::chrono::steady_clock::now();
            v.trained = train_toy(*v.cfg, train, v.store, log);
            v.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (log) (*log) << "[ablate] seed " << seed << " events=" << v.name << " trained\n";
        }

        const struct {
            const char* name;
            SamplerSpec spec;
        } samplers[3] = {
            {"ddpm-5", {SamplerSpec::Kind::ddpm, 5, 0.0, SamplerSpec::Init::scheduled}},
            {"ddpm-15", {SamplerSpec::Kind::ddpm, 15, 0.0, SamplerSpec::Init::scheduled}},
            {"ddim-15", {SamplerSpec::Kind::ddim, 15, 0.0, SamplerSpec::Init::scheduled}},
        };

        for (auto& v : variants) {
            for (const auto& s : samplers) {
                const auto start = std::chrono::steady_clock::now();
                const EvalSummary ev = evaluate(v.store, v.trained.meta, held, s.spec, seed ^ 0x5A5A5AULL);
                const double wall =
                    v.wall + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::ostringstream name;
                name << "events=" << v.name << ",sampler=" << s.name << ",seed=" << seed;
                result.rows.push_back({name.str(), ev.mean_psnr, ev.mean_ssim, wall});
                if (log)
                    (*log) << "[ablate] " << name.str() << " psnr " << ev.mean_psnr << " ssim " << ev.mean_ssim
                           << "\n";
                const bool on = std::string(v.name) == "on";
                if (std::string(s.name) == "ddim-15") {
                    (on ? acc.on_ddim15 : acc.off_ddim15) += ev.mean_psnr;
                    if (on) spread_acc += ev.spread_expanded_fraction;
                } else if (std::string(s.name) == "ddpm-5") {
                    (on ? acc.on_ddpm5 : acc.off_ddpm5) += ev.mean_psnr;
                } else {
                    (on ? acc.on_ddpm15 : acc.off_ddpm15) += ev.mean_psnr;
                }
            }
        }
    }

    const double n = static_cast<double>(seeds.size());
    result.mean_psnr_events_on = acc.on_ddim15 / n;
    result.mean_psnr_events_off = acc.off_ddim15 / n;
    result.mean_psnr_ddim15 = acc.on_ddim15 / n;
    result.mean_psnr_ddpm5 = acc.on_ddpm5 / n;
    result.mean_psnr_ddpm15 = acc.on_ddpm15 / n;
    result.spread_expanded_fraction = spread_acc / n;
    return result;
}

void write_ablation_csv(const AblationResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "config,psnr_db,ssim,wall_seconds\n";
    for (const auto& row : result.rows)
        f << row.config << "," << row.psnr_db << "," << row.ssim_v << "," << row.wall_seconds << "\n";
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace evdiff
