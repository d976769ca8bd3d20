#include "evdiff/denoiser.hpp"

namespace evdiff {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::size_t ToyDenoiser::register_param(ParamStore& store, const std::string& name,
                                        const std::vector<int>& dims, int fan_in, std::uint64_t seed,
                                        bool zero) {
    if (zero) {
        store.add(name, Tensor::zeros(dims));
    } else {
        std::uint64_t mix = seed ^ fnv1a(name);
        Rng rng(Rng::splitmix64(mix));
        store.add(name, he_init(rng, dims, fan_in));
    }
    return store.size() - 1;
}

std::size_t ToyDenoiser::find_param(const ParamStore& store, const std::string& name,
                                    const std::vector<int>& dims) {
    for (std::size_t i = 0; i < store.size(); ++i)
        if (store[i].name == name) {
            if (store[i].value.dims() != dims)
                throw DimensionError("checkpoint parameter " + name + " has dims " +
                                     dims_to_string(store[i].value.dims()) + ", expected " + dims_to_string(dims));
            return i;
        }
    throw ValidationError("checkpoint missing parameter: " + name);
}

ToyDenoiser::AttnSite ToyDenoiser::make_attn(ParamStore& store, const std::string& prefix, int feat_ch,
                                             std::uint64_t seed) {
    AttnSite s;
    s.wq = register_param(store, prefix + ".wq", {cfg_.event_feature_ch, cfg_.attn_dim},
                          cfg_.event_feature_ch, seed, false);
    s.wk = register_param(store, prefix + ".wk", {feat_ch, cfg_.attn_dim}, feat_ch, seed, false);
    s.wv = register_param(store, prefix + ".wv", {feat_ch, cfg_.attn_dim}, feat_ch, seed, false);
    // zero-init so the guidance path starts as identity
    s.proj_w = register_param(store, prefix + ".proj.weight", {feat_ch, cfg_.attn_dim, 1, 1},
                              cfg_.attn_dim, seed, true);
    s.proj_b = register_param(store, prefix + ".proj.bias", {feat_ch}, 1, seed, true);
    return s;
}

ToyDenoiser::AttnSite ToyDenoiser::find_attn(const ParamStore& store, const std::string& prefix,
                                             int feat_ch) const {
    AttnSite s;
    s.wq = find_param(store, prefix + ".wq", {cfg_.event_feature_ch, cfg_.attn_dim});
    s.wk = find_param(store, prefix + ".wk", {feat_ch, cfg_.attn_dim});
    s.wv = find_param(store, prefix + ".wv", {feat_ch, cfg_.attn_dim});
    s.proj_w = find_param(store, prefix + ".proj.weight", {feat_ch, cfg_.attn_dim, 1, 1});
    s.proj_b = find_param(store, prefix + ".proj.bias", {feat_ch});
    return s;
}

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg, ParamStore& store, std::uint64_t seed) : cfg_(cfg) {
    const int in_ch = 2 * cfg.latent_ch;
    auto reg = [&](const std::string& name, std::vector<int> dims, int fan_in, bool zero = false) {
        return register_param(store, name, dims, fan_in, seed, zero);
    };
    conv_in_w_ = reg("denoiser.conv_in.weight", {cfg.c1, in_ch, 3, 3}, in_ch * 9);
    conv_in_b_ = reg("denoiser.conv_in.bias", {cfg.c1}, 1, true);
    temb_w_ = reg("denoiser.temb.weight", {cfg.temb_dim, cfg.c1}, cfg.temb_dim);
    temb_b_ = reg("denoiser.temb.bias", {cfg.c1}, 1, true);
    d2_w_ = reg("denoiser.down2.weight", {cfg.c2, cfg.c1, 3, 3}, cfg.c1 * 9);
    d2_b_ = reg("denoiser.down2.bias", {cfg.c2}, 1, true);
    d3_w_ = reg("denoiser.down3.weight", {cfg.c3, cfg.c2, 3, 3}, cfg.c2 * 9);
    d3_b_ = reg("denoiser.down3.bias", {cfg.c3}, 1, true);
    bb_w_ = reg("denoiser.bottleneck.weight", {cfg.cb, cfg.c3, 3, 3}, cfg.c3 * 9);
    bb_b_ = reg("denoiser.bottleneck.bias", {cfg.cb}, 1, true);
    u3_w_ = reg("denoiser.up3.weight", {cfg.c3, cfg.cb + cfg.c3, 3, 3}, (cfg.cb + cfg.c3) * 9);
    u3_b_ = reg("denoiser.up3.bias", {cfg.c3}, 1, true);
    u2_w_ = reg("denoiser.up2.weight", {cfg.c2, cfg.c3 + cfg.c2, 3, 3}, (cfg.c3 + cfg.c2) * 9);
    u2_b_ = reg("denoiser.up2.bias", {cfg.c2}, 1, true);
    u1_w_ = reg("denoiser.up1.weight", {cfg.c1, cfg.c2 + cfg.c1, 3, 3}, (cfg.c2 + cfg.c1) * 9);
    u1_b_ = reg("denoiser.up1.bias", {cfg.c1}, 1, true);
    // zero-init output: the untrained model predicts zero noise
    out_w_ = reg("denoiser.conv_out.weight", {cfg.latent_ch, cfg.c1, 3, 3}, cfg.c1 * 9, true);
    out_b_ = reg("denoiser.conv_out.bias", {cfg.latent_ch}, 1, true);
    if (cfg.events) {
        attn_bb_ = make_attn(store, "denoiser.attn_bottleneck", cfg.cb, seed);
        if (cfg.decoder_attention) {
            attn_u3_ = make_attn(store, "denoiser.attn_up3", cfg.c3, seed);
            attn_u2_ = make_attn(store, "denoiser.attn_up2", cfg.c2, seed);
        }
    }
}

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg, const ParamStore& store) : cfg_(cfg) {
    const int in_ch = 2 * cfg.latent_ch;
    conv_in_w_ = find_param(store, "denoiser.conv_in.weight", {cfg.c1, in_ch, 3, 3});
    conv_in_b_ = find_param(store, "denoiser.conv_in.bias", {cfg.c1});
    temb_w_ = find_param(store, "denoiser.temb.weight", {cfg.temb_dim, cfg.c1});
    temb_b_ = find_param(store, "denoiser.temb.bias", {cfg.c1});
    d2_w_ = find_param(store, "denoiser.down2.weight", {cfg.c2, cfg.c1, 3, 3});
    d2_b_ = find_param(store, "denoiser.down2.bias", {cfg.c2});
    d3_w_ = find_param(store, "denoiser.down3.weight", {cfg.c3, cfg.c2, 3, 3});
    d3_b_ = find_param(store, "denoiser.down3.bias", {cfg.c3});
    bb_w_ = find_param(store, "denoiser.bottleneck.weight", {cfg.cb, cfg.c3, 3, 3});
    bb_b_ = find_param(store, "denoiser.bottleneck.bias", {cfg.cb});
    u3_w_ = find_param(store, "denoiser.up3.weight", {cfg.c3, cfg.cb + cfg.c3, 3, 3});
    u3_b_ = find_param(store, "denoiser.up3.bias", {cfg.c3});
    u2_w_ = find_param(store, "denoiser.up2.weight", {cfg.c2, cfg.c3 + cfg.c2, 3, 3});
    u2_b_ = find_param(store, "denoiser.up2.bias", {cfg.c2});
    u1_w_ = find_param(store, "denoiser.up1.weight", {cfg.c1, cfg.c2 + cfg.c1, 3, 3});
    u1_b_ = find_param(store, "denoiser.up1.bias", {cfg.c1});
    out_w_ = find_param(store, "denoiser.conv_out.weight", {cfg.latent_ch, cfg.c1, 3, 3});
    out_b_ = find_param(store, "denoiser.conv_out.bias", {cfg.latent_ch});
    if (cfg.events) {
        attn_bb_ = find_attn(store, "denoiser.attn_bottleneck", cfg.cb);
        if (cfg.decoder_attention) {
            attn_u3_ = find_attn(store, "denoiser.attn_up3", cfg.c3);
            attn_u2_ = find_attn(store, "denoiser.attn_up2", cfg.c2);
        }
    }
}

}  // namespace evdiff
