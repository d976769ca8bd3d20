#pragma once

#include <string>
#include <vector>

#include "evdiff/autodiff.hpp"
#include "evdiff/tpr.hpp"

namespace evdiff {

// Latent-space eps-predictor: three conv+pool down stages, a bottleneck with
// one cross-attention block queried by the event feature, and three
// upsample+conv stages with skip connections. The hazy latent is concatenated
// to x_t at the input; the timestep enters as a sinusoidal embedding
// projected and added channelwise after the first conv. Attention output
// re-enters through a zero-initialized pointwise projection added residually,
// so an untrained guidance path is a no-op.
struct DenoiserConfig {
    int latent_ch = 1;
    int c1 = 12;
    int c2 = 16;
    int c3 = 24;
    int cb = 32;
    int temb_dim = 32;
    int attn_dim = 32;         // query/key dim d and value dim d_v
    int event_feature_ch = 32; // channels of x_e
    bool events = true;
    bool decoder_attention = false;  // adds attention at the two coarsest decoder stages
};

class ToyDenoiser {
public:
    // Registers parameters; each tensor is drawn from an rng seeded by
    // (seed, parameter name), so models sharing a seed share the weights of
    // every parameter they have in common regardless of registration order.
    ToyDenoiser(const DenoiserConfig& cfg, ParamStore& store, std::uint64_t seed);
    // Attaches to already-loaded parameters.
    ToyDenoiser(const DenoiserConfig& cfg, const ParamStore& store);

    const DenoiserConfig& config() const { return cfg_; }

    // x_t, x_hz: [latent_ch,H,W] leaves; x_e: [event_feature_ch,He,We] leaf or
    // -1 when the model is unconditioned. H and W must be divisible by 8.
    template <typename S>
    typename Graph<S>::Id forward(Graph<S>& g, const std::vector<int>& pids, typename Graph<S>::Id x_t,
                                  typename Graph<S>::Id x_hz, int t, typename Graph<S>::Id x_e) const;

private:
    struct AttnSite {
        std::size_t wq, wk, wv, proj_w, proj_b;
    };

    std::size_t register_param(ParamStore& store, const std::string& name, const std::vector<int>& dims,
                               int fan_in, std::uint64_t seed, bool zero);
    static std::size_t find_param(const ParamStore& store, const std::string& name,
                                  const std::vector<int>& dims);
    AttnSite make_attn(ParamStore& store, const std::string& prefix, int feat_ch, std::uint64_t seed);
    AttnSite find_attn(const ParamStore& store, const std::string& prefix, int feat_ch) const;

    template <typename S>
    typename Graph<S>::Id apply_attn(Graph<S>& g, const std::vector<int>& pids, const AttnSite& site,
                                     typename Graph<S>::Id feat, typename Graph<S>::Id x_e) const;

    DenoiserConfig cfg_;
    std::size_t conv_in_w_, conv_in_b_;
    std::size_t temb_w_, temb_b_;
    std::size_t d2_w_, d2_b_, d3_w_, d3_b_, bb_w_, bb_b_;
    std::size_t u3_w_, u3_b_, u2_w_, u2_b_, u1_w_, u1_b_;
    std::size_t out_w_, out_b_;
    AttnSite attn_bb_{};
    AttnSite attn_u3_{}, attn_u2_{};
};

// Pools (or nearest-upsamples) a [C,H,W] node until it reaches the target
// spatial extents; extents must be related by powers of two.
template <typename S>
typename Graph<S>::Id match_spatial(Graph<S>& g, typename Graph<S>::Id id, int th, int tw) {
    auto cur = [&] { return g.value(id).dims(); };
    while (cur()[1] > th && cur()[2] > tw) id = g.avgpool2(id);
    while (cur()[1] < th && cur()[2] < tw) id = g.upsample2_nearest(id);
    if (cur()[1] != th || cur()[2] != tw)
        throw DimensionError("cannot match spatial extents " + dims_to_string(cur()) + " to " +
                             std::to_string(th) + "x" + std::to_string(tw));
    return id;
}

template <typename S>
typename Graph<S>::Id ToyDenoiser::apply_attn(Graph<S>& g, const std::vector<int>& pids,
                                              const AttnSite& site, typename Graph<S>::Id feat,
                                              typename Graph<S>::Id x_e) const {
    const std::vector<int> fd = g.value(feat).dims();  // copy: pushes reallocate
    auto xe = match_spatial(g, x_e, fd[1], fd[2]);
    auto attended = cross_attention(g, xe, feat, pids[site.wq], pids[site.wk], pids[site.wv]);
    auto projected = g.conv2d(attended, pids[site.proj_w], pids[site.proj_b], 1, 0);
    return g.add(feat, projected);
}

template <typename S>
typename Graph<S>::Id ToyDenoiser::forward(Graph<S>& g, const std::vector<int>& pids,
                                           typename Graph<S>::Id x_t, typename Graph<S>::Id x_hz, int t,
                                           typename Graph<S>::Id x_e) const {
    if (cfg_.events && x_e < 0) throw ValidationError("event-conditioned denoiser needs x_e");

    auto x_in = g.concat_ch(x_t, x_hz);
    auto h1 = g.relu(g.conv2d(x_in, pids[conv_in_w_], pids[conv_in_b_], 1, 1));
    // timestep embedding, projected to stage-1 channels and broadcast
    auto emb = g.leaf(sinusoidal_embedding(t, cfg_.temb_dim).template cast<S>());
    auto emb_row = g.reshape(emb, {1, cfg_.temb_dim});
    auto temb = g.reshape(g.linear(emb_row, pids[temb_w_], pids[temb_b_]), {cfg_.c1});
    h1 = g.add_channel_bias(h1, temb);

    auto h2 = g.relu(g.conv2d(g.avgpool2(h1), pids[d2_w_], pids[d2_b_], 1, 1));
    auto h3 = g.relu(g.conv2d(g.avgpool2(h2), pids[d3_w_], pids[d3_b_], 1, 1));
    auto bb = g.relu(g.conv2d(g.avgpool2(h3), pids[bb_w_], pids[bb_b_], 1, 1));

    if (cfg_.events) bb = apply_attn(g, pids, attn_bb_, bb, x_e);

    auto u3 = g.relu(g.conv2d(g.concat_ch(g.upsample2_nearest(bb), h3), pids[u3_w_], pids[u3_b_], 1, 1));
    if (cfg_.events && cfg_.decoder_attention) u3 = apply_attn(g, pids, attn_u3_, u3, x_e);
    auto u2 = g.relu(g.conv2d(g.concat_ch(g.upsample2_nearest(u3), h2), pids[u2_w_], pids[u2_b_], 1, 1));
    if (cfg_.events && cfg_.decoder_attention) u2 = apply_attn(g, pids, attn_u2_, u2, x_e);
    auto u1 = g.relu(g.conv2d(g.concat_ch(g.upsample2_nearest(u2), h1), pids[u1_w_], pids[u1_b_], 1, 1));
    return g.conv2d(u1, pids[out_w_], pids[out_b_], 1, 1);
}

}  // namespace evdiff
