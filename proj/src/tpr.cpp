#include "evdiff/tpr.hpp"

#include "evdiff/errors.hpp"

namespace evdiff {

int tpr_bin_index(std::uint64_t t, std::uint64_t t0, std::uint64_t t1, int level, int bins) {
    const unsigned __int128 window = t1 - t0;
    const unsigned __int128 q = static_cast<unsigned __int128>(1) << (level - 1);
    const unsigned __int128 d = t1 - t;
    if (d * q > window) return -1;  // before this level's span
    const unsigned __int128 offset = window - d * q;          // position within span, scaled by q
    return static_cast<int>(offset * static_cast<unsigned>(bins) / window);
}

namespace {

int start_anchored_bin(std::uint64_t t, std::uint64_t t0, std::uint64_t t1, int level, int bins) {
    // span [t0, t0 + W/q); bin = (t - t0) * q * M / W when inside
    const unsigned __int128 window = t1 - t0;
    const unsigned __int128 q = static_cast<unsigned __int128>(1) << (level - 1);
    const unsigned __int128 d = t - t0;
    if (d * q >= window) return -1;
    return static_cast<int>(d * q * static_cast<unsigned>(bins) / window);
}

}  // namespace

TemporalPyramid build_tpr(const EventStream& stream, std::uint64_t t0, std::uint64_t t1, int levels,
                          int bins, bool anchor_end, bool normalize, bool split_polarity) {
    if (t0 >= t1) throw ValidationError("tpr window must satisfy t0 < t1");
    if (levels < 1 || bins < 1) throw ValidationError("tpr needs levels >= 1 and bins >= 1");
    if (stream.width <= 0 || stream.height <= 0) throw ValidationError("tpr needs positive sensor geometry");

    TemporalPyramid tpr;
    tpr.levels = levels;
    tpr.bins = bins;
    const int pol_ch = split_polarity ? 2 : 1;
    tpr.grid = Tensor::zeros({levels * bins * pol_ch, stream.height, stream.width});

    std::uint64_t in_window = 0;
    // channel blocks per level are disjoint, so levels can accumulate independently
#pragma omp parallel for schedule(static)
    for (int l = 1; l <= levels; ++l) {
        for (const Event& e : stream.events) {
            if (e.t < t0 || e.t >= t1) continue;
            const int bin = anchor_end ? tpr_bin_index(e.t, t0, t1, l, bins)
                                       : start_anchored_bin(e.t, t0, t1, l, bins);
            if (bin < 0) continue;
            int ch = (l - 1) * bins + bin;
            if (split_polarity) ch = ch * 2 + (e.p > 0 ? 0 : 1);
            tpr.grid.at3(ch, e.y, e.x) += split_polarity ? 1.0f : static_cast<float>(e.p);
        }
    }
    for (const Event& e : stream.events)
        if (e.t >= t0 && e.t < t1) ++in_window;

    if (normalize && in_window > 0) {
        const float inv = 1.0f / static_cast<float>(in_window);
        for (auto& v : tpr.grid.values()) v *= inv;
    }
    return tpr;
}

EventEncoder::EventEncoder(const EventEncoderConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    auto reg = [&](const char* name, std::vector<int> dims, int fan_in) {
        store.add(name, he_init(rng, dims, fan_in));
        return store.size() - 1;
    };
    auto reg_zero = [&](const char* name, std::vector<int> dims) {
        store.add(name, Tensor::zeros(dims));
        return store.size() - 1;
    };
    w1_ = reg("event_encoder.conv1.weight", {cfg.hidden1, cfg.in_ch, 3, 3}, cfg.in_ch * 9);
    b1_ = reg_zero("event_encoder.conv1.bias", {cfg.hidden1});
    w2_ = reg("event_encoder.conv2.weight", {cfg.hidden2, cfg.hidden1, 3, 3}, cfg.hidden1 * 9);
    b2_ = reg_zero("event_encoder.conv2.bias", {cfg.hidden2});
    w3_ = reg("event_encoder.conv3.weight", {cfg.out_ch, cfg.hidden2, 3, 3}, cfg.hidden2 * 9);
    b3_ = reg_zero("event_encoder.conv3.bias", {cfg.out_ch});
}

EventEncoder::EventEncoder(const EventEncoderConfig& cfg, const ParamStore& store) : cfg_(cfg) {
    auto need = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < store.size(); ++i)
            if (store[i].name == name) return i;
        throw ValidationError("checkpoint missing parameter: " + name);
    };
    w1_ = need("event_encoder.conv1.weight");
    b1_ = need("event_encoder.conv1.bias");
    w2_ = need("event_encoder.conv2.weight");
    b2_ = need("event_encoder.conv2.bias");
    w3_ = need("event_encoder.conv3.weight");
    b3_ = need("event_encoder.conv3.bias");
}

Tensor encode_events(const TemporalPyramid& tpr, const EventEncoder& encoder, const ParamStore& store) {
    const auto& d = tpr.grid.dims();
    if (d[0] != encoder.config().in_ch)
        throw DimensionError("encoder expects " + std::to_string(encoder.config().in_ch) +
                             " input channels, pyramid has " + std::to_string(d[0]));
    if (d[1] % 4 || d[2] % 4)
        throw DimensionError("encoder needs extents divisible by 4, got " + dims_to_string(d));
    Graph<float> g;
    auto ids = bind_params(g, store);
    return g.value(encoder.forward(g, ids, g.leaf(tpr.grid)));
}

}  // namespace evdiff
