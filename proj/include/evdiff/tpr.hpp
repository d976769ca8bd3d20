#pragma once

#include <cstdint>

#include "evdiff/autodiff.hpp"
#include "evdiff/events.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Multi-level, multi-bin voxelization of an event window. Level l of L
// covers the end-anchored span [t1 - (t1-t0)/2^(l-1), t1); each level is
// split into M equal half-open bins; events add their signed polarity to
// their bin's (y,x) cell. Grid dims are [L*M, H, W], channel = (l-1)*M + bin.
struct TemporalPyramid {
    int levels = 3;
    int bins = 2;
    Tensor grid;  // [L*M, H, W]
};

// Bin assignment is defined in exact integer arithmetic so independent
// implementations agree bit-for-bit:
//   W = t1 - t0, q = 2^(l-1), d = t1 - t       (event in level iff d*q <= W)
//   bin = (W - d*q) * M / W                    (integer division)
// Returns -1 when the event lies outside the level's span.
int tpr_bin_index(std::uint64_t t, std::uint64_t t0, std::uint64_t t1, int level, int bins);

// `anchor_end` selects the documented end-anchored spans; false anchors the
// halving at the window start instead (spans [t0, t0 + W/2^(l-1))).
TemporalPyramid build_tpr(const EventStream& stream, std::uint64_t t0, std::uint64_t t1, int levels,
                          int bins, bool anchor_end = true, bool normalize = false,
                          bool split_polarity = false);

// Three conv stages (3x3, stride 1, pad 1) with relu, average-pooled after
// stages 1 and 2, so the feature is H/4 x W/4 with out_ch channels.
struct EventEncoderConfig {
    int in_ch = 6;  // levels * bins
    int hidden1 = 16;
    int hidden2 = 32;
    int out_ch = 32;
};

class EventEncoder {
public:
    // Registers parameters (he-init from rng) into the store.
    EventEncoder(const EventEncoderConfig& cfg, ParamStore& store, Rng& rng);
    // Attaches to already-present parameters (checkpoint load path).
    EventEncoder(const EventEncoderConfig& cfg, const ParamStore& store);

    const EventEncoderConfig& config() const { return cfg_; }

    // param_ids must be the store-order leaf ids from bind_params().
    template <typename S>
    typename Graph<S>::Id forward(Graph<S>& g, const std::vector<int>& param_ids,
                                  typename Graph<S>::Id tpr) const {
        auto h1 = g.avgpool2(g.relu(g.conv2d(tpr, param_ids[w1_], param_ids[b1_], 1, 1)));
        auto h2 = g.avgpool2(g.relu(g.conv2d(h1, param_ids[w2_], param_ids[b2_], 1, 1)));
        return g.relu(g.conv2d(h2, param_ids[w3_], param_ids[b3_], 1, 1));
    }

private:
    EventEncoderConfig cfg_;
    std::size_t w1_, b1_, w2_, b2_, w3_, b3_;
};

// Creates one graph leaf per parameter, in store order, and returns the ids.
template <typename S>
std::vector<int> bind_params(Graph<S>& g, const ParamStore& store) {
    std::vector<int> ids;
    ids.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
        ids.push_back(g.leaf(store[i].value.template cast<S>(), true));
    return ids;
}

// Inference wrapper: runs the encoder on a pyramid and returns x_e.
Tensor encode_events(const TemporalPyramid& tpr, const EventEncoder& encoder, const ParamStore& store);

}  // namespace evdiff
