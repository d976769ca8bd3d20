#pragma once

#include <string>

#include "evdiff/autodiff.hpp"
#include "evdiff/image.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Stand-in latent codec. identity maps images to [C,H,W] tensors untouched
// (decode(encode(x)) == x exactly); avgpool2 halves each spatial extent on
// encode and decodes with 2x bilinear upsampling.
enum class CodecMode { identity, avgpool2 };

CodecMode codec_mode_from_string(const std::string& s);
const char* codec_mode_name(CodecMode m);

class LatentCodec {
public:
    explicit LatentCodec(CodecMode mode) : mode_(mode) {}

    CodecMode mode() const { return mode_; }

    Tensor encode(const Image& img) const;
    Image decode(const Tensor& latent) const;

    // Differentiable decode into image space (values not clamped here).
    template <typename S>
    typename Graph<S>::Id decode_node(Graph<S>& g, typename Graph<S>::Id latent) const {
        if (mode_ == CodecMode::identity) return latent;
        return g.upsample2_bilinear(latent);
    }

    // Latent extents for an image of the given size.
    int latent_extent(int image_extent) const {
        return mode_ == CodecMode::identity ? image_extent : image_extent / 2;
    }

private:
    CodecMode mode_;
};

}  // namespace evdiff
