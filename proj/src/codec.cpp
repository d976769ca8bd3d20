#include "evdiff/codec.hpp"

#include "evdiff/errors.hpp"
#include "evdiff/kernels.hpp"

namespace evdiff {

CodecMode codec_mode_from_string(const std::string& s) {
    if (s == "identity") return CodecMode::identity;
    if (s == "avgpool2") return CodecMode::avgpool2;
    throw ValidationError("unknown codec mode: " + s + " (expected identity|avgpool2)");
}

const char* codec_mode_name(CodecMode m) { return m == CodecMode::identity ? "identity" : "avgpool2"; }

Tensor LatentCodec::encode(const Image& img) const {
    Tensor t = image_to_tensor(img);
    if (mode_ == CodecMode::identity) return t;
    const auto& d = t.dims();
    if (d[1] % 2 || d[2] % 2)
        throw DimensionError("avgpool2 codec needs even image extents, got " + dims_to_string(d));
    Tensor out = Tensor::zeros({d[0], d[1] / 2, d[2] / 2});
    kernels::avgpool2_forward(out.data(), t.data(), d[0], d[1], d[2]);
    return out;
}

Image LatentCodec::decode(const Tensor& latent) const {
    if (latent.dims().size() != 3)
        throw DimensionError("latent must be [C,H,W], got " + dims_to_string(latent.dims()));
    if (mode_ == CodecMode::identity) return tensor_to_image(latent);
    const auto& d = latent.dims();
    Tensor up = Tensor::zeros({d[0], d[1] * 2, d[2] * 2});
    kernels::upsample2_bilinear_forward(up.data(), latent.data(), d[0], d[1], d[2]);
    return tensor_to_image(up);
}

}  // namespace evdiff
