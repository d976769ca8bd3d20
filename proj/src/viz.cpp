#include "evdiff/viz.hpp"

#include <algorithm>
#include <cmath>

#include "evdiff/errors.hpp"

namespace evdiff {

void heat_colormap(float v, float rgb[3]) {
    static constexpr float stops[5][3] = {
        {0.00f, 0.00f, 0.20f}, {0.05f, 0.25f, 0.90f}, {0.10f, 0.90f, 0.90f},
        {0.95f, 0.90f, 0.20f}, {1.00f, 1.00f, 1.00f},
    };
    const float x = std::clamp(v, 0.0f, 1.0f) * 4.0f;
    const int lo = std::min(3, static_cast<int>(x));
    const float f = x - lo;
    for (int c = 0; c < 3; ++c) rgb[c] = stops[lo][c] + f * (stops[lo + 1][c] - stops[lo][c]);
}

Image visualize_feature(const Tensor& feature) {
    const auto& d = feature.dims();
    if (d.size() != 3) throw DimensionError("feature must be [C,H,W], got " + dims_to_string(d));
    const int ch = d[0], h = d[1], w = d[2];

    // summed in sorted order so the map is exactly channel-permutation invariant
    Tensor mean_abs = Tensor::zeros({h, w});
    std::vector<float> vals(static_cast<std::size_t>(ch));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) vals[static_cast<std::size_t>(c)] = std::abs(feature.at3(c, y, x));
            std::sort(vals.begin(), vals.end());
            double acc = 0.0;
            for (float v : vals) acc += v;
            mean_abs.at2(y, x) = static_cast<float>(acc / ch);
        }
    float mn = mean_abs[0], mx = mean_abs[0];
    for (float v : mean_abs.values()) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const float range = mx - mn;

    Image out = Image::zeros(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float v = range > 0.0f ? (mean_abs[static_cast<std::size_t>(y) * w + x] - mn) / range : 0.0f;
            float rgb[3];
            heat_colormap(v, rgb);
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = rgb[c];
        }
    return out;
}

}  // namespace evdiff
