#include "evdiff/haze.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evdiff/errors.hpp"

namespace evdiff {

HazeParams HazeParams::with_scalar(float t, std::vector<float> a) {
    HazeParams p;
    p.scalar_t = t;
    p.airlight = std::move(a);
    return p;
}

HazeParams HazeParams::with_map(Tensor t_map, std::vector<float> a) {
    HazeParams p;
    p.transmission = std::move(t_map);
    p.airlight = std::move(a);
    return p;
}

void HazeParams::validate(int height, int width, int channels) const {
    if (airlight.empty()) throw ValidationError("haze params: airlight missing");
    if (airlight.size() != 1 && static_cast<int>(airlight.size()) != channels)
        throw DimensionError("haze params: airlight has " + std::to_string(airlight.size()) +
                             " channels, image has " + std::to_string(channels));
    for (float a : airlight)
        if (!(a >= 0.0f && a <= 1.0f)) throw ValidationError("haze params: airlight outside [0,1]");
    if (has_map()) {
        if (transmission.dims().size() != 2 || transmission.dims()[0] != height ||
            transmission.dims()[1] != width)
            throw DimensionError("haze params: transmission map " + dims_to_string(transmission.dims()) +
                                 " does not match image " + std::to_string(height) + "x" + std::to_string(width));
        for (float t : transmission.values())
            if (!(t >= 0.0f && t <= 1.0f)) throw ValidationError("haze params: transmission outside [0,1]");
    } else {
        if (!(scalar_t >= 0.0f && scalar_t <= 1.0f))
            throw ValidationError("haze params: scalar transmission outside [0,1]");
    }
}

Image synthesize_haze(const Image& clean, const HazeParams& params) {
    params.validate(clean.height, clean.width, clean.channels);
    Image out = Image::zeros(clean.height, clean.width, clean.channels);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < clean.channels; ++c) {
        const float a = params.a_for_channel(c);
        for (int y = 0; y < clean.height; ++y)
            for (int x = 0; x < clean.width; ++x) {
                const float t = params.t_at(y, x);
                out.at(c, y, x) = std::clamp(clean.at(c, y, x) * t + a * (1.0f - t), 0.0f, 1.0f);
            }
    }
    return out;
}

Image invert_haze(const Image& hazy, const HazeParams& params, float t_floor, bool strict) {
    params.validate(hazy.height, hazy.width, hazy.channels);
    if (!(t_floor > 0.0f)) throw ValidationError("invert_haze: t_floor must be positive");
    Image out = Image::zeros(hazy.height, hazy.width, hazy.channels);
    for (int y = 0; y < hazy.height; ++y)
        for (int x = 0; x < hazy.width; ++x) {
            const float t = params.t_at(y, x);
            if (strict && t < t_floor)
                throw ValidationError("invert_haze: transmission " + std::to_string(t) + " below floor at pixel (x=" +
                                      std::to_string(x) + ", y=" + std::to_string(y) + ")");
            const float td = std::max(t, t_floor);
            for (int c = 0; c < hazy.channels; ++c) {
                const float a = params.a_for_channel(c);
                out.at(c, y, x) = std::clamp((hazy.at(c, y, x) - a * (1.0f - t)) / td, 0.0f, 1.0f);
            }
        }
    return out;
}

Tensor transmission_from_depth(const Tensor& depth, float beta) {
    if (depth.dims().size() != 2)
        throw DimensionError("depth map must be [H,W], got " + dims_to_string(depth.dims()));
    if (beta < 0.0f) throw ValidationError("scattering coefficient beta must be >= 0");
    for (float d : depth.values())
        if (d < 0.0f) throw ValidationError("depth must be >= 0");
    Tensor t = Tensor::zeros(depth.dims());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(depth.size()); ++i)
        t[i] = std::exp(-beta * depth[static_cast<std::size_t>(i)]);
    return t;
}

DrReport dynamic_range_report(double k, double j_min, double t, double airlight) {
    if (!(k > 1.0)) throw ValidationError("dynamic range report: k must exceed 1 (degenerate scene)");
    if (!(j_min > 0.0)) throw ValidationError("dynamic range report: j_min must be positive");
    if (!(t > 0.0 && t < 1.0)) throw ValidationError("dynamic range report: t must lie in (0,1)");
    if (!(airlight > 0.0)) throw ValidationError("dynamic range report: airlight must be positive");
    DrReport r;
    r.k = k;
    r.a = j_min * t;
    r.b = airlight * (1.0 - t);
    r.dr_obs = (k * r.a + r.b) / (r.a + r.b);
    r.compressed = r.dr_obs < k;
    return r;
}

HistogramSummary intensity_histogram(const Image& img, int bins) {
    if (bins < 2) throw ValidationError("histogram needs at least 2 bins");
    HistogramSummary h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    double mn = 1.0, mx = 0.0;
    for (float v : img.values) {
        const double d = std::clamp(static_cast<double>(v), 0.0, 1.0);
        mn = std::min(mn, d);
        mx = std::max(mx, d);
        int b = static_cast<int>(d * bins);   // half-open bins ...
        if (b >= bins) b = bins - 1;          // ... except the last, which includes 1.0
        ++h.counts[static_cast<std::size_t>(b)];
    }
    h.min_value = mn;
    h.max_value = mx;
    h.spread = mx / std::max(mn, 1.0 / 255.0);
    return h;
}

}  // namespace evdiff
