#pragma once

#include <cstdint>
#include <vector>

#include "evdiff/image.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Atmospheric scattering parameters. Air-light may be per channel (all
// channels equal reduces to the scalar case); transmission is either a
// scalar or a per-pixel [H,W] map.
struct HazeParams {
    std::vector<float> airlight;   // size 1 or image channel count, values in [0,1]
    Tensor transmission;           // [H,W]; empty if scalar_t is used
    float scalar_t = -1.0f;        // in [0,1] when >= 0
    float beta = 0.0f;             // only meaningful when transmission came from depth

    static HazeParams with_scalar(float t, std::vector<float> a);
    static HazeParams with_map(Tensor t_map, std::vector<float> a);

    bool has_map() const { return !transmission.empty(); }
    float t_at(int y, int x) const { return has_map() ? transmission.at2(y, x) : scalar_t; }
    float a_for_channel(int c) const { return airlight.size() == 1 ? airlight[0] : airlight[c]; }
    void validate(int height, int width, int channels) const;
};

// Constant-transmission dynamic-range compression summary.
struct DrReport {
    double k = 0.0;       // true dynamic range
    double a = 0.0;       // j_min * t
    double b = 0.0;       // airlight * (1 - t)
    double dr_obs = 0.0;  // (k*a + b) / (a + b)
    bool compressed = false;
};

// I = J*t + A*(1-t) per pixel/channel; the clamp only guards float rounding.
Image synthesize_haze(const Image& clean, const HazeParams& params);

// J = (I - A*(1-t)) / max(t, t_floor). In strict mode any requested pixel
// with t below the floor is an error naming that pixel.
Image invert_haze(const Image& hazy, const HazeParams& params, float t_floor = 0.01f,
                  bool strict = false);

// t = exp(-beta * depth), elementwise over an [H,W] depth map.
Tensor transmission_from_depth(const Tensor& depth, float beta);

DrReport dynamic_range_report(double k, double j_min, double t, double airlight);

struct HistogramSummary {
    std::vector<std::uint64_t> counts;
    double min_value = 0.0;
    double max_value = 0.0;
    double spread = 0.0;  // max / max(min, 1/255)
};

// Equal-width bins over [0,1], half-open except the last.
HistogramSummary intensity_histogram(const Image& img, int bins);

}  // namespace evdiff
