#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "evdiff/event_sim.hpp"
#include "evdiff/events.hpp"
#include "evdiff/rng.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff::testutil {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        base_ = std::filesystem::temp_directory_path() /
                ("evdiff_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(base_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(base_, ec);
    }
    std::string path(const std::string& name) const { return (base_ / name).string(); }

private:
    std::filesystem::path base_;
};

// Dense-time reference event simulator: walks the interpolated log-intensity
// signal of one pixel at 1 us resolution and applies the same
// reference-advance and refractory rules as the production simulator. Kept
// deliberately naive; used as the oracle for crossing counts and timestamps.
struct DenseEvent {
    std::uint64_t t;
    int p;
};

inline std::vector<DenseEvent> dense_pixel_events(const std::vector<double>& log_vals,
                                                  const std::vector<std::uint64_t>& times, double c_pos,
                                                  double c_neg, std::uint64_t refractory_us) {
    std::vector<DenseEvent> out;
    double ref = log_vals[0];
    bool any_emit = false;
    std::uint64_t last_emit = 0;
    for (std::uint64_t tick = times.front(); tick <= times.back(); ++tick) {
        // locate segment containing tick
        std::size_t seg = 1;
        while (seg + 1 < times.size() && tick > times[seg]) ++seg;
        const double t0 = static_cast<double>(times[seg - 1]);
        const double t1 = static_cast<double>(times[seg]);
        const double f = (static_cast<double>(tick) - t0) / (t1 - t0);
        const double level = log_vals[seg - 1] + f * (log_vals[seg] - log_vals[seg - 1]);
        while (level >= ref + c_pos) {
            if (!any_emit || tick >= last_emit + refractory_us) {
                out.push_back({tick, +1});
                last_emit = tick;
                any_emit = true;
            }
            ref += c_pos;
        }
        while (level <= ref - c_neg) {
            if (!any_emit || tick >= last_emit + refractory_us) {
                out.push_back({tick, -1});
                last_emit = tick;
                any_emit = true;
            }
            ref -= c_neg;
        }
    }
    return out;
}

// Brute-force voxelizer oracle: per event, recompute the level span and bin
// from the documented integer arithmetic and accumulate into a fresh grid.
inline Tensor brute_force_tpr(const EventStream& s, std::uint64_t t0, std::uint64_t t1, int levels,
                              int bins) {
    Tensor grid = Tensor::zeros({levels * bins, s.height, s.width});
    for (const Event& e : s.events) {
        if (e.t < t0 || e.t >= t1) continue;
        for (int l = 1; l <= levels; ++l) {
            const unsigned __int128 window = t1 - t0;
            const unsigned __int128 q = static_cast<unsigned __int128>(1) << (l - 1);
            const unsigned __int128 d = t1 - e.t;
            if (d * q > window) continue;
            const int bin = static_cast<int>((window - d * q) * static_cast<unsigned>(bins) / window);
            grid.at3((l - 1) * bins + bin, e.y, e.x) += static_cast<float>(e.p);
        }
    }
    return grid;
}

// Single-pixel frame ramp helper: builds n_frames frames of extent 1x1 whose
// log intensity follows the given values.
inline std::vector<TimedFrame> pixel_ramp(const std::vector<double>& intensities,
                                          const std::vector<std::uint64_t>& times) {
    std::vector<TimedFrame> frames(intensities.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        frames[i].t = times[i];
        frames[i].image = Image::zeros(1, 1, 1);
        frames[i].image.at(0, 0, 0) = static_cast<float>(intensities[i]);
    }
    return frames;
}

inline bool tensors_equal(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace evdiff::testutil
