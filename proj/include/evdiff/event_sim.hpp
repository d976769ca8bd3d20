#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evdiff/events.hpp"
#include "evdiff/image.hpp"

namespace evdiff {

// Camera motion as a 2-D similarity per sample: translation, rotation and
// scale about the image center. Timestamps strictly increasing, scale > 0.
struct MotionSample {
    std::uint64_t t = 0;  // microseconds
    double dx = 0.0;      // pixels
    double dy = 0.0;
    double rot = 0.0;     // radians
    double scale = 1.0;
};

struct MotionTrajectory {
    std::vector<MotionSample> samples;

    void validate() const;
};

// Contrast-threshold simulator parameters, log-intensity units.
struct SimConfig {
    double c_pos = 0.2;
    double c_neg = 0.2;
    std::uint64_t refractory_us = 0;
    double log_eps = 1e-3;  // floor before log() to avoid -inf at black pixels

    void validate() const;
};

struct TimedFrame {
    std::uint64_t t = 0;
    Image image;
};

// One warped frame per trajectory sample: similarity transform about the
// image center, bilinear sampling, edge replication outside the frame.
std::vector<TimedFrame> render_trajectory(const Image& img, const MotionTrajectory& traj);

// Per-pixel threshold-crossing simulation on linearly interpolated log
// intensity. Semantics:
//   - the reference level starts at the first frame's log intensity;
//   - each crossing of reference +/- c advances the reference by +/- c,
//     whether or not the event is emitted;
//   - a crossing is emitted unless it falls within refractory_us of the
//     previous *emitted* event at that pixel;
//   - reaching a threshold exactly counts as a crossing;
//   - emitted timestamps are the interpolated crossing instants rounded to
//     the nearest microsecond.
// Output is sorted by (t, y, x); same-cell ties keep crossing order.
EventStream simulate_events(const std::vector<TimedFrame>& frames, const SimConfig& cfg);

// Trajectory CSV: lines "t_us,dx,dy,rot,scale".
MotionTrajectory read_trajectory(const std::string& path);
void write_trajectory(const MotionTrajectory& traj, const std::string& path);

}  // namespace evdiff
