#include "evdiff/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "evdiff/errors.hpp"
#include "evdiff/kernels.hpp"

namespace evdiff {

void MotionTrajectory::validate() const {
    if (samples.empty()) throw ValidationError("trajectory must be nonempty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].scale > 0.0))
            throw ValidationError("trajectory sample " + std::to_string(i + 1) + ": scale must be positive");
        if (i > 0 && samples[i].t <= samples[i - 1].t)
            throw ValidationError("trajectory timestamps must be strictly increasing at sample " +
                                  std::to_string(i + 1));
    }
}

void SimConfig::validate() const {
    if (!(c_pos > 0.0) || !(c_neg > 0.0))
        throw ValidationError("contrast thresholds must be positive");
    if (!(log_eps > 0.0)) throw ValidationError("log_eps must be positive");
}

std::vector<TimedFrame> render_trajectory(const Image& img, const MotionTrajectory& traj) {
    if (img.values.empty()) throw ValidationError("render_trajectory: image is empty");
    traj.validate();
    std::vector<TimedFrame> frames(traj.samples.size());
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const MotionSample& m = traj.samples[i];
        frames[i].t = m.t;
        frames[i].image = Image::zeros(img.height, img.width, img.channels);
        kernels::warp_similarity(frames[i].image.values.data(), img.values.data(), img.channels,
                                 img.height, img.width, m.dx, m.dy, m.rot, m.scale);
    }
    return frames;
}

namespace {

struct PixelCrossing {
    double t;  // exact crossing instant, microseconds
    int p;
};

// Crossings of one pixel's piecewise-linear log-intensity signal, with the
// reference-advance and refractory rules from the header.
void pixel_crossings(const std::vector<double>& log_vals, const std::vector<std::uint64_t>& times,
                     const SimConfig& cfg, std::vector<PixelCrossing>& out) {
    double ref = log_vals[0];
    double last_emit = -1.0;
    bool any_emit = false;
    for (std::size_t s = 1; s < log_vals.size(); ++s) {
        const double l0 = log_vals[s - 1], l1 = log_vals[s];
        const double t0 = static_cast<double>(times[s - 1]), t1 = static_cast<double>(times[s]);
        if (l1 > l0) {
            double theta = ref + cfg.c_pos;
            while (theta <= l1) {
                const double tc = t0 + (theta - l0) / (l1 - l0) * (t1 - t0);
                if (!any_emit || tc >= last_emit + static_cast<double>(cfg.refractory_us)) {
                    out.push_back({tc, +1});
                    last_emit = tc;
                    any_emit = true;
                }
                ref += cfg.c_pos;
                theta = ref + cfg.c_pos;
            }
        } else if (l1 < l0) {
            double theta = ref - cfg.c_neg;
            while (theta >= l1) {
                const double tc = t0 + (theta - l0) / (l1 - l0) * (t1 - t0);
                if (!any_emit || tc >= last_emit + static_cast<double>(cfg.refractory_us)) {
                    out.push_back({tc, -1});
                    last_emit = tc;
                    any_emit = true;
                }
                ref -= cfg.c_neg;
                theta = ref - cfg.c_neg;
            }
        }
    }
}

}  // namespace

EventStream simulate_events(const std::vector<TimedFrame>& frames, const SimConfig& cfg) {
    cfg.validate();
    if (frames.size() < 2) throw ValidationError("simulate_events needs at least 2 frames");
    const Image& first = frames[0].image;
    if (first.channels != 1) throw ValidationError("simulate_events expects single-channel frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].image.same_shape(first))
            throw DimensionError("frame " + std::to_string(i) + " shape differs");
        if (i > 0 && frames[i].t <= frames[i - 1].t)
            throw ValidationError("frame timestamps must be strictly increasing at frame " + std::to_string(i));
    }

    const int h = first.height, w = first.width;
    const std::size_t n_frames = frames.size();
    std::vector<std::uint64_t> times(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) times[i] = frames[i].t;

    std::vector<std::vector<Event>> per_row(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::vector<double> logs(n_frames);
        std::vector<PixelCrossing> crossings;
        for (int x = 0; x < w; ++x) {
            for (std::size_t s = 0; s < n_frames; ++s)
                logs[s] = std::log(std::max(static_cast<double>(frames[s].image.at(0, y, x)), cfg.log_eps));
            crossings.clear();
            pixel_crossings(logs, times, cfg, crossings);
            for (const PixelCrossing& c : crossings)
                per_row[static_cast<std::size_t>(y)].push_back(
                    Event{static_cast<std::uint64_t>(std::llround(c.t)), static_cast<std::uint16_t>(x),
                          static_cast<std::uint16_t>(y), c.p});
        }
    }

    EventStream out;
    out.width = w;
    out.height = h;
    for (auto& row : per_row) out.events.insert(out.events.end(), row.begin(), row.end());
    // rows were appended in (y, x, crossing) order; stable sort gives the
    // documented (t, y, x) order with same-cell ties preserved
    std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    validate_stream(out);
    return out;
}

MotionTrajectory read_trajectory(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    MotionTrajectory traj;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        MotionSample m;
        char c1, c2, c3, c4;
        long long t;
        std::istringstream ss(line);
        if (!(ss >> t >> c1 >> m.dx >> c2 >> m.dy >> c3 >> m.rot >> c4 >> m.scale) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',' || t < 0)
            throw FormatError(path, lineno, "unparsable trajectory line " + std::to_string(lineno) + ": \"" + line + "\"");
        m.t = static_cast<std::uint64_t>(t);
        traj.samples.push_back(m);
    }
    traj.validate();
    return traj;
}

void write_trajectory(const MotionTrajectory& traj, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (const MotionSample& m : traj.samples)
        f << m.t << "," << m.dx << "," << m.dy << "," << m.rot << "," << m.scale << "\n";
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace evdiff
