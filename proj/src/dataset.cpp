#include "evdiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evdiff/errors.hpp"
#include "evdiff/tensor_io.hpp"
#include "evdiff/version.hpp"

namespace evdiff {

namespace {

Image quantized(const Image& img) {
    Image out = img;
    for (auto& v : out.values) v = dequantize_byte(quantize_byte(v));
    return out;
}

Image random_scene(Rng& rng, int size) {
    Image img = Image::zeros(size, size, 1);
    // background gradient along a random direction
    const double gx = rng.uniform() * 2.0 - 1.0;
    const double gy = rng.uniform() * 2.0 - 1.0;
    const double lo = 0.08 + 0.2 * rng.uniform();
    const double hi = 0.6 + 0.35 * rng.uniform();
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double s = 0.5 + 0.5 * (gx * (2.0 * x / (size - 1) - 1.0) + gy * (2.0 * y / (size - 1) - 1.0)) / 2.0;
            img.at(0, y, x) = static_cast<float>(lo + (hi - lo) * std::clamp(s, 0.0, 1.0));
        }
    // rectangles with crisp edges
    const int n_rect = 3 + static_cast<int>(rng.below(3));
    for (int r = 0; r < n_rect; ++r) {
        const int w = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size / 2)));
        const int h = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size / 2)));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2)));
        const float v = static_cast<float>(0.05 + 0.9 * rng.uniform());
        for (int y = y0; y < std::min(size, y0 + h); ++y)
            for (int x = x0; x < std::min(size, x0 + w); ++x) img.at(0, y, x) = v;
    }
    // one thin bright bar for a strong edge pair
    {
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 3)));
        const float v = static_cast<float>(0.7 + 0.3 * rng.uniform());
        const bool horizontal = rng.below(2) == 0;
        for (int i = 0; i < size; ++i)
            for (int k = 0; k < 2; ++k)
                (horizontal ? img.at(0, y0 + k, i) : img.at(0, i, y0 + k)) = v;
    }
    return img;
}

Tensor random_depth(Rng& rng, int size) {
    Tensor depth = Tensor::zeros({size, size});
    if (rng.below(2) == 0) {
        // linear ramp along a random direction
        const double gx = rng.uniform() * 2.0 - 1.0;
        const double gy = rng.uniform() * 2.0 - 1.0;
        const double norm = std::max(1e-6, std::sqrt(gx * gx + gy * gy));
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double s = (gx * x + gy * y) / (norm * (size - 1)) + 0.5;
                depth.at2(y, x) = static_cast<float>(std::clamp(s, 0.0, 1.0));
            }
    } else {
        // radial bowl about a random center
        const double cx = rng.uniform() * (size - 1);
        const double cy = rng.uniform() * (size - 1);
        const double rmax = std::sqrt(2.0) * (size - 1);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double r = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax;
                depth.at2(y, x) = static_cast<float>(std::clamp(2.0 * r, 0.0, 1.0));
            }
    }
    return depth;
}

MotionTrajectory random_motion(Rng& rng, int frames, std::uint64_t dt_us) {
    MotionTrajectory traj;
    double dx = 0.0, dy = 0.0, rot = 0.0, scale = 1.0;
    // direction-biased random walk so the scene keeps moving
    const double vx = (rng.uniform() * 2.0 - 1.0) * 0.9;
    const double vy = (rng.uniform() * 2.0 - 1.0) * 0.9;
    const double vr = (rng.uniform() * 2.0 - 1.0) * 0.015;
    const double vs = (rng.uniform() * 2.0 - 1.0) * 0.012;
    for (int i = 0; i < frames; ++i) {
        traj.samples.push_back({static_cast<std::uint64_t>(i) * dt_us, dx, dy, rot, scale});
        dx += vx + (rng.uniform() * 2.0 - 1.0) * 0.25;
        dy += vy + (rng.uniform() * 2.0 - 1.0) * 0.25;
        rot += vr + (rng.uniform() * 2.0 - 1.0) * 0.004;
        scale = std::max(0.85, std::min(1.18, scale + vs + (rng.uniform() * 2.0 - 1.0) * 0.004));
    }
    return traj;
}

ToyPair build_pair(std::uint64_t pair_seed, const DatasetConfig& cfg) {
    Rng rng(pair_seed);
    ToyPair pair;
    pair.clean = quantized(random_scene(rng, cfg.size));

    Tensor depth = random_depth(rng, cfg.size);
    const float beta = static_cast<float>(cfg.beta_min + (cfg.beta_max - cfg.beta_min) * rng.uniform());
    const float a = cfg.airlight_min + (cfg.airlight_max - cfg.airlight_min) * static_cast<float>(rng.uniform());
    HazeParams params = HazeParams::with_map(transmission_from_depth(depth, beta), {a});
    params.beta = beta;
    pair.hazy = quantized(synthesize_haze(pair.clean, params));

    MotionTrajectory traj = random_motion(rng, cfg.frames, cfg.frame_dt_us);
    SimConfig sim;
    sim.c_pos = cfg.contrast_threshold;
    sim.c_neg = cfg.contrast_threshold;
    pair.events = simulate_events(render_trajectory(pair.clean, traj), sim);

    const std::uint64_t t_end = traj.samples.back().t + 1;
    pair.tpr = build_tpr(pair.events, 0, t_end, cfg.tpr_levels, cfg.tpr_bins);
    return pair;
}

}  // namespace

std::vector<ToyPair> build_toy_dataset(const DatasetConfig& cfg) {
    if (cfg.count < 1) throw ValidationError("dataset needs count >= 1");
    if (cfg.size < 8 || cfg.size % 4 != 0)
        throw ValidationError("dataset image size must be a multiple of 4 and >= 8, got " + std::to_string(cfg.size));
    std::vector<ToyPair> pairs(static_cast<std::size_t>(cfg.count));
    Rng base(cfg.seed);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < cfg.count; ++i)
        pairs[static_cast<std::size_t>(i)] = build_pair(base.fork_seed(static_cast<std::uint64_t>(i)), cfg);
    return pairs;
}

namespace {

std::string pair_stem(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair_%04d", i);
    return buf;
}

}  // namespace

void save_toy_dataset(const std::vector<ToyPair>& pairs, const DatasetConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string stem = (fs::path(dir) / pair_stem(static_cast<int>(i))).string();
        save_image(pairs[i].clean, stem + "_clean.pgm");
        save_image(pairs[i].hazy, stem + "_hazy.pgm");
        write_events(pairs[i].events, stem + "_events.bin", EventFormat::bin);
        save_tensor(pairs[i].tpr.grid, stem + "_tpr.ten");
    }
    nlohmann::json j;
    j["toolkit_version"] = kVersion;
    j["count"] = pairs.size();
    j["size"] = cfg.size;
    j["seed"] = cfg.seed;
    j["tpr"] = {{"levels", cfg.tpr_levels}, {"bins", cfg.tpr_bins}};
    std::ofstream f(fs::path(dir) / "dataset.json", std::ios::trunc);
    if (!f) throw IoError("cannot write dataset manifest in " + dir);
    f << j.dump(2) << "\n";
}

std::vector<ToyPair> load_toy_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f(fs::path(dir) / "dataset.json");
    if (!f) throw IoError("cannot open dataset manifest in " + dir);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((fs::path(dir) / "dataset.json").string(), 0, std::string("parse failure: ") + e.what());
    }
    const int count = j["count"].get<int>();
    const int levels = j["tpr"]["levels"].get<int>();
    const int bins = j["tpr"]["bins"].get<int>();
    std::vector<ToyPair> pairs(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::string stem = (fs::path(dir) / pair_stem(i)).string();
        ToyPair& p = pairs[static_cast<std::size_t>(i)];
        p.clean = load_image(stem + "_clean.pgm");
        p.hazy = load_image(stem + "_hazy.pgm");
        p.events = read_events(stem + "_events.bin", EventFormat::bin);
        p.tpr.levels = levels;
        p.tpr.bins = bins;
        p.tpr.grid = load_tensor(stem + "_tpr.ten");
    }
    return pairs;
}

}  // namespace evdiff
