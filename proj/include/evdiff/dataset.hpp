#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evdiff/event_sim.hpp"
#include "evdiff/events.hpp"
#include "evdiff/haze.hpp"
#include "evdiff/image.hpp"
#include "evdiff/tpr.hpp"

namespace evdiff {

// Procedural toy corpus: grayscale scenes (gradient background, random
// rectangles and bars), procedural depth (linear ramp or radial bowl) turned
// into transmission, haze synthesis, and events simulated from the clean
// frames under a small random camera motion. Events are rendered from the
// clean image so the stream carries scene structure that haze removes from
// the RGB input. Images pass through 8-bit quantization so an in-memory
// build equals a save/load round trip byte for byte.
struct DatasetConfig {
    int count = 80;
    int size = 32;  // multiple of 4
    std::uint64_t seed = 0;
    double beta_min = 1.2;
    double beta_max = 2.6;
    float airlight_min = 0.78f;
    float airlight_max = 0.95f;
    double contrast_threshold = 0.2;
    int frames = 9;
    std::uint64_t frame_dt_us = 4000;
    int tpr_levels = 3;
    int tpr_bins = 2;
};

struct ToyPair {
    Image clean;
    Image hazy;
    EventStream events;
    TemporalPyramid tpr;
};

std::vector<ToyPair> build_toy_dataset(const DatasetConfig& cfg);

// pair_%04d_{clean.pgm, hazy.pgm, events.bin, tpr.ten} plus dataset.json.
void save_toy_dataset(const std::vector<ToyPair>& pairs, const DatasetConfig& cfg, const std::string& dir);
std::vector<ToyPair> load_toy_dataset(const std::string& dir);

}  // namespace evdiff
