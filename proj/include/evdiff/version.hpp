#pragma once

namespace evdiff {

inline constexpr const char* kVersion = "0.1.0";

// Stamped into checkpoints and artifacts that embed generator noise, so a
// regression test can refuse to compare streams from a different generator.
inline constexpr const char* kRngAlgorithm = "xoshiro256++/box-muller-v1";

}  // namespace evdiff
