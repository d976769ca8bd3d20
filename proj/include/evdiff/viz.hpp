#pragma once

#include "evdiff/image.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Piecewise-linear heat colormap over [0,1]:
//   0.00 -> (0.00, 0.00, 0.20)   deep blue
//   0.25 -> (0.05, 0.25, 0.90)
//   0.50 -> (0.10, 0.90, 0.90)   cyan
//   0.75 -> (0.95, 0.90, 0.20)   yellow
//   1.00 -> (1.00, 1.00, 1.00)   white
void heat_colormap(float v, float rgb[3]);

// Channel-mean absolute activation, min-max normalized (a zero range maps to
// 0 everywhere), rendered through heat_colormap. Input is a [C,H,W] feature.
Image visualize_feature(const Tensor& feature);

}  // namespace evdiff
