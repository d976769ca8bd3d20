#pragma once

#include "evdiff/image.hpp"

namespace evdiff {

// 10 log10(1 / MSE) on [0,1] images, capped at 100 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

// Mean local SSIM over all 8x8 windows (stride 1), uniform weights,
// population moments, stabilizers C1 = 0.01^2 and C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

}  // namespace evdiff
