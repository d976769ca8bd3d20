#include "evdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "evdiff/errors.hpp"

namespace evdiff {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("psnr: image shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.values.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {
constexpr int kWindow = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("ssim: image shapes differ");
    if (a.height < kWindow || a.width < kWindow)
        throw DimensionError("ssim: image smaller than " + std::to_string(kWindow) + "x" + std::to_string(kWindow) + " window");

    const int oh = a.height - kWindow + 1;
    const int ow = a.width - kWindow + 1;
    const double inv_n = 1.0 / (kWindow * kWindow);
    // per-window scores filled in parallel, then summed in fixed order so the
    // result does not depend on thread count
    std::vector<double> scores(static_cast<std::size_t>(a.channels) * oh * ow);
    for (int c = 0; c < a.channels; ++c) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int wy = 0; wy < kWindow; ++wy)
                    for (int wx = 0; wx < kWindow; ++wx) {
                        const double va = a.at(c, y + wy, x + wx);
                        const double vb = b.at(c, y + wy, x + wx);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double ma = sa * inv_n, mb = sb * inv_n;
                const double va = saa * inv_n - ma * ma;
                const double vb = sbb * inv_n - mb * mb;
                const double cov = sab * inv_n - ma * mb;
                scores[(static_cast<std::size_t>(c) * oh + y) * ow + x] =
                    ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                    ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
            }
        }
    }
    double total = 0.0;
    for (double s : scores) total += s;
    return total / static_cast<double>(scores.size());
}

}  // namespace evdiff
