#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace evdiff::kernels {

// Dense compute kernels behind the autodiff ops and image/haze transforms.
//
// Parallelization contract: every kernel parallelizes only its outermost
// output loop; each output element is produced by exactly one thread with the
// same inner accumulation order as the serial reference. Results are
// therefore bit-identical for any thread count, which is what the toolkit's
// determinism guarantees lean on. The serial reference lives in
// kernels::serial and is compared bitwise in tests and timed in the
// benchmark target.

inline int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// out[co,oy,ox] = b[co] + sum_{ci,ky,kx} w[co,ci,ky,kx] * x[ci, oy*s-pad+ky, ox*s-pad+kx]
template <typename S>
void conv2d_forward(S* out, const S* x, const S* w, const S* b, int cin, int h, int wd, int cout,
                    int k, int stride, int pad) {
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(wd, k, stride, pad);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                S acc = b ? b[co] : S(0);
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            acc += w[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   x[(static_cast<std::size_t>(ci) * h + iy) * wd + ix];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

// Gather-form input gradient: each input cell sums over the outputs it fed.
template <typename S>
void conv2d_backward_input(S* gx, const S* w, const S* gout, int cin, int h, int wd, int cout,
                           int k, int stride, int pad) {
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(wd, k, stride, pad);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < cin; ++ci) {
        for (int iy = 0; iy < h; ++iy) {
            for (int ix = 0; ix < wd; ++ix) {
                S acc = S(0);
                for (int co = 0; co < cout; ++co) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int oy_num = iy + pad - ky;
                        if (oy_num < 0 || oy_num % stride != 0) continue;
                        const int oy = oy_num / stride;
                        if (oy >= oh) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ox_num = ix + pad - kx;
                            if (ox_num < 0 || ox_num % stride != 0) continue;
                            const int ox = ox_num / stride;
                            if (ox >= ow) continue;
                            acc += w[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   gout[(static_cast<std::size_t>(co) * oh + oy) * ow + ox];
                        }
                    }
                }
                gx[(static_cast<std::size_t>(ci) * h + iy) * wd + ix] += acc;
            }
        }
    }
}

template <typename S>
void conv2d_backward_weights(S* gw, S* gb, const S* x, const S* gout, int cin, int h, int wd,
                             int cout, int k, int stride, int pad) {
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(wd, k, stride, pad);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    S acc = S(0);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            acc += gout[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] *
                                   x[(static_cast<std::size_t>(ci) * h + iy) * wd + ix];
                        }
                    }
                    gw[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] += acc;
                }
            }
        }
        if (gb) {
            S acc = S(0);
            for (int i = 0; i < oh * ow; ++i) acc += gout[static_cast<std::size_t>(co) * oh * ow + i];
            gb[co] += acc;
        }
    }
}

// out[n,m] = sum_k a[n,k] * b[k,m]
template <typename S>
void matmul(S* out, const S* a, const S* b, int n, int k, int m) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            S acc = S(0);
            for (int kk = 0; kk < k; ++kk) acc += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * m + j];
            out[static_cast<std::size_t>(i) * m + j] = acc;
        }
    }
}

// Rowwise exp-normalize with max subtraction.
template <typename S>
void softmax_rows(S* out, const S* in, int n, int d) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const S* row = in + static_cast<std::size_t>(i) * d;
        S* orow = out + static_cast<std::size_t>(i) * d;
        S mx = row[0];
        for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        S sum = S(0);
        for (int j = 0; j < d; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        const S inv = S(1) / sum;
        for (int j = 0; j < d; ++j) orow[j] *= inv;
    }
}

// Jacobian-vector product of softmax: gin = y * (gout - sum(gout*y)) rowwise.
template <typename S>
void softmax_rows_backward(S* gin, const S* y, const S* gout, int n, int d) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const S* yr = y + static_cast<std::size_t>(i) * d;
        const S* gr = gout + static_cast<std::size_t>(i) * d;
        S* gi = gin + static_cast<std::size_t>(i) * d;
        S dot = S(0);
        for (int j = 0; j < d; ++j) dot += yr[j] * gr[j];
        for (int j = 0; j < d; ++j) gi[j] += yr[j] * (gr[j] - dot);
    }
}

// 2x2 average pool, stride 2; extents must be even.
template <typename S>
void avgpool2_forward(S* out, const S* in, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const S* base = in + (static_cast<std::size_t>(ci) * h + 2 * y) * w + 2 * x;
                out[(static_cast<std::size_t>(ci) * oh + y) * ow + x] =
                    (base[0] + base[1] + base[w] + base[w + 1]) * S(0.25);
            }
        }
    }
}

template <typename S>
void avgpool2_backward(S* gin, const S* gout, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                gin[(static_cast<std::size_t>(ci) * h + y) * w + x] +=
                    gout[(static_cast<std::size_t>(ci) * oh + y / 2) * ow + x / 2] * S(0.25);
            }
        }
    }
}

template <typename S>
void upsample2_nearest_forward(S* out, const S* in, int c, int h, int w) {
    const int oh = h * 2, ow = w * 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                out[(static_cast<std::size_t>(ci) * oh + y) * ow + x] =
                    in[(static_cast<std::size_t>(ci) * h + y / 2) * w + x / 2];
            }
        }
    }
}

template <typename S>
void upsample2_nearest_backward(S* gin, const S* gout, int c, int h, int w) {
    const int oh = h * 2, ow = w * 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                S acc = S(0);
                for (int sy = 0; sy < 2; ++sy)
                    for (int sx = 0; sx < 2; ++sx)
                        acc += gout[(static_cast<std::size_t>(ci) * oh + 2 * y + sy) * ow + 2 * x + sx];
                gin[(static_cast<std::size_t>(ci) * h + y) * w + x] += acc;
            }
        }
    }
}

// 2x bilinear upsample; source coord sy = (oy+0.5)/2 - 0.5, clamped at edges.
template <typename S>
void upsample2_bilinear_forward(S* out, const S* in, int c, int h, int w) {
    const int oh = h * 2, ow = w * 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        const S* plane = in + static_cast<std::size_t>(ci) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            const double sy = 0.5 * oy - 0.25;
            const int y0 = static_cast<int>(std::floor(sy));
            const double fy = sy - y0;
            const int yl = std::clamp(y0, 0, h - 1), yh = std::clamp(y0 + 1, 0, h - 1);
            for (int ox = 0; ox < ow; ++ox) {
                const double sx = 0.5 * ox - 0.25;
                const int x0 = static_cast<int>(std::floor(sx));
                const double fx = sx - x0;
                const int xl = std::clamp(x0, 0, w - 1), xh = std::clamp(x0 + 1, 0, w - 1);
                const double v = (1.0 - fy) * ((1.0 - fx) * plane[static_cast<std::size_t>(yl) * w + xl] +
                                               fx * plane[static_cast<std::size_t>(yl) * w + xh]) +
                                 fy * ((1.0 - fx) * plane[static_cast<std::size_t>(yh) * w + xl] +
                                       fx * plane[static_cast<std::size_t>(yh) * w + xh]);
                out[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] = static_cast<S>(v);
            }
        }
    }
}

// Exact transpose of the forward, written as a gather over the bounded set of
// outputs any input cell can influence.
template <typename S>
void upsample2_bilinear_backward(S* gin, const S* gout, int c, int h, int w) {
    const int oh = h * 2, ow = w * 2;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        const S* gplane = gout + static_cast<std::size_t>(ci) * oh * ow;
        for (int iy = 0; iy < h; ++iy) {
            for (int ix = 0; ix < w; ++ix) {
                double acc = 0.0;
                for (int oy = std::max(0, 2 * iy - 2); oy <= std::min(oh - 1, 2 * iy + 3); ++oy) {
                    const double sy = 0.5 * oy - 0.25;
                    const int y0 = static_cast<int>(std::floor(sy));
                    const double fy = sy - y0;
                    double wy = 0.0;
                    if (std::clamp(y0, 0, h - 1) == iy) wy += 1.0 - fy;
                    if (std::clamp(y0 + 1, 0, h - 1) == iy) wy += fy;
                    if (wy == 0.0) continue;
                    for (int ox = std::max(0, 2 * ix - 2); ox <= std::min(ow - 1, 2 * ix + 3); ++ox) {
                        const double sx = 0.5 * ox - 0.25;
                        const int x0 = static_cast<int>(std::floor(sx));
                        const double fx = sx - x0;
                        double wx = 0.0;
                        if (std::clamp(x0, 0, w - 1) == ix) wx += 1.0 - fx;
                        if (std::clamp(x0 + 1, 0, w - 1) == ix) wx += fx;
                        if (wx == 0.0) continue;
                        acc += wy * wx * gplane[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
                gin[(static_cast<std::size_t>(ci) * h + iy) * w + ix] += static_cast<S>(acc);
            }
        }
    }
}

// Inverse-mapped similarity warp (translate/rotate/scale about the image
// center) with bilinear sampling and edge replication.
template <typename S>
void warp_similarity(S* out, const S* in, int c, int h, int w, double dx, double dy, double rot,
                     double scale) {
    const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    const double cosr = std::cos(rot), sinr = std::sin(rot);
    const double inv_s = 1.0 / scale;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        const S* plane = in + static_cast<std::size_t>(ci) * h * w;
        for (int y = 0; y < h; ++y) {
            const double v = y - cy - dy;
            for (int x = 0; x < w; ++x) {
                const double u = x - cx - dx;
                const double sx = (cosr * u + sinr * v) * inv_s + cx;
                const double sy = (-sinr * u + cosr * v) * inv_s + cy;
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const double fx = sx - x0, fy = sy - y0;
                const int xl = std::clamp(x0, 0, w - 1), xh = std::clamp(x0 + 1, 0, w - 1);
                const int yl = std::clamp(y0, 0, h - 1), yh = std::clamp(y0 + 1, 0, h - 1);
                const double val = (1.0 - fy) * ((1.0 - fx) * plane[static_cast<std::size_t>(yl) * w + xl] +
                                                 fx * plane[static_cast<std::size_t>(yl) * w + xh]) +
                                   fy * ((1.0 - fx) * plane[static_cast<std::size_t>(yh) * w + xl] +
                                         fx * plane[static_cast<std::size_t>(yh) * w + xh]);
                out[(static_cast<std::size_t>(ci) * h + y) * w + x] = static_cast<S>(val);
            }
        }
    }
}

// Fixed-order sum with a 64-bit accumulator; used for losses and statistics.
template <typename S>
double sum_f64(const S* v, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(v[i]);
    return acc;
}

}  // namespace evdiff::kernels

namespace evdiff::kernels::serial {

// Reference implementations: plain loops, no pragmas, same accumulation
// order. Tests assert bitwise agreement with the parallel kernels.

template <typename S>
void conv2d_forward(S* out, const S* x, const S* w, const S* b, int cin, int h, int wd, int cout,
                    int k, int stride, int pad) {
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(wd, k, stride, pad);
    for (int co = 0; co < cout; ++co)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                S acc = b ? b[co] : S(0);
                for (int ci = 0; ci < cin; ++ci)
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            acc += w[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   x[(static_cast<std::size_t>(ci) * h + iy) * wd + ix];
                        }
                    }
                out[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
            }
}

template <typename S>
void matmul(S* out, const S* a, const S* b, int n, int k, int m) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            S acc = S(0);
            for (int kk = 0; kk < k; ++kk)
                acc += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * m + j];
            out[static_cast<std::size_t>(i) * m + j] = acc;
        }
}

template <typename S>
void softmax_rows(S* out, const S* in, int n, int d) {
    for (int i = 0; i < n; ++i) {
        const S* row = in + static_cast<std::size_t>(i) * d;
        S* orow = out + static_cast<std::size_t>(i) * d;
        S mx = row[0];
        for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        S sum = S(0);
        for (int j = 0; j < d; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        const S inv = S(1) / sum;
        for (int j = 0; j < d; ++j) orow[j] *= inv;
    }
}

template <typename S>
void avgpool2_forward(S* out, const S* in, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const S* base = in + (static_cast<std::size_t>(ci) * h + 2 * y) * w + 2 * x;
                out[(static_cast<std::size_t>(ci) * oh + y) * ow + x] =
                    (base[0] + base[1] + base[w] + base[w + 1]) * S(0.25);
            }
}

template <typename S>
void warp_similarity(S* out, const S* in, int c, int h, int w, double dx, double dy, double rot,
                     double scale) {
    const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    const double cosr = std::cos(rot), sinr = std::sin(rot);
    const double inv_s = 1.0 / scale;
    for (int ci = 0; ci < c; ++ci) {
        const S* plane = in + static_cast<std::size_t>(ci) * h * w;
        for (int y = 0; y < h; ++y) {
            const double v = y - cy - dy;
            for (int x = 0; x < w; ++x) {
                const double u = x - cx - dx;
                const double sx = (cosr * u + sinr * v) * inv_s + cx;
                const double sy = (-sinr * u + cosr * v) * inv_s + cy;
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const double fx = sx - x0, fy = sy - y0;
                const int xl = std::clamp(x0, 0, w - 1), xh = std::clamp(x0 + 1, 0, w - 1);
                const int yl = std::clamp(y0, 0, h - 1), yh = std::clamp(y0 + 1, 0, h - 1);
                const double val = (1.0 - fy) * ((1.0 - fx) * plane[static_cast<std::size_t>(yl) * w + xl] +
                                                 fx * plane[static_cast<std::size_t>(yl) * w + xh]) +
                                   fy * ((1.0 - fx) * plane[static_cast<std::size_t>(yh) * w + xl] +
                                         fx * plane[static_cast<std::size_t>(yh) * w + xh]);
                out[(static_cast<std::size_t>(ci) * h + y) * w + x] = static_cast<S>(val);
            }
        }
    }
}

}  // namespace evdiff::kernels::serial
