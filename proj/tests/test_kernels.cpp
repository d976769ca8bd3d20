#include <doctest.h>

#include <cstring>

#include "evdiff/kernels.hpp"
#include "evdiff/rng.hpp"
#include "evdiff/tensor.hpp"

using namespace evdiff;

namespace {

Tensor randn(Rng& rng, std::vector<int> dims) { return gaussian_sample(rng, std::move(dims)); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.dims() == b.dims() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("parallel conv2d matches the serial reference bitwise") {
    Rng rng(100);
    for (int trial = 0; trial < 15; ++trial) {
        const int cin = 1 + static_cast<int>(rng.below(4));
        const int cout = 1 + static_cast<int>(rng.below(5));
        const int h = 4 + static_cast<int>(rng.below(10));
        const int w = 4 + static_cast<int>(rng.below(10));
        const int k = 1 + 2 * static_cast<int>(rng.below(2));  // 1 or 3
        const int stride = 1 + static_cast<int>(rng.below(2));
        const int pad = static_cast<int>(rng.below(2));
        Tensor x = randn(rng, {cin, h, w});
        Tensor wt = randn(rng, {cout, cin, k, k});
        Tensor b = randn(rng, {cout});
        const int oh = kernels::conv_out_extent(h, k, stride, pad);
        const int ow = kernels::conv_out_extent(w, k, stride, pad);
        if (oh <= 0 || ow <= 0) continue;
        Tensor out_p = Tensor::zeros({cout, oh, ow});
        Tensor out_s = Tensor::zeros({cout, oh, ow});
        kernels::conv2d_forward(out_p.data(), x.data(), wt.data(), b.data(), cin, h, w, cout, k, stride, pad);
        kernels::serial::conv2d_forward(out_s.data(), x.data(), wt.data(), b.data(), cin, h, w, cout, k,
                                        stride, pad);
        CHECK(bitwise_equal(out_p, out_s));
    }
}

TEST_CASE("parallel matmul matches the serial reference bitwise") {
    Rng rng(200);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(30));
        const int k = 1 + static_cast<int>(rng.below(30));
        const int m = 1 + static_cast<int>(rng.below(30));
        Tensor a = randn(rng, {n, k});
        Tensor b = randn(rng, {k, m});
        Tensor out_p = Tensor::zeros({n, m});
        Tensor out_s = Tensor::zeros({n, m});
        kernels::matmul(out_p.data(), a.data(), b.data(), n, k, m);
        kernels::serial::matmul(out_s.data(), a.data(), b.data(), n, k, m);
        CHECK(bitwise_equal(out_p, out_s));
    }
}

TEST_CASE("parallel softmax matches the serial reference bitwise") {
    Rng rng(300);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(20));
        const int d = 1 + static_cast<int>(rng.below(20));
        Tensor in = randn(rng, {n, d});
        Tensor out_p = Tensor::zeros({n, d});
        Tensor out_s = Tensor::zeros({n, d});
        kernels::softmax_rows(out_p.data(), in.data(), n, d);
        kernels::serial::softmax_rows(out_s.data(), in.data(), n, d);
        CHECK(bitwise_equal(out_p, out_s));
    }
}

TEST_CASE("parallel avgpool matches the serial reference bitwise") {
    Rng rng(400);
    for (int trial = 0; trial < 10; ++trial) {
        const int c = 1 + static_cast<int>(rng.below(6));
        const int h = 2 * (1 + static_cast<int>(rng.below(8)));
        const int w = 2 * (1 + static_cast<int>(rng.below(8)));
        Tensor in = randn(rng, {c, h, w});
        Tensor out_p = Tensor::zeros({c, h / 2, w / 2});
        Tensor out_s = Tensor::zeros({c, h / 2, w / 2});
        kernels::avgpool2_forward(out_p.data(), in.data(), c, h, w);
        kernels::serial::avgpool2_forward(out_s.data(), in.data(), c, h, w);
        CHECK(bitwise_equal(out_p, out_s));
    }
}

TEST_CASE("parallel warp matches the serial reference bitwise") {
    Rng rng(500);
    for (int trial = 0; trial < 10; ++trial) {
        const int h = 6 + static_cast<int>(rng.below(12));
        const int w = 6 + static_cast<int>(rng.below(12));
        Tensor in = randn(rng, {1, h, w});
        const double dx = 3.0 * (rng.uniform() - 0.5);
        const double dy = 3.0 * (rng.uniform() - 0.5);
        const double rot = 0.5 * (rng.uniform() - 0.5);
        const double scale = 0.8 + 0.4 * rng.uniform();
        Tensor out_p = Tensor::zeros({1, h, w});
        Tensor out_s = Tensor::zeros({1, h, w});
        kernels::warp_similarity(out_p.data(), in.data(), 1, h, w, dx, dy, rot, scale);
        kernels::serial::warp_similarity(out_s.data(), in.data(), 1, h, w, dx, dy, rot, scale);
        CHECK(bitwise_equal(out_p, out_s));
    }
}

TEST_CASE("upsample2_bilinear backward is the exact transpose of the forward") {
    // <gin, v> must equal <gout, forward(v)> for the linear map
    Rng rng(600);
    const int c = 2, h = 5, w = 4;
    Tensor v = randn(rng, {c, h, w});
    Tensor gout = randn(rng, {c, 2 * h, 2 * w});
    Tensor fwd = Tensor::zeros({c, 2 * h, 2 * w});
    kernels::upsample2_bilinear_forward(fwd.data(), v.data(), c, h, w);
    Tensor gin = Tensor::zeros({c, h, w});
    kernels::upsample2_bilinear_backward(gin.data(), gout.data(), c, h, w);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < gin.size(); ++i) lhs += static_cast<double>(gin[i]) * v[i];
    for (std::size_t i = 0; i < gout.size(); ++i) rhs += static_cast<double>(gout[i]) * fwd[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}
