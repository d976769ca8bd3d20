// Serial-reference vs OpenMP-kernel timings. Run with
//   ./build/bench/bench_kernels --benchmark_min_time=0.2s
// and OMP_NUM_THREADS to taste; results are bitwise identical either way.

#include <benchmark/benchmark.h>

#include "evdiff/kernels.hpp"
#include "evdiff/rng.hpp"
#include "evdiff/tensor.hpp"

using namespace evdiff;

namespace {

struct ConvSetup {
    Tensor x, w, b, out;
    int cin, h, wd, cout, k;
};

ConvSetup conv_setup(int cin, int h, int w, int cout, int k) {
    Rng rng(1);
    ConvSetup s;
    s.cin = cin;
    s.h = h;
    s.wd = w;
    s.cout = cout;
    s.k = k;
    s.x = gaussian_sample(rng, {cin, h, w});
    s.w = gaussian_sample(rng, {cout, cin, k, k});
    s.b = gaussian_sample(rng, {cout});
    s.out = Tensor::zeros({cout, h, w});
    return s;
}

void bm_conv2d_serial(benchmark::State& state) {
    ConvSetup s = conv_setup(16, 64, 64, 16, 3);
    for (auto _ : state) {
        kernels::serial::conv2d_forward(s.out.data(), s.x.data(), s.w.data(), s.b.data(), s.cin, s.h, s.wd,
                                        s.cout, s.k, 1, 1);
        benchmark::ClobberMemory();
    }
}

void bm_conv2d_omp(benchmark::State& state) {
    ConvSetup s = conv_setup(16, 64, 64, 16, 3);
    for (auto _ : state) {
        kernels::conv2d_forward(s.out.data(), s.x.data(), s.w.data(), s.b.data(), s.cin, s.h, s.wd, s.cout,
                                s.k, 1, 1);
        benchmark::ClobberMemory();
    }
}

void bm_matmul_serial(benchmark::State& state) {
    Rng rng(2);
    const int n = 256;
    Tensor a = gaussian_sample(rng, {n, n});
    Tensor b = gaussian_sample(rng, {n, n});
    Tensor out = Tensor::zeros({n, n});
    for (auto _ : state) {
        kernels::serial::matmul(out.data(), a.data(), b.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_matmul_omp(benchmark::State& state) {
    Rng rng(2);
    const int n = 256;
    Tensor a = gaussian_sample(rng, {n, n});
    Tensor b = gaussian_sample(rng, {n, n});
    Tensor out = Tensor::zeros({n, n});
    for (auto _ : state) {
        kernels::matmul(out.data(), a.data(), b.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_warp_serial(benchmark::State& state) {
    Rng rng(3);
    Tensor img = gaussian_sample(rng, {3, 256, 256});
    Tensor out = Tensor::zeros({3, 256, 256});
    for (auto _ : state) {
        kernels::serial::warp_similarity(out.data(), img.data(), 3, 256, 256, 1.5, -0.5, 0.1, 1.05);
        benchmark::ClobberMemory();
    }
}

void bm_warp_omp(benchmark::State& state) {
    Rng rng(3);
    Tensor img = gaussian_sample(rng, {3, 256, 256});
    Tensor out = Tensor::zeros({3, 256, 256});
    for (auto _ : state) {
        kernels::warp_similarity(out.data(), img.data(), 3, 256, 256, 1.5, -0.5, 0.1, 1.05);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_serial(benchmark::State& state) {
    Rng rng(4);
    Tensor in = gaussian_sample(rng, {4096, 64});
    Tensor out = Tensor::zeros({4096, 64});
    for (auto _ : state) {
        kernels::serial::softmax_rows(out.data(), in.data(), 4096, 64);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_omp(benchmark::State& state) {
    Rng rng(4);
    Tensor in = gaussian_sample(rng, {4096, 64});
    Tensor out = Tensor::zeros({4096, 64});
    for (auto _ : state) {
        kernels::softmax_rows(out.data(), in.data(), 4096, 64);
        benchmark::ClobberMemory();
    }
}

BENCHMARK(bm_conv2d_serial);
BENCHMARK(bm_conv2d_omp);
BENCHMARK(bm_matmul_serial);
BENCHMARK(bm_matmul_omp);
BENCHMARK(bm_warp_serial);
BENCHMARK(bm_warp_omp);
BENCHMARK(bm_softmax_serial);
BENCHMARK(bm_softmax_omp);

}  // namespace

BENCHMARK_MAIN();
