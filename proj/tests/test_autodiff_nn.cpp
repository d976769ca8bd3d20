#include <doctest.h>

#include <cmath>

#include "evdiff/autodiff.hpp"
#include "evdiff/denoiser.hpp"
#include "evdiff/errors.hpp"
#include "evdiff/rng.hpp"

using namespace evdiff;

namespace {

TensorD randn_d(Rng& rng, std::vector<int> dims) {
    return gaussian_sample(rng, std::move(dims)).cast<double>();
}

}  // namespace

TEST_CASE("1x1 conv with weight 2 doubles the input") {
    Graph<float> g;
    Rng rng(1);
    auto x = g.leaf(gaussian_sample(rng, {1, 3, 3}));
    auto w = g.leaf(Tensor::from({1, 1, 1, 1}, {2.0f}));
    auto b = g.leaf(Tensor::from({1}, {0.0f}));
    auto y = g.conv2d(x, w, b, 1, 0);
    for (std::size_t i = 0; i < 9; ++i) CHECK(g.value(y)[i] == doctest::Approx(2.0f * g.value(x)[i]));
}

TEST_CASE("3x3 delta kernel with pad 1 is the identity") {
    Graph<float> g;
    Rng rng(2);
    auto x = g.leaf(gaussian_sample(rng, {1, 4, 5}));
    Tensor w = Tensor::zeros({1, 1, 3, 3});
    w[4] = 1.0f;  // center tap
    auto y = g.conv2d(x, g.leaf(w), -1, 1, 1);
    for (std::size_t i = 0; i < g.value(x).size(); ++i) CHECK(g.value(y)[i] == g.value(x)[i]);
}

TEST_CASE("conv2d gradients agree with central finite differences") {
    Rng rng(3);
    auto report = grad_check(
        {randn_d(rng, {2, 4, 4}), randn_d(rng, {3, 2, 3, 3}), randn_d(rng, {3})},
        [](Graph<double>& g, const std::vector<int>& in) {
            return g.mean_all(g.conv2d(in[0], in[1], in[2], 1, 1));
        },
        1e-3);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("linear layer identities and gradients") {
    Graph<float> g;
    Tensor eye = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye[static_cast<std::size_t>(i) * 3 + i] = 1.0f;
    Rng rng(4);
    auto x = g.leaf(gaussian_sample(rng, {2, 3}));
    auto y = g.linear(x, g.leaf(eye), g.leaf(Tensor::zeros({3})));
    for (std::size_t i = 0; i < 6; ++i) CHECK(g.value(y)[i] == g.value(x)[i]);

    auto z = g.linear(x, g.leaf(Tensor::zeros({3, 2})), g.leaf(Tensor::from({2}, {1.5f, -0.5f})));
    for (int r = 0; r < 2; ++r) {
        CHECK(g.value(z)[static_cast<std::size_t>(r) * 2 + 0] == 1.5f);
        CHECK(g.value(z)[static_cast<std::size_t>(r) * 2 + 1] == -0.5f);
    }

    auto report = grad_check(
        {randn_d(rng, {3, 4}), randn_d(rng, {4, 2}), randn_d(rng, {2})},
        [](Graph<double>& g2, const std::vector<int>& in) {
            return g2.mean_all(g2.linear(in[0], in[1], in[2]));
        },
        1e-3);
    CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("softmax rows: symmetry, shift invariance, closed form") {
    Graph<float> g;
    auto equal_row = g.softmax_rows(g.leaf(Tensor::from({1, 4}, {0.3f, 0.3f, 0.3f, 0.3f})));
    for (int i = 0; i < 4; ++i) CHECK(g.value(equal_row)[i] == doctest::Approx(0.25f));

    Rng rng(5);
    Tensor row = gaussian_sample(rng, {1, 6});
    Tensor shifted = row;
    for (auto& v : shifted.values()) v += 3.7f;
    auto a = g.softmax_rows(g.leaf(row));
    auto b = g.softmax_rows(g.leaf(shifted));
    for (int i = 0; i < 6; ++i) CHECK(std::abs(g.value(a)[i] - g.value(b)[i]) < 1e-7f);

    auto c = g.softmax_rows(g.leaf(Tensor::from({1, 2}, {0.0f, std::log(3.0f)})));
    CHECK(g.value(c)[0] == doctest::Approx(0.25f));
    CHECK(g.value(c)[1] == doctest::Approx(0.75f));
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(6));
        const int d = 1 + static_cast<int>(rng.below(10));
        Graph<float> g;
        auto y = g.softmax_rows(g.leaf(gaussian_sample(rng, {n, d})));
        for (int r = 0; r < n; ++r) {
            float sum = 0.0f;
            for (int j = 0; j < d; ++j) sum += g.value(y)[static_cast<std::size_t>(r) * d + j];
            CHECK(std::abs(sum - 1.0f) < 1e-6f);
        }
    }
}

TEST_CASE("single-token cross-attention returns the value projection exactly") {
    Graph<float> g;
    Rng rng(7);
    auto xq = g.leaf(gaussian_sample(rng, {3, 1, 1}));
    auto xf = g.leaf(gaussian_sample(rng, {4, 1, 1}));
    auto wq = g.leaf(gaussian_sample(rng, {3, 5}));
    auto wk = g.leaf(gaussian_sample(rng, {4, 5}));
    auto wv = g.leaf(gaussian_sample(rng, {4, 5}));
    auto out = cross_attention(g, xq, xf, wq, wk, wv);
    // softmax over a single key is 1, so out = V = x_f tokens * W_v
    Graph<float> g2;
    auto v = g2.linear(g2.transpose2(g2.reshape(g2.leaf(g.value(xf)), {4, 1})), g2.leaf(g.value(wv)), -1);
    for (int i = 0; i < 5; ++i) CHECK(g.value(out)[i] == doctest::Approx(g2.value(v)[i]));
}

TEST_CASE("zero query projection gives uniform attention over values") {
    Graph<float> g;
    Rng rng(8);
    auto xq = g.leaf(gaussian_sample(rng, {2, 2, 2}));
    auto xf = g.leaf(gaussian_sample(rng, {3, 2, 2}));
    auto wq = g.leaf(Tensor::zeros({2, 4}));
    auto wk = g.leaf(gaussian_sample(rng, {3, 4}));
    auto wv = g.leaf(gaussian_sample(rng, {3, 4}));
    auto out = cross_attention(g, xq, xf, wq, wk, wv);
    // every output token should be the mean of the 4 value tokens
    Graph<float> gv;
    auto v = gv.linear(gv.transpose2(gv.reshape(gv.leaf(g.value(xf)), {3, 4})), gv.leaf(g.value(wv)), -1);
    for (int d = 0; d < 4; ++d) {
        float mean = 0.0f;
        for (int tok = 0; tok < 4; ++tok) mean += gv.value(v)[static_cast<std::size_t>(tok) * 4 + d];
        mean /= 4.0f;
        for (int tok = 0; tok < 4; ++tok)
            CHECK(g.value(out)[static_cast<std::size_t>(d) * 4 + tok] == doctest::Approx(mean).epsilon(1e-5));
    }
}

TEST_CASE("attention output is invariant to a constant added to the logits") {
    // adding a constant to all of x_f's key projections shifts every logit row
    // uniformly, which softmax cancels; emulate by shifting K's bias through
    // a rank-1 weight perturbation is messy, so verify at the softmax level
    Rng rng(9);
    Graph<float> g;
    Tensor logits = gaussian_sample(rng, {4, 4});
    Tensor shifted = logits;
    for (auto& v : shifted.values()) v += 2.5f;
    auto v_tokens = g.leaf(gaussian_sample(rng, {4, 3}));
    auto a1 = g.matmul(g.softmax_rows(g.leaf(logits)), v_tokens);
    auto a2 = g.matmul(g.softmax_rows(g.leaf(shifted)), v_tokens);
    for (std::size_t i = 0; i < g.value(a1).size(); ++i)
        CHECK(std::abs(g.value(a1)[i] - g.value(a2)[i]) < 1e-6f);
}

TEST_CASE("cross-attention end-to-end gradient check") {
    Rng rng(10);
    auto report = grad_check(
        {randn_d(rng, {2, 2, 2}), randn_d(rng, {3, 2, 2}), randn_d(rng, {2, 4}), randn_d(rng, {3, 4}),
         randn_d(rng, {3, 4})},
        [](Graph<double>& g, const std::vector<int>& in) {
            return g.mean_all(cross_attention(g, in[0], in[1], in[2], in[3], in[4]));
        },
        1e-3);
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("adamw: zero gradient with zero decay is a fixed point") {
    ParamStore store;
    store.add("w", Tensor::from({2}, {1.0f, -2.0f}));
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(store, cfg);
    opt.step(store);
    CHECK(store[0].value[0] == 1.0f);
    CHECK(store[0].value[1] == -2.0f);
}

TEST_CASE("adamw first step moves against the gradient at unit scale") {
    ParamStore store;
    store.add("w", Tensor::from({2}, {0.0f, 0.0f}));
    store[0].grad = Tensor::from({2}, {0.5f, -1.25f});
    AdamWConfig cfg;
    cfg.lr = 1e-2;
    cfg.weight_decay = 0.0;
    AdamW opt(store, cfg);
    opt.step(store);
    // bias correction makes m_hat = g and v_hat = g^2, so the step is
    // -lr * g / (|g| + eps) = -lr * sign(g)
    CHECK(store[0].value[0] == doctest::Approx(-1e-2).epsilon(1e-4));
    CHECK(store[0].value[1] == doctest::Approx(1e-2).epsilon(1e-4));
}

TEST_CASE("adamw decoupled decay shrinks weights by (1 - lr*wd)") {
    ParamStore store;
    store.add("w", Tensor::from({1}, {2.0f}));
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    AdamW opt(store, cfg);
    opt.step(store);
    CHECK(store[0].value[0] == doctest::Approx(2.0f * (1.0 - 0.1 * 0.5)));
}

TEST_CASE("adamw with lr=0 is the identity") {
    Rng rng(11);
    ParamStore store;
    store.add("w", gaussian_sample(rng, {8}));
    Tensor before = store[0].value;
    store[0].grad = gaussian_sample(rng, {8});
    AdamWConfig cfg;
    cfg.lr = 0.0;
    AdamW opt(store, cfg);
    opt.step(store);
    opt.step(store);
    for (int i = 0; i < 8; ++i) CHECK(store[0].value[i] == before[i]);
}

TEST_CASE("grad_check on a constant graph reports zero error") {
    Rng rng(12);
    auto report = grad_check(
        {randn_d(rng, {3})},
        [](Graph<double>& g, const std::vector<int>& in) {
            (void)in;
            return g.leaf(TensorD::from({1}, {4.2}));
        },
        1e-3);
    CHECK(report.max_rel_err == 0.0);
    CHECK(report.max_abs_err < 1e-8);
}

TEST_CASE("full toy denoiser graph passes the finite-difference check on 8x8 latents") {
    DenoiserConfig cfg;
    cfg.latent_ch = 1;
    cfg.c1 = 4;
    cfg.c2 = 5;
    cfg.c3 = 6;
    cfg.cb = 8;
    cfg.attn_dim = 6;
    cfg.event_feature_ch = 5;
    ParamStore store;
    ToyDenoiser model(cfg, store, 42);
    // make the zero-initialized tensors generic so their gradients are informative
    Rng rng(13);
    for (std::size_t i = 0; i < store.size(); ++i)
        if (store[i].name.find("proj") != std::string::npos || store[i].name.find("conv_out") != std::string::npos)
            store[i].value = he_init(rng, store[i].value.dims(), 16);

    std::vector<TensorD> inputs;
    for (std::size_t i = 0; i < store.size(); ++i) inputs.push_back(store[i].value.cast<double>());
    inputs.push_back(randn_d(rng, {1, 8, 8}));   // x_t
    inputs.push_back(randn_d(rng, {1, 8, 8}));   // x_hz
    inputs.push_back(randn_d(rng, {5, 2, 2}));   // x_e

    const std::size_t n_params = store.size();
    auto report = grad_check(
        inputs,
        [&](Graph<double>& g, const std::vector<int>& in) {
            std::vector<int> pids(in.begin(), in.begin() + static_cast<long>(n_params));
            return g.mean_all(
                model.forward(g, pids, in[n_params], in[n_params + 1], 37, in[n_params + 2]));
        },
        1e-3, 12, 999);
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("backward rejects non-scalar outputs") {
    Graph<float> g;
    Rng rng(14);
    auto x = g.leaf(gaussian_sample(rng, {2, 2}), true);
    auto y = g.relu(x);
    CHECK_THROWS_AS(g.backward(y), DimensionError);
}

TEST_CASE("sinusoidal embedding is bounded and t-dependent") {
    Tensor a = sinusoidal_embedding(3, 16);
    Tensor b = sinusoidal_embedding(4, 16);
    bool differs = false;
    for (int i = 0; i < 16; ++i) {
        CHECK(std::abs(a[i]) <= 1.0f);
        differs |= a[i] != b[i];
    }
    CHECK(differs);
}
