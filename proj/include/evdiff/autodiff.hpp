#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evdiff/errors.hpp"
#include "evdiff/kernels.hpp"
#include "evdiff/rng.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Reverse-mode tape over dense tensors. Each op records its inputs' node ids
// and a backprop closure; backward() seeds the scalar output with grad 1 and
// runs the closures exactly once, in reverse execution order. Node values are
// immutable once recorded. One graph instance is single-threaded; the kernels
// inside ops parallelize internally.
template <typename S>
class Graph {
public:
    using Id = int;

    Id leaf(BasicTensor<S> value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, {});
    }

    const BasicTensor<S>& value(Id id) const { return nodes_[check(id)].value; }
    const BasicTensor<S>& grad(Id id) const { return nodes_[check(id)].grad; }
    std::size_t size() const { return nodes_.size(); }

    Id add(Id a, Id b) {
        require_same_dims(a, b, "add");
        BasicTensor<S> out = nodes_[a].value;
        const auto& bv = nodes_[b].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
        return push(std::move(out), needs(a) || needs(b), [this, a, b](Id o) {
            accumulate(a, nodes_[o].grad.values());
            accumulate(b, nodes_[o].grad.values());
        });
    }

    Id sub(Id a, Id b) {
        require_same_dims(a, b, "sub");
        BasicTensor<S> out = nodes_[a].value;
        const auto& bv = nodes_[b].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
        return push(std::move(out), needs(a) || needs(b), [this, a, b](Id o) {
            accumulate(a, nodes_[o].grad.values());
            const auto& g = nodes_[o].grad;
            auto& gb = nodes_[b].grad;
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        });
    }

    Id mul(Id a, Id b) {
        require_same_dims(a, b, "mul");
        BasicTensor<S> out = nodes_[a].value;
        const auto& bv = nodes_[b].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
        return push(std::move(out), needs(a) || needs(b), [this, a, b](Id o) {
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            auto& gb = nodes_[b].grad;
            const auto& av = nodes_[a].value;
            const auto& bv2 = nodes_[b].value;
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv2[i];
                gb[i] += g[i] * av[i];
            }
        });
    }

    Id scale(Id a, S s) {
        BasicTensor<S> out = nodes_[a].value;
        for (auto& v : out.values()) v *= s;
        return push(std::move(out), needs(a), [this, a, s](Id o) {
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
        });
    }

    Id relu(Id a) {
        BasicTensor<S> out = nodes_[a].value;
        for (auto& v : out.values()) v = v > S(0) ? v : S(0);
        return push(std::move(out), needs(a), [this, a](Id o) {
            const auto& g = nodes_[o].grad;
            const auto& x = nodes_[a].value;
            auto& ga = nodes_[a].grad;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x[i] > S(0)) ga[i] += g[i];
        });
    }

    // x [Cin,H,W], w [Cout,Cin,K,K], optional bias [Cout]; stride/pad as usual.
    Id conv2d(Id x, Id w, Id b, int stride, int pad) {
        const auto& xd = nodes_[x].value.dims();
        const auto& wd = nodes_[w].value.dims();
        if (xd.size() != 3 || wd.size() != 4) throw DimensionError("conv2d: expected [Cin,H,W] and [Cout,Cin,K,K]");
        if (wd[1] != xd[0])
            throw DimensionError("conv2d: input channels " + std::to_string(xd[0]) + " vs kernel " + std::to_string(wd[1]));
        if (wd[2] != wd[3]) throw DimensionError("conv2d: kernel must be square");
        const int k = wd[2];
        if (b >= 0 && (nodes_[b].value.dims().size() != 1 || nodes_[b].value.dims()[0] != wd[0]))
            throw DimensionError("conv2d: bias dims must be [Cout]");
        const int oh = kernels::conv_out_extent(xd[1], k, stride, pad);
        const int ow = kernels::conv_out_extent(xd[2], k, stride, pad);
        if (oh <= 0 || ow <= 0) throw DimensionError("conv2d: kernel does not fit padded input");
        BasicTensor<S> out = BasicTensor<S>::zeros({wd[0], oh, ow});
        kernels::conv2d_forward(out.data(), nodes_[x].value.data(), nodes_[w].value.data(),
                                b >= 0 ? nodes_[b].value.data() : nullptr, xd[0], xd[1], xd[2], wd[0], k,
                                stride, pad);
        bool rg = needs(x) || needs(w) || (b >= 0 && needs(b));
        return push(std::move(out), rg, [this, x, w, b, k, stride, pad](Id o) {
            const auto& xd2 = nodes_[x].value.dims();
            const auto& wd2 = nodes_[w].value.dims();
            const auto& g = nodes_[o].grad;
            kernels::conv2d_backward_input(nodes_[x].grad.data(), nodes_[w].value.data(), g.data(), xd2[0],
                                           xd2[1], xd2[2], wd2[0], k, stride, pad);
            kernels::conv2d_backward_weights(nodes_[w].grad.data(), b >= 0 ? nodes_[b].grad.data() : nullptr,
                                             nodes_[x].value.data(), g.data(), xd2[0], xd2[1], xd2[2], wd2[0],
                                             k, stride, pad);
        });
    }

    // x [N,Din], w [Din,Dout], optional bias [Dout].
    Id linear(Id x, Id w, Id b) {
        const auto& xd = nodes_[x].value.dims();
        const auto& wd = nodes_[w].value.dims();
        if (xd.size() != 2 || wd.size() != 2) throw DimensionError("linear: expected [N,Din] and [Din,Dout]");
        if (xd[1] != wd[0]) throw DimensionError("linear: inner dims " + std::to_string(xd[1]) + " vs " + std::to_string(wd[0]));
        const int n = xd[0], din = xd[1], dout = wd[1];
        if (b >= 0 && (nodes_[b].value.dims().size() != 1 || nodes_[b].value.dims()[0] != dout))
            throw DimensionError("linear: bias dims must be [Dout]");
        BasicTensor<S> out = BasicTensor<S>::zeros({n, dout});
        kernels::matmul(out.data(), nodes_[x].value.data(), nodes_[w].value.data(), n, din, dout);
        if (b >= 0) {
            const auto& bv = nodes_[b].value;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dout; ++j) out[static_cast<std::size_t>(i) * dout + j] += bv[j];
        }
        bool rg = needs(x) || needs(w) || (b >= 0 && needs(b));
        return push(std::move(out), rg, [this, x, w, b, n, din, dout](Id o) {
            const auto& g = nodes_[o].grad;
            // gx += g * w^T
            BasicTensor<S> wt = transposed(nodes_[w].value, din, dout);
            BasicTensor<S> gx = BasicTensor<S>::zeros({n, din});
            kernels::matmul(gx.data(), g.data(), wt.data(), n, dout, din);
            accumulate(x, gx.values());
            // gw += x^T * g
            BasicTensor<S> xt = transposed(nodes_[x].value, n, din);
            BasicTensor<S> gw = BasicTensor<S>::zeros({din, dout});
            kernels::matmul(gw.data(), xt.data(), g.data(), din, n, dout);
            accumulate(w, gw.values());
            if (b >= 0) {
                auto& gb = nodes_[b].grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < dout; ++j) gb[j] += g[static_cast<std::size_t>(i) * dout + j];
            }
        });
    }

    Id matmul(Id a, Id b) {
        const auto& ad = nodes_[a].value.dims();
        const auto& bd = nodes_[b].value.dims();
        if (ad.size() != 2 || bd.size() != 2 || ad[1] != bd[0])
            throw DimensionError("matmul: incompatible dims " + dims_to_string(ad) + " x " + dims_to_string(bd));
        const int n = ad[0], k = ad[1], m = bd[1];
        BasicTensor<S> out = BasicTensor<S>::zeros({n, m});
        kernels::matmul(out.data(), nodes_[a].value.data(), nodes_[b].value.data(), n, k, m);
        return push(std::move(out), needs(a) || needs(b), [this, a, b, n, k, m](Id o) {
            const auto& g = nodes_[o].grad;
            BasicTensor<S> bt = transposed(nodes_[b].value, k, m);
            BasicTensor<S> ga = BasicTensor<S>::zeros({n, k});
            kernels::matmul(ga.data(), g.data(), bt.data(), n, m, k);
            accumulate(a, ga.values());
            BasicTensor<S> at = transposed(nodes_[a].value, n, k);
            BasicTensor<S> gb = BasicTensor<S>::zeros({k, m});
            kernels::matmul(gb.data(), at.data(), g.data(), k, n, m);
            accumulate(b, gb.values());
        });
    }

    Id transpose2(Id a) {
        const auto& ad = nodes_[a].value.dims();
        if (ad.size() != 2) throw DimensionError("transpose2: expected rank-2 tensor");
        const int n = ad[0], m = ad[1];
        BasicTensor<S> out = transposed(nodes_[a].value, n, m);
        return push(std::move(out), needs(a), [this, a, n, m](Id o) {
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    ga[static_cast<std::size_t>(i) * m + j] += g[static_cast<std::size_t>(j) * n + i];
        });
    }

    Id softmax_rows(Id a) {
        const auto& ad = nodes_[a].value.dims();
        if (ad.size() != 2) throw DimensionError("softmax_rows: expected [N,D]");
        const int n = ad[0], d = ad[1];
        BasicTensor<S> out = BasicTensor<S>::zeros(ad);
        kernels::softmax_rows(out.data(), nodes_[a].value.data(), n, d);
        return push(std::move(out), needs(a), [this, a, n, d](Id o) {
            kernels::softmax_rows_backward(nodes_[a].grad.data(), nodes_[o].value.data(),
                                           nodes_[o].grad.data(), n, d);
        });
    }

    Id avgpool2(Id a) {
        const auto& ad = nodes_[a].value.dims();
        if (ad.size() != 3 || ad[1] % 2 || ad[2] % 2) throw DimensionError("avgpool2: expected [C,even,even]");
        BasicTensor<S> out = BasicTensor<S>::zeros({ad[0], ad[1] / 2, ad[2] / 2});
        kernels::avgpool2_forward(out.data(), nodes_[a].value.data(), ad[0], ad[1], ad[2]);
        return push(std::move(out), needs(a), [this, a](Id o) {
            const auto& ad2 = nodes_[a].value.dims();
            kernels::avgpool2_backward(nodes_[a].grad.data(), nodes_[o].grad.data(), ad2[0], ad2[1], ad2[2]);
        });
    }

    Id upsample2_nearest(Id a) {
        const auto& ad = nodes_[a].value.dims();
        if (ad.size() != 3) throw DimensionError("upsample2_nearest: expected [C,H,W]");
        BasicTensor<S> out = BasicTensor<S>::zeros({ad[0], ad[1] * 2, ad[2] * 2});
        kernels::upsample2_nearest_forward(out.data(), nodes_[a].value.data(), ad[0], ad[1], ad[2]);
        return push(std::move(out), needs(a), [this, a](Id o) {
            const auto& ad2 = nodes_[a].value.dims();
            kernels::upsample2_nearest_backward(nodes_[a].grad.data(), nodes_[o].grad.data(), ad2[0], ad2[1],
                                                ad2[2]);
        });
    }

    Id upsample2_bilinear(Id a) {
        const auto& ad = nodes_[a].value.dims();
        if (ad.size() != 3) throw DimensionError("upsample2_bilinear: expected [C,H,W]");
        BasicTensor<S> out = BasicTensor<S>::zeros({ad[0], ad[1] * 2, ad[2] * 2});
        kernels::upsample2_bilinear_forward(out.data(), nodes_[a].value.data(), ad[0], ad[1], ad[2]);
        return push(std::move(out), needs(a), [this, a](Id o) {
            const auto& ad2 = nodes_[a].value.dims();
            kernels::upsample2_bilinear_backward(nodes_[a].grad.data(), nodes_[o].grad.data(), ad2[0], ad2[1],
                                                 ad2[2]);
        });
    }

    Id reshape(Id a, std::vector<int> dims) {
        const std::size_t n = BasicTensor<S>::check_dims(dims);
        if (n != nodes_[a].value.size()) throw DimensionError("reshape: element count mismatch");
        BasicTensor<S> out = BasicTensor<S>::from(std::move(dims), nodes_[a].value.values());
        return push(std::move(out), needs(a), [this, a](Id o) { accumulate(a, nodes_[o].grad.values()); });
    }

    Id concat_ch(Id a, Id b) {
        const auto& ad = nodes_[a].value.dims();
        const auto& bd = nodes_[b].value.dims();
        if (ad.size() != 3 || bd.size() != 3 || ad[1] != bd[1] || ad[2] != bd[2])
            throw DimensionError("concat_ch: spatial extents differ");
        BasicTensor<S> out = BasicTensor<S>::zeros({ad[0] + bd[0], ad[1], ad[2]});
        const std::size_t na = nodes_[a].value.size();
        std::copy(nodes_[a].value.values().begin(), nodes_[a].value.values().end(), out.values().begin());
        std::copy(nodes_[b].value.values().begin(), nodes_[b].value.values().end(), out.values().begin() + na);
        return push(std::move(out), needs(a) || needs(b), [this, a, b, na](Id o) {
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            auto& gb = nodes_[b].grad;
            for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
        });
    }

    // x [C,H,W] + v [C] broadcast over spatial extents.
    Id add_channel_bias(Id x, Id v) {
        const auto& xd = nodes_[x].value.dims();
        const auto& vd = nodes_[v].value.dims();
        if (xd.size() != 3 || vd.size() != 1 || vd[0] != xd[0])
            throw DimensionError("add_channel_bias: expected [C,H,W] and [C]");
        BasicTensor<S> out = nodes_[x].value;
        const std::size_t plane = static_cast<std::size_t>(xd[1]) * xd[2];
        for (int c = 0; c < xd[0]; ++c)
            for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += nodes_[v].value[c];
        return push(std::move(out), needs(x) || needs(v), [this, x, v, plane](Id o) {
            const auto& g = nodes_[o].grad;
            accumulate(x, g.values());
            auto& gv = nodes_[v].grad;
            for (std::size_t c = 0; c < gv.size(); ++c) {
                S acc = S(0);
                for (std::size_t i = 0; i < plane; ++i) acc += g[c * plane + i];
                gv[c] += acc;
            }
        });
    }

    Id mean_all(Id a) {
        const double m = kernels::sum_f64(nodes_[a].value.data(), nodes_[a].value.size()) /
                         static_cast<double>(nodes_[a].value.size());
        BasicTensor<S> out = BasicTensor<S>::from({1}, {static_cast<S>(m)});
        return push(std::move(out), needs(a), [this, a](Id o) {
            const S g = nodes_[o].grad[0] / static_cast<S>(nodes_[a].value.size());
            auto& ga = nodes_[a].grad;
            for (auto& v : ga.values()) v += g;
        });
    }

    // mean((a-b)^2), 64-bit accumulation.
    Id mse(Id a, Id b) {
        require_same_dims(a, b, "mse");
        const auto& av = nodes_[a].value;
        const auto& bv = nodes_[b].value;
        double acc = 0.0;
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
            acc += d * d;
        }
        BasicTensor<S> out = BasicTensor<S>::from({1}, {static_cast<S>(acc / av.size())});
        return push(std::move(out), needs(a) || needs(b), [this, a, b](Id o) {
            const auto& av2 = nodes_[a].value;
            const auto& bv2 = nodes_[b].value;
            const S g = nodes_[o].grad[0] * S(2) / static_cast<S>(av2.size());
            auto& ga = nodes_[a].grad;
            auto& gb = nodes_[b].grad;
            for (std::size_t i = 0; i < av2.size(); ++i) {
                const S d = av2[i] - bv2[i];
                ga[i] += g * d;
                gb[i] -= g * d;
            }
        });
    }

    // mean(|a-b|); sign(0) taken as 0.
    Id l1(Id a, Id b) {
        require_same_dims(a, b, "l1");
        const auto& av = nodes_[a].value;
        const auto& bv = nodes_[b].value;
        double acc = 0.0;
        for (std::size_t i = 0; i < av.size(); ++i)
            acc += std::abs(static_cast<double>(av[i]) - static_cast<double>(bv[i]));
        BasicTensor<S> out = BasicTensor<S>::from({1}, {static_cast<S>(acc / av.size())});
        return push(std::move(out), needs(a) || needs(b), [this, a, b](Id o) {
            const auto& av2 = nodes_[a].value;
            const auto& bv2 = nodes_[b].value;
            const S g = nodes_[o].grad[0] / static_cast<S>(av2.size());
            auto& ga = nodes_[a].grad;
            auto& gb = nodes_[b].grad;
            for (std::size_t i = 0; i < av2.size(); ++i) {
                const S d = av2[i] - bv2[i];
                const S s = d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0));
                ga[i] += g * s;
                gb[i] -= g * s;
            }
        });
    }

    void backward(Id out) {
        if (nodes_[check(out)].value.size() != 1)
            throw DimensionError("backward: output must be scalar, got " + dims_to_string(nodes_[out].value.dims()));
        nodes_[out].grad[0] = S(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
            if (nodes_[i].backprop) nodes_[i].backprop(i);
    }

private:
    struct Node {
        BasicTensor<S> value;
        BasicTensor<S> grad;
        bool requires_grad = false;
        std::function<void(Id)> backprop;
    };

    Id push(BasicTensor<S> value, bool requires_grad, std::function<void(Id)> backprop) {
        Node n;
        n.grad = BasicTensor<S>::zeros(value.dims());
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        if (requires_grad) n.backprop = std::move(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    Id check(Id id) const {
        if (id < 0 || id >= static_cast<Id>(nodes_.size())) throw DimensionError("invalid graph node id");
        return id;
    }

    bool needs(Id id) const { return nodes_[check(id)].requires_grad; }

    void require_same_dims(Id a, Id b, const char* op) const {
        if (!nodes_[check(a)].value.same_dims(nodes_[check(b)].value))
            throw DimensionError(std::string(op) + ": dims " + dims_to_string(nodes_[a].value.dims()) +
                                 " vs " + dims_to_string(nodes_[b].value.dims()));
    }

    void accumulate(Id id, const std::vector<S>& g) {
        auto& t = nodes_[id].grad;
        for (std::size_t i = 0; i < g.size(); ++i) t[i] += g[i];
    }

    static BasicTensor<S> transposed(const BasicTensor<S>& a, int n, int m) {
        BasicTensor<S> out = BasicTensor<S>::zeros({m, n});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                out[static_cast<std::size_t>(j) * n + i] = a[static_cast<std::size_t>(i) * m + j];
        return out;
    }

    std::vector<Node> nodes_;
};

// Scaled dot-product cross-attention over spatial tokens: queries from the
// guidance map, keys/values from the backbone feature map. Both maps must
// share spatial extents; output is [d_v, H, W]. Projections are bias-free.
template <typename S>
typename Graph<S>::Id cross_attention(Graph<S>& g, typename Graph<S>::Id x_query,
                                      typename Graph<S>::Id x_feat, typename Graph<S>::Id w_q,
                                      typename Graph<S>::Id w_k, typename Graph<S>::Id w_v) {
    // dims copied: pushing nodes below may reallocate the node storage
    const std::vector<int> qd = g.value(x_query).dims();
    const std::vector<int> fd = g.value(x_feat).dims();
    if (qd.size() != 3 || fd.size() != 3) throw DimensionError("cross_attention: expected [C,H,W] maps");
    if (qd[1] != fd[1] || qd[2] != fd[2])
        throw DimensionError("cross_attention: spatial extents " + dims_to_string(qd) + " vs " + dims_to_string(fd));
    const int n = qd[1] * qd[2];
    const int d = g.value(w_q).dims()[1];
    const int dv = g.value(w_v).dims()[1];

    auto q_tokens = g.transpose2(g.reshape(x_query, {qd[0], n}));  // [N, Cq]
    auto f_tokens = g.transpose2(g.reshape(x_feat, {fd[0], n}));   // [N, Cf]
    auto q = g.matmul(q_tokens, w_q);                              // [N, d]
    auto k = g.matmul(f_tokens, w_k);                              // [N, d]
    auto v = g.matmul(f_tokens, w_v);                              // [N, dv]
    auto logits = g.scale(g.matmul(q, g.transpose2(k)), S(1) / static_cast<S>(std::sqrt(static_cast<double>(d))));
    auto attn = g.softmax_rows(logits);
    auto out = g.matmul(attn, v);                                  // [N, dv]
    return g.reshape(g.transpose2(out), {dv, qd[1], qd[2]});
}

// Named trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.dims())) {}
};

// Parameters in fixed registration order; gradient reduction and optimizer
// traversal both follow this order so training is deterministic.
class ParamStore {
public:
    Param& add(const std::string& name, Tensor init) {
        for (const auto& p : params_)
            if (p.name == name) throw ValidationError("duplicate parameter name: " + name);
        params_.emplace_back(name, std::move(init));
        return params_.back();
    }

    std::size_t size() const { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    Param* find(const std::string& name) {
        for (auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    void zero_grads() {
        for (auto& p : params_)
            for (auto& g : p.grad.values()) g = 0.0f;
    }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

private:
    std::vector<Param> params_;
};

struct AdamWConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled weight decay, bias-corrected moments; moment state held in
// 64-bit per the toolkit's accumulation convention.
class AdamW {
public:
    AdamW(const ParamStore& params, AdamWConfig cfg);
    void step(ParamStore& params);
    long step_count() const { return step_; }

private:
    AdamWConfig cfg_;
    std::vector<TensorD> m_, v_;
    long step_ = 0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t checked = 0;
    bool passed(double tol) const { return max_rel_err < tol; }
};

// Central finite differences against the tape's analytic gradients. Runs the
// same templated kernels at double precision; h=1e-3 differences sit below
// float32 loss resolution, so the check is only meaningful in f64.
// Relative error is infinity-norm relative: ||a-f||_inf / max(||a||_inf,
// ||f||_inf), taken as 0 when both norms are below 1e-8. If
// max_elements_per_input > 0, that many coordinates per input are sampled
// (seeded) instead of sweeping everything.
GradCheckReport grad_check(
    const std::vector<TensorD>& inputs,
    const std::function<int(Graph<double>&, const std::vector<int>&)>& build_scalar, double h,
    int max_elements_per_input = 0, std::uint64_t seed = 1234);

// Sinusoidal position/timestep embedding of even dimension.
Tensor sinusoidal_embedding(int t, int dim);

// He-style init: N(0, sqrt(2/fan_in)).
Tensor he_init(Rng& rng, const std::vector<int>& dims, int fan_in);

}  // namespace evdiff
