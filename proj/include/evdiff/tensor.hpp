#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "evdiff/errors.hpp"

namespace evdiff {

// Dense row-major n-d array. Feature tensors are channel-first [C,H,W].
// The shipped dtype is float32; the double instantiation exists for loss
// accumulation and for running the differentiable kernels under the
// finite-difference harness.
template <typename S>
class BasicTensor {
public:
    BasicTensor() = default;

    static BasicTensor zeros(std::vector<int> dims) {
        BasicTensor t;
        t.dims_ = std::move(dims);
        t.data_.assign(check_dims(t.dims_), S(0));
        return t;
    }

    static BasicTensor full(std::vector<int> dims, S value) {
        BasicTensor t = zeros(std::move(dims));
        for (auto& v : t.data_) v = value;
        return t;
    }

    static BasicTensor from(std::vector<int> dims, std::vector<S> data) {
        std::size_t n = check_dims(dims);
        if (data.size() != n)
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match dim product " + std::to_string(n));
        BasicTensor t;
        t.dims_ = std::move(dims);
        t.data_ = std::move(data);
        return t;
    }

    const std::vector<int>& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }
    std::vector<S>& values() { return data_; }
    const std::vector<S>& values() const { return data_; }

    S& operator[](std::size_t i) { return data_[i]; }
    S operator[](std::size_t i) const { return data_[i]; }

    // [C,H,W] accessor for the common 3-d case.
    S& at3(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
    }
    S at3(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
    }

    // [H,W] accessor for the 2-d case.
    S& at2(int y, int x) { return data_[static_cast<std::size_t>(y) * dims_[1] + x]; }
    S at2(int y, int x) const { return data_[static_cast<std::size_t>(y) * dims_[1] + x]; }

    bool same_dims(const BasicTensor& o) const { return dims_ == o.dims_; }

    bool all_finite() const {
        for (S v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename T>
    BasicTensor<T> cast() const {
        BasicTensor<T> out = BasicTensor<T>::zeros(dims_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
        return out;
    }

    static std::size_t check_dims(const std::vector<int>& dims) {
        if (dims.empty()) throw DimensionError("tensor dims must be nonempty");
        std::size_t n = 1;
        for (int d : dims) {
            if (d <= 0) throw DimensionError("tensor extent must be positive, got " + std::to_string(d));
            n *= static_cast<std::size_t>(d);
            if (n > (std::size_t(1) << 31))
                throw DimensionError("tensor element count exceeds 2^31");
        }
        return n;
    }

private:
    std::vector<int> dims_;
    std::vector<S> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

inline std::string dims_to_string(const std::vector<int>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

}  // namespace evdiff
