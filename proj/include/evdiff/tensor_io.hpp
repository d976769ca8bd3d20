#pragma once

#include <string>

#include "evdiff/tensor.hpp"

namespace evdiff {

// ".ten" container: little-endian, magic "TEN0", u8 ndim, ndim x u32 extents,
// then product(extents) float32 values. save/load is a bit-exact involution
// for finite tensors.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

}  // namespace evdiff
