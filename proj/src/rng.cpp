#include "evdiff/rng.hpp"

#include "evdiff/errors.hpp"

namespace evdiff {

Tensor gaussian_sample(Rng& rng, const std::vector<int>& dims) {
    Tensor t = Tensor::zeros(dims);  // validates nonempty dims, positive extents
    for (auto& v : t.values()) v = static_cast<float>(rng.normal());
    return t;
}

}  // namespace evdiff
