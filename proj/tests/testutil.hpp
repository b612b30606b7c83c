#pragma once

// Shared helpers for building test inputs.

#include <algorithm>
#include <vector>

#include "dtuap/rng.hpp"
#include "dtuap/tensor.hpp"

namespace testutil {

inline dtuap::Tensor random_tensor(std::vector<int> shape, dtuap::Rng& rng,
                                   float lo = -1.0f, float hi = 1.0f,
                                   bool requires_grad = false) {
    dtuap::Tensor t(std::move(shape), 0.0f, requires_grad);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// All values pairwise separated by at least `gap`: a shuffled centered grid.
// Keeps argmax selections stable under finite-difference probes.
inline dtuap::Tensor well_separated_tensor(std::vector<int> shape, dtuap::Rng& rng,
                                           float gap = 0.05f) {
    dtuap::Tensor t(std::move(shape));
    const auto n = t.values().size();
    for (std::size_t i = 0; i < n; ++i)
        t.values()[i] = gap * (static_cast<float>(i) - static_cast<float>(n) / 2.0f);
    for (std::size_t i = n; i > 1; --i)
        std::swap(t.values()[i - 1], t.values()[rng.uniform_u32(static_cast<std::uint32_t>(i))]);
    return t;
}

} // namespace testutil
