#pragma once

#include "gntm/tensor.hpp"

namespace gntm {

inline constexpr double kProbFloor = 1e-12;

/// −Σ y_i·log(max(p_i, 1e-12))
double cross_entropy(const Tensor& probs, const Tensor& y);

}  // namespace gntm
