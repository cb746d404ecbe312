#pragma once

#include <vector>

#include "gntm/model.hpp"

namespace gntm {

/// Straight-line forward pass in long double, written independently of the
/// Tensor kernels. Serves as the finite-difference oracle in grad_check,
/// where double-precision rounding in the loss would swamp gradients near
/// 1e-8.
std::vector<long double> reference_probs(const ModelParams& p, const ModelConfig& cfg, const Tensor& window);

/// −log max(p_y, 1e-12) on reference_probs.
long double reference_loss(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, const Tensor& label);

}  // namespace gntm
