#include "gntm/loss.hpp"

#include <algorithm>
#include <cmath>

namespace gntm {

double cross_entropy(const Tensor& probs, const Tensor& y) {
  if (probs.size() != y.size()) {
    throw DimensionError("cross_entropy: " + shape_str(probs.shape()) + " vs " + shape_str(y.shape()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) loss -= y[i] * std::log(std::max(probs[i], kProbFloor));
  }
  return loss;
}

}  // namespace gntm
