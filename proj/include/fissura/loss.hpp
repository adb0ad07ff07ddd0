#pragma once

#include <vector>

#include "fissura/tensor.hpp"

namespace fissura {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before taking logs.
inline constexpr double kProbClamp = 1e-7;

// -sum_i p[i] * ln(q[i]) for two discrete distributions of equal length.
double cross_entropy(const std::vector<double>& p, const std::vector<double>& q);

// Mean voxelwise binary cross entropy between predicted probabilities and
// {0,1} targets.  Accumulated serially in double, so the value is identical
// for any thread count.
template <typename T>
double bce_loss(const TensorT<T>& prob, const TensorT<T>& target);

// Gradient of bce_loss with respect to prob.  Where the clamp is active the
// loss is locally constant, so the gradient is zero there.
template <typename T>
void bce_grad(const TensorT<T>& prob, const TensorT<T>& target, TensorT<T>& dprob);

}  // namespace fissura
