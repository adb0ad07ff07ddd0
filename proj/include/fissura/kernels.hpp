#pragma once

#include "fissura/tensor.hpp"

namespace fissura {

// All spatial kernels are 3x3x3.  Convolution kernels are stored flat as
// (out_ch, in_ch, kz, ky, kx).  Gradient outputs dk/db/dgamma/dbeta
// accumulate (+=) into caller storage; dx tensors are overwritten.

/// Zero-padded (pad 1, stride 1) cross-correlation; y keeps spatial dims.
template <typename T>
void conv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch,
                    TensorT<T>& y);

template <typename T>
void conv3d_backward(const TensorT<T>& x, const T* k, int out_ch,
                     const TensorT<T>& dy, TensorT<T>* dx, T* dk, T* db);

/// Stride-2 transposed convolution: zero-stuff x (even positions carry the
/// input), correlate with k, keep output positions [0, 2n) per axis.
template <typename T>
void tconv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch,
                     TensorT<T>& y);

template <typename T>
void tconv3d_backward(const TensorT<T>& x, const T* k, int out_ch,
                      const TensorT<T>& dy, TensorT<T>* dx, T* dk, T* db);

/// 2x2x2 max pooling on disjoint blocks; argmax records the flat input
/// index for gradient routing (first in x-fastest order wins ties).
template <typename T>
void maxpool3d_forward(const TensorT<T>& x, TensorT<T>& y, std::vector<std::int32_t>& argmax);

template <typename T>
void maxpool3d_backward(const std::vector<std::int32_t>& argmax, const TensorT<T>& dy,
                        TensorT<T>& dx);

template <typename T>
struct BnCache {
  std::vector<T> inv_std;  // per channel
  TensorT<T> xhat;
};

/// Per-channel batch normalization over batch x spatial, biased variance.
/// Train mode normalizes with batch statistics and updates running stats
/// as running <- (1-momentum)*running + momentum*batch; infer mode uses
/// the running statistics.  In-place on x.
template <typename T>
void batchnorm3d_forward(TensorT<T>& x, const T* gamma, const T* beta, T* running_mean,
                         T* running_var, double momentum, double eps, bool train,
                         BnCache<T>* cache);

template <typename T>
void batchnorm3d_backward(const BnCache<T>& cache, const T* gamma, const TensorT<T>& dy,
                          TensorT<T>& dx, T* dgamma, T* dbeta);

template <typename T>
void relu_forward(TensorT<T>& x);
template <typename T>
void relu_backward(const TensorT<T>& out, TensorT<T>& d);
template <typename T>
void sigmoid_forward(TensorT<T>& x);
template <typename T>
void sigmoid_backward(const TensorT<T>& out, TensorT<T>& d);

/// Channel concatenation [a | b] and its gradient split.
template <typename T>
void concat_channels(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& y);
template <typename T>
void split_channels(const TensorT<T>& dy, TensorT<T>& da, TensorT<T>& db);

}  // namespace fissura
