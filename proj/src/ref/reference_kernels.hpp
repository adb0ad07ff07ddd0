#pragma once

#include <cstdint>
#include <vector>

#include "fissura/tensor.hpp"

namespace fissura::ref {

// Naive single-threaded kernels written straight from the definitions, with
// explicit bounds checks instead of padded buffers.  They serve as oracles
// for the optimized kernels and as the baseline in the benchmark tool.

template <typename T>
void conv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch, TensorT<T>& y);

template <typename T>
void conv3d_backward(const TensorT<T>& x, const T* k, int out_ch, const TensorT<T>& dy,
                     TensorT<T>* dx, T* dk, T* db);

template <typename T>
void tconv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch, TensorT<T>& y);

template <typename T>
void tconv3d_backward(const TensorT<T>& x, const T* k, int out_ch, const TensorT<T>& dy,
                      TensorT<T>* dx, T* dk, T* db);

template <typename T>
void maxpool3d_forward(const TensorT<T>& x, TensorT<T>& y, std::vector<std::int32_t>& argmax);

template <typename T>
void batchnorm3d_train_forward(TensorT<T>& x, const T* gamma, const T* beta, double eps);

}  // namespace fissura::ref
