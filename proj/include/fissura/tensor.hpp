#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fissura/error.hpp"

namespace fissura {

/// Dense 5D activation tensor, layout [batch, channels, depth, height,
/// width], width fastest.  Float for training, double for gradient checks.
template <typename T>
struct TensorT {
  int b = 0, c = 0, d = 0, h = 0, w = 0;
  std::vector<T> v;

  TensorT() = default;
  TensorT(int b_, int c_, int d_, int h_, int w_) { resize(b_, c_, d_, h_, w_); }

  void resize(int b_, int c_, int d_, int h_, int w_) {
    b = b_;
    c = c_;
    d = d_;
    h = h_;
    w = w_;
    v.assign(size(), T(0));
  }
  std::size_t size() const {
    return std::size_t(b) * c * d * std::size_t(h) * std::size_t(w);
  }
  std::size_t spatial() const { return std::size_t(d) * h * w; }
  std::size_t idx(int bi, int ci, int zi, int yi, int xi) const {
    return (((std::size_t(bi) * c + ci) * d + zi) * h + yi) * w + xi;
  }
  T at(int bi, int ci, int zi, int yi, int xi) const { return v[idx(bi, ci, zi, yi, xi)]; }
  T& at(int bi, int ci, int zi, int yi, int xi) { return v[idx(bi, ci, zi, yi, xi)]; }
  bool same_shape(const TensorT& o) const {
    return b == o.b && c == o.c && d == o.d && h == o.h && w == o.w;
  }
  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(double(x))) return false;
    return true;
  }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace fissura
