#include "fissura/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "fissura/parallel.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "nn";

// Fixed-order lane-split reductions: independent accumulator lanes keep
// strict FP semantics vectorizable and the result identical for any
// thread count (order never depends on threading).
template <typename T>
double lane_sum(const T* p, std::size_t n) {
  constexpr int L = 8;
  double acc[L] = {};
  std::size_t i = 0;
  for (; i + L <= n; i += L)
    for (int l = 0; l < L; ++l) acc[l] += double(p[i + l]);
  double tail = 0.0;
  for (; i < n; ++i) tail += double(p[i]);
  for (int l = 0; l < L; ++l) tail += acc[l];
  return tail;
}

template <typename T>
double lane_dot(const T* a, const T* b, std::size_t n) {
  constexpr int L = 8;
  double acc[L] = {};
  std::size_t i = 0;
  for (; i + L <= n; i += L)
    for (int l = 0; l < L; ++l) acc[l] += double(a[i + l]) * double(b[i + l]);
  double tail = 0.0;
  for (; i < n; ++i) tail += double(a[i]) * double(b[i]);
  for (int l = 0; l < L; ++l) tail += acc[l];
  return tail;
}

// Three shifted dot products of one row pair (the per-row piece of a
// kernel-gradient accumulation), lane-split for vectorization.
template <typename T>
void dot3_row(const T* a, const T* s, int w, T* out) {
  constexpr int L = 8;
  T a0[L] = {}, a1[L] = {}, a2[L] = {};
  int x = 0;
  for (; x + L <= w; x += L)
    for (int l = 0; l < L; ++l) {
      const T ax = a[x + l];
      a0[l] += ax * s[x + l];
      a1[l] += ax * s[x + l + 1];
      a2[l] += ax * s[x + l + 2];
    }
  T t0 = 0, t1 = 0, t2 = 0;
  for (; x < w; ++x) {
    t0 += a[x] * s[x];
    t1 += a[x] * s[x + 1];
    t2 += a[x] * s[x + 2];
  }
  for (int l = 0; l < L; ++l) {
    t0 += a0[l];
    t1 += a1[l];
    t2 += a2[l];
  }
  out[0] = t0;
  out[1] = t1;
  out[2] = t2;
}

// Copy with a 1-voxel zero border on each spatial side.
template <typename T>
void pad1(const TensorT<T>& x, std::vector<T>& xp) {
  const int pd = x.d + 2, ph = x.h + 2, pw = x.w + 2;
  xp.assign(std::size_t(x.b) * x.c * pd * std::size_t(ph) * pw, T(0));
  for (int b = 0; b < x.b; ++b)
    for (int c = 0; c < x.c; ++c)
      for (int z = 0; z < x.d; ++z)
        for (int y = 0; y < x.h; ++y) {
          const T* src = &x.v[x.idx(b, c, z, y, 0)];
          T* dst = &xp[(((std::size_t(b) * x.c + c) * pd + z + 1) * ph + y + 1) * pw + 1];
          std::copy(src, src + x.w, dst);
        }
}

// Zero-stuffed input with the tap window baked in: sp[q] = x[(q-2)/2] when
// q-2 is even and in range, else 0, per axis; tconv out[j] = sum k[d]*sp[j+d].
template <typename T>
void stuff_pad(const TensorT<T>& x, std::vector<T>& sp) {
  const int pd = 2 * x.d + 2, ph = 2 * x.h + 2, pw = 2 * x.w + 2;
  sp.assign(std::size_t(x.b) * x.c * pd * std::size_t(ph) * pw, T(0));
  for (int b = 0; b < x.b; ++b)
    for (int c = 0; c < x.c; ++c)
      for (int z = 0; z < x.d; ++z)
        for (int y = 0; y < x.h; ++y) {
          const T* src = &x.v[x.idx(b, c, z, y, 0)];
          T* dst = &sp[(((std::size_t(b) * x.c + c) * pd + 2 * z + 2) * ph + 2 * y + 2) * pw + 2];
          for (int xx = 0; xx < x.w; ++xx) dst[2 * xx] = src[xx];
        }
}

// Copy dy into a buffer padded high by 2 per axis (for tconv input grads).
template <typename T>
void pad_high2(const TensorT<T>& x, std::vector<T>& xp) {
  const int pd = x.d + 2, ph = x.h + 2, pw = x.w + 2;
  xp.assign(std::size_t(x.b) * x.c * pd * std::size_t(ph) * pw, T(0));
  for (int b = 0; b < x.b; ++b)
    for (int c = 0; c < x.c; ++c)
      for (int z = 0; z < x.d; ++z)
        for (int y = 0; y < x.h; ++y) {
          const T* src = &x.v[x.idx(b, c, z, y, 0)];
          T* dst = &xp[(((std::size_t(b) * x.c + c) * pd + z) * ph + y) * pw];
          std::copy(src, src + x.w, dst);
        }
}

}  // namespace

template <typename T>
void conv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch,
                    TensorT<T>& y) {
  y.resize(x.b, out_ch, x.d, x.h, x.w);
  std::vector<T> xp;
  pad1(x, xp);
  const int ph = x.h + 2, pw = x.w + 2;
  const std::size_t cstride = std::size_t(x.d + 2) * ph * pw;

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
  for (int b = 0; b < x.b; ++b)
    for (int o = 0; o < out_ch; ++o) {
      const T bo = bias ? bias[o] : T(0);
      for (int z = 0; z < x.d; ++z)
        for (int yy = 0; yy < x.h; ++yy) {
          T* yr = &y.v[y.idx(b, o, z, yy, 0)];
          std::fill(yr, yr + x.w, bo);
          for (int c = 0; c < x.c; ++c) {
            const T* kp = &k[(std::size_t(o) * x.c + c) * 27];
            const T* plane = &xp[(std::size_t(b) * x.c + c) * cstride];
            for (int dz = 0; dz < 3; ++dz)
              for (int dy = 0; dy < 3; ++dy) {
                const T* src = &plane[((std::size_t(z) + dz) * ph + yy + dy) * pw];
                const T k0 = kp[dz * 9 + dy * 3], k1 = kp[dz * 9 + dy * 3 + 1],
                        k2 = kp[dz * 9 + dy * 3 + 2];
                for (int xx = 0; xx < x.w; ++xx)
                  yr[xx] += k0 * src[xx] + k1 * src[xx + 1] + k2 * src[xx + 2];
              }
          }
        }
    }
}

template <typename T>
void conv3d_backward(const TensorT<T>& x, const T* k, int out_ch,
                     const TensorT<T>& dy, TensorT<T>* dx, T* dk, T* db) {
  require(dy.b == x.b && dy.c == out_ch && dy.d == x.d && dy.h == x.h && dy.w == x.w, kModule,
          "conv backward shape mismatch");
  std::vector<T> xp;
  pad1(x, xp);
  const int ph = x.h + 2, pw = x.w + 2;
  const std::size_t cstride = std::size_t(x.d + 2) * ph * pw;

  if (db) {
#pragma omp parallel for num_threads(par::max_threads()) schedule(static)
    for (int o = 0; o < out_ch; ++o) {
      double acc = 0.0;
      for (int b = 0; b < dy.b; ++b)
        acc += lane_sum(&dy.v[dy.idx(b, o, 0, 0, 0)], dy.spatial());
      db[o] += T(acc);
    }
  }

  if (dk) {
#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
    for (int o = 0; o < out_ch; ++o)
      for (int c = 0; c < x.c; ++c) {
        double acc[27] = {};
        for (int b = 0; b < x.b; ++b) {
          const T* plane = &xp[(std::size_t(b) * x.c + c) * cstride];
          for (int z = 0; z < x.d; ++z)
            for (int yy = 0; yy < x.h; ++yy) {
              const T* dyr = &dy.v[dy.idx(b, o, z, yy, 0)];
              for (int dz = 0; dz < 3; ++dz)
                for (int dyk = 0; dyk < 3; ++dyk) {
                  const T* src = &plane[((std::size_t(z) + dz) * ph + yy + dyk) * pw];
                  T d3[3];
                  dot3_row(dyr, src, x.w, d3);
                  acc[dz * 9 + dyk * 3] += double(d3[0]);
                  acc[dz * 9 + dyk * 3 + 1] += double(d3[1]);
                  acc[dz * 9 + dyk * 3 + 2] += double(d3[2]);
                }
            }
        }
        T* dst = &dk[(std::size_t(o) * x.c + c) * 27];
        for (int t = 0; t < 27; ++t) dst[t] += T(acc[t]);
      }
  }

  if (dx) {
    dx->resize(x.b, x.c, x.d, x.h, x.w);
    std::vector<T> dyp;
    pad1(dy, dyp);
    const std::size_t ostride = cstride;  // same padded spatial extent

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
    for (int b = 0; b < x.b; ++b)
      for (int c = 0; c < x.c; ++c) {
        for (int z = 0; z < x.d; ++z)
          for (int yy = 0; yy < x.h; ++yy) {
            T* dxr = &dx->v[dx->idx(b, c, z, yy, 0)];
            for (int o = 0; o < out_ch; ++o) {
              const T* kp = &k[(std::size_t(o) * x.c + c) * 27];
              const T* plane = &dyp[(std::size_t(b) * out_ch + o) * ostride];
              for (int dz = 0; dz < 3; ++dz)
                for (int dyk = 0; dyk < 3; ++dyk) {
                  // dx[j] = sum_d k[d] * dy[j + 1 - d] = sum_d k[d] * dyp[j + 2 - d]
                  const T* src = &plane[((std::size_t(z) + 2 - dz) * ph + yy + 2 - dyk) * pw];
                  const T k0 = kp[dz * 9 + dyk * 3], k1 = kp[dz * 9 + dyk * 3 + 1],
                          k2 = kp[dz * 9 + dyk * 3 + 2];
                  for (int xx = 0; xx < x.w; ++xx)
                    dxr[xx] += k0 * src[xx + 2] + k1 * src[xx + 1] + k2 * src[xx];
                }
            }
          }
      }
  }
}

template <typename T>
void tconv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch,
                     TensorT<T>& y) {
  y.resize(x.b, out_ch, 2 * x.d, 2 * x.h, 2 * x.w);
  std::vector<T> sp;
  stuff_pad(x, sp);
  const int ph = 2 * x.h + 2, pw = 2 * x.w + 2;
  const std::size_t cstride = std::size_t(2 * x.d + 2) * ph * pw;

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
  for (int b = 0; b < x.b; ++b)
    for (int o = 0; o < out_ch; ++o) {
      const T bo = bias ? bias[o] : T(0);
      for (int z = 0; z < y.d; ++z)
        for (int yy = 0; yy < y.h; ++yy) {
          T* yr = &y.v[y.idx(b, o, z, yy, 0)];
          std::fill(yr, yr + y.w, bo);
          for (int c = 0; c < x.c; ++c) {
            const T* kp = &k[(std::size_t(o) * x.c + c) * 27];
            const T* plane = &sp[(std::size_t(b) * x.c + c) * cstride];
            for (int dz = 0; dz < 3; ++dz)
              for (int dy = 0; dy < 3; ++dy) {
                const T* src = &plane[((std::size_t(z) + dz) * ph + yy + dy) * pw];
                const T k0 = kp[dz * 9 + dy * 3], k1 = kp[dz * 9 + dy * 3 + 1],
                        k2 = kp[dz * 9 + dy * 3 + 2];
                for (int xx = 0; xx < y.w; ++xx)
                  yr[xx] += k0 * src[xx] + k1 * src[xx + 1] + k2 * src[xx + 2];
              }
          }
        }
    }
}

template <typename T>
void tconv3d_backward(const TensorT<T>& x, const T* k, int out_ch,
                      const TensorT<T>& dy, TensorT<T>* dx, T* dk, T* db) {
  require(dy.b == x.b && dy.c == out_ch && dy.d == 2 * x.d && dy.h == 2 * x.h &&
              dy.w == 2 * x.w,
          kModule, "tconv backward shape mismatch");

  if (db) {
#pragma omp parallel for num_threads(par::max_threads()) schedule(static)
    for (int o = 0; o < out_ch; ++o) {
      double acc = 0.0;
      for (int b = 0; b < dy.b; ++b)
        acc += lane_sum(&dy.v[dy.idx(b, o, 0, 0, 0)], dy.spatial());
      db[o] += T(acc);
    }
  }

  if (dk) {
    std::vector<T> sp;
    stuff_pad(x, sp);
    const int ph = 2 * x.h + 2, pw = 2 * x.w + 2;
    const std::size_t cstride = std::size_t(2 * x.d + 2) * ph * pw;

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
    for (int o = 0; o < out_ch; ++o)
      for (int c = 0; c < x.c; ++c) {
        double acc[27] = {};
        for (int b = 0; b < x.b; ++b) {
          const T* plane = &sp[(std::size_t(b) * x.c + c) * cstride];
          for (int z = 0; z < dy.d; ++z)
            for (int yy = 0; yy < dy.h; ++yy) {
              const T* dyr = &dy.v[dy.idx(b, o, z, yy, 0)];
              for (int dz = 0; dz < 3; ++dz)
                for (int dyk = 0; dyk < 3; ++dyk) {
                  const T* src = &plane[((std::size_t(z) + dz) * ph + yy + dyk) * pw];
                  T d3[3];
                  dot3_row(dyr, src, dy.w, d3);
                  acc[dz * 9 + dyk * 3] += double(d3[0]);
                  acc[dz * 9 + dyk * 3 + 1] += double(d3[1]);
                  acc[dz * 9 + dyk * 3 + 2] += double(d3[2]);
                }
            }
        }
        T* dst = &dk[(std::size_t(o) * x.c + c) * 27];
        for (int t = 0; t < 27; ++t) dst[t] += T(acc[t]);
      }
  }

  if (dx) {
    dx->resize(x.b, x.c, x.d, x.h, x.w);
    std::vector<T> dyp;
    pad_high2(dy, dyp);
    const int ph = dy.h + 2, pw = dy.w + 2;
    const std::size_t ostride = std::size_t(dy.d + 2) * ph * pw;

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
    for (int b = 0; b < x.b; ++b)
      for (int c = 0; c < x.c; ++c) {
        for (int iz = 0; iz < x.d; ++iz)
          for (int iy = 0; iy < x.h; ++iy) {
            T* dxr = &dx->v[dx->idx(b, c, iz, iy, 0)];
            for (int o = 0; o < out_ch; ++o) {
              const T* kp = &k[(std::size_t(o) * x.c + c) * 27];
              const T* plane = &dyp[(std::size_t(b) * out_ch + o) * ostride];
              for (int dz = 0; dz < 3; ++dz)
                for (int dyk = 0; dyk < 3; ++dyk) {
                  // dx[i] = sum_d k[d] * dy[2i + 2 - d], zero beyond the edge
                  const T* src =
                      &plane[((std::size_t(2 * iz) + 2 - dz) * ph + 2 * iy + 2 - dyk) * pw];
                  const T k0 = kp[dz * 9 + dyk * 3], k1 = kp[dz * 9 + dyk * 3 + 1],
                          k2 = kp[dz * 9 + dyk * 3 + 2];
                  for (int ix = 0; ix < x.w; ++ix)
                    dxr[ix] += k0 * src[2 * ix + 2] + k1 * src[2 * ix + 1] + k2 * src[2 * ix];
                }
            }
          }
      }
  }
}

template <typename T>
void maxpool3d_forward(const TensorT<T>& x, TensorT<T>& y, std::vector<std::int32_t>& argmax) {
  require(x.d % 2 == 0 && x.h % 2 == 0 && x.w % 2 == 0, kModule,
          "maxpool requires even spatial dims");
  y.resize(x.b, x.c, x.d / 2, x.h / 2, x.w / 2);
  argmax.assign(y.size(), 0);

#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
  for (int b = 0; b < x.b; ++b)
    for (int c = 0; c < x.c; ++c)
      for (int oz = 0; oz < y.d; ++oz)
        for (int oy = 0; oy < y.h; ++oy)
          for (int ox = 0; ox < y.w; ++ox) {
            T best = x.at(b, c, 2 * oz, 2 * oy, 2 * ox);
            std::size_t best_i = x.idx(b, c, 2 * oz, 2 * oy, 2 * ox);
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  const std::size_t i = x.idx(b, c, 2 * oz + dz, 2 * oy + dy, 2 * ox + dx);
                  if (x.v[i] > best) {  // strict: first in x-fastest order wins ties
                    best = x.v[i];
                    best_i = i;
                  }
                }
            const std::size_t oi = y.idx(b, c, oz, oy, ox);
            y.v[oi] = best;
            argmax[oi] = std::int32_t(best_i);
          }
}

template <typename T>
void maxpool3d_backward(const std::vector<std::int32_t>& argmax, const TensorT<T>& dy,
                        TensorT<T>& dx) {
  require(argmax.size() == dy.size(), kModule, "maxpool argmax/grad size mismatch");
  std::fill(dx.v.begin(), dx.v.end(), T(0));
  const std::size_t per_bc = dy.spatial();
#pragma omp parallel for collapse(2) num_threads(par::max_threads()) schedule(static)
  for (int b = 0; b < dy.b; ++b)
    for (int c = 0; c < dy.c; ++c) {
      const std::size_t base = (std::size_t(b) * dy.c + c) * per_bc;
      for (std::size_t i = base; i < base + per_bc; ++i) dx.v[argmax[i]] += dy.v[i];
    }
}

template <typename T>
void batchnorm3d_forward(TensorT<T>& x, const T* gamma, const T* beta, T* running_mean,
                         T* running_var, double momentum, double eps, bool train,
                         BnCache<T>* cache) {
  const std::size_t per_bc = x.spatial();
  const std::size_t n = std::size_t(x.b) * per_bc;
  if (train) {
    require(n >= 2, kModule, "batchnorm train mode needs at least 2 elements per channel");
    require(cache != nullptr, kModule, "batchnorm train mode needs a cache");
    cache->inv_std.assign(x.c, T(0));
    cache->xhat.resize(x.b, x.c, x.d, x.h, x.w);
  }

#pragma omp parallel for num_threads(par::max_threads()) schedule(static)
  for (int c = 0; c < x.c; ++c) {
    double mean, inv_std;
    if (train) {
      double s = 0.0;
      for (int b = 0; b < x.b; ++b) s += lane_sum(&x.v[x.idx(b, c, 0, 0, 0)], per_bc);
      mean = s / double(n);
      double v = 0.0;
      for (int b = 0; b < x.b; ++b) {
        const T* p = &x.v[x.idx(b, c, 0, 0, 0)];
        constexpr int L = 8;
        double acc[L] = {};
        std::size_t i = 0;
        for (; i + L <= per_bc; i += L)
          for (int l = 0; l < L; ++l) {
            const double d = double(p[i + l]) - mean;
            acc[l] += d * d;
          }
        for (; i < per_bc; ++i) {
          const double d = double(p[i]) - mean;
          v += d * d;
        }
        for (int l = 0; l < L; ++l) v += acc[l];
      }
      const double var = v / double(n);  // biased
      inv_std = 1.0 / std::sqrt(var + eps);
      running_mean[c] = T((1.0 - momentum) * double(running_mean[c]) + momentum * mean);
      running_var[c] = T((1.0 - momentum) * double(running_var[c]) + momentum * var);
      cache->inv_std[c] = T(inv_std);
    } else {
      mean = double(running_mean[c]);
      inv_std = 1.0 / std::sqrt(double(running_var[c]) + eps);
    }

    const T g = gamma[c], bt = beta[c];
    const T m = T(mean), is = T(inv_std);
    for (int b = 0; b < x.b; ++b) {
      T* p = &x.v[x.idx(b, c, 0, 0, 0)];
      if (train) {
        T* xh = &cache->xhat.v[cache->xhat.idx(b, c, 0, 0, 0)];
        for (std::size_t i = 0; i < per_bc; ++i) {
          const T h = (p[i] - m) * is;
          xh[i] = h;
          p[i] = g * h + bt;
        }
      } else {
        for (std::size_t i = 0; i < per_bc; ++i) p[i] = g * (p[i] - m) * is + bt;
      }
    }
  }
}

template <typename T>
void batchnorm3d_backward(const BnCache<T>& cache, const T* gamma, const TensorT<T>& dy,
                          TensorT<T>& dx, T* dgamma, T* dbeta) {
  require(cache.xhat.same_shape(dy), kModule, "batchnorm backward shape mismatch");
  dx.resize(dy.b, dy.c, dy.d, dy.h, dy.w);
  const std::size_t per_bc = dy.spatial();
  const double n = double(std::size_t(dy.b) * per_bc);

#pragma omp parallel for num_threads(par::max_threads()) schedule(static)
  for (int c = 0; c < dy.c; ++c) {
    double s1 = 0.0, s2 = 0.0;
    for (int b = 0; b < dy.b; ++b) {
      const T* dyp = &dy.v[dy.idx(b, c, 0, 0, 0)];
      const T* xh = &cache.xhat.v[cache.xhat.idx(b, c, 0, 0, 0)];
      s1 += lane_sum(dyp, per_bc);
      s2 += lane_dot(dyp, xh, per_bc);
    }
    dgamma[c] += T(s2);
    dbeta[c] += T(s1);

    const T g_is = gamma[c] * cache.inv_std[c];
    const T m1 = T(s1 / n), m2 = T(s2 / n);
    for (int b = 0; b < dy.b; ++b) {
      const T* dyp = &dy.v[dy.idx(b, c, 0, 0, 0)];
      const T* xh = &cache.xhat.v[cache.xhat.idx(b, c, 0, 0, 0)];
      T* dxp = &dx.v[dx.idx(b, c, 0, 0, 0)];
      for (std::size_t i = 0; i < per_bc; ++i) dxp[i] = g_is * (dyp[i] - m1 - xh[i] * m2);
    }
  }
}

template <typename T>
void relu_forward(TensorT<T>& x) {
  for (T& v : x.v) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward(const TensorT<T>& out, TensorT<T>& d) {
  require(out.same_shape(d), kModule, "relu backward shape mismatch");
  for (std::size_t i = 0; i < d.v.size(); ++i)
    if (!(out.v[i] > T(0))) d.v[i] = T(0);
}

template <typename T>
void sigmoid_forward(TensorT<T>& x) {
  for (T& v : x.v) v = T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void sigmoid_backward(const TensorT<T>& out, TensorT<T>& d) {
  require(out.same_shape(d), kModule, "sigmoid backward shape mismatch");
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] *= out.v[i] * (T(1) - out.v[i]);
}

template <typename T>
void concat_channels(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& y) {
  require(a.b == b.b && a.d == b.d && a.h == b.h && a.w == b.w, kModule,
          "concat spatial/batch mismatch");
  y.resize(a.b, a.c + b.c, a.d, a.h, a.w);
  const std::size_t sa = std::size_t(a.c) * a.spatial(), sb = std::size_t(b.c) * b.spatial();
  for (int bi = 0; bi < a.b; ++bi) {
    std::copy(&a.v[bi * sa], &a.v[bi * sa] + sa, &y.v[bi * (sa + sb)]);
    std::copy(&b.v[bi * sb], &b.v[bi * sb] + sb, &y.v[bi * (sa + sb) + sa]);
  }
}

template <typename T>
void split_channels(const TensorT<T>& dy, TensorT<T>& da, TensorT<T>& db) {
  require(dy.c == da.c + db.c && dy.b == da.b, kModule, "split channel mismatch");
  const std::size_t sa = std::size_t(da.c) * da.spatial(), sb = std::size_t(db.c) * db.spatial();
  for (int bi = 0; bi < dy.b; ++bi) {
    std::copy(&dy.v[bi * (sa + sb)], &dy.v[bi * (sa + sb)] + sa, &da.v[bi * sa]);
    std::copy(&dy.v[bi * (sa + sb) + sa], &dy.v[bi * (sa + sb) + sa] + sb, &db.v[bi * sb]);
  }
}

#define FISSURA_INSTANTIATE(T)                                                                  \
  template void conv3d_forward<T>(const TensorT<T>&, const T*, const T*, int, TensorT<T>&);     \
  template void conv3d_backward<T>(const TensorT<T>&, const T*, int, const TensorT<T>&,         \
                                   TensorT<T>*, T*, T*);                                        \
  template void tconv3d_forward<T>(const TensorT<T>&, const T*, const T*, int, TensorT<T>&);    \
  template void tconv3d_backward<T>(const TensorT<T>&, const T*, int, const TensorT<T>&,        \
                                    TensorT<T>*, T*, T*);                                       \
  template void maxpool3d_forward<T>(const TensorT<T>&, TensorT<T>&,                            \
                                     std::vector<std::int32_t>&);                               \
  template void maxpool3d_backward<T>(const std::vector<std::int32_t>&, const TensorT<T>&,      \
                                      TensorT<T>&);                                             \
  template void batchnorm3d_forward<T>(TensorT<T>&, const T*, const T*, T*, T*, double, double, \
                                       bool, BnCache<T>*);                                      \
  template void batchnorm3d_backward<T>(const BnCache<T>&, const T*, const TensorT<T>&,         \
                                        TensorT<T>&, T*, T*);                                   \
  template void relu_forward<T>(TensorT<T>&);                                                   \
  template void relu_backward<T>(const TensorT<T>&, TensorT<T>&);                               \
  template void sigmoid_forward<T>(TensorT<T>&);                                                \
  template void sigmoid_backward<T>(const TensorT<T>&, TensorT<T>&);                            \
  template void concat_channels<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>&);          \
  template void split_channels<T>(const TensorT<T>&, TensorT<T>&, TensorT<T>&);

FISSURA_INSTANTIATE(float)
FISSURA_INSTANTIATE(double)

}  // namespace fissura
