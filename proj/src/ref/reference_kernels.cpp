#include "reference_kernels.hpp"

#include <cmath>

namespace fissura::ref {

namespace {

template <typename T>
double sample(const TensorT<T>& x, int b, int c, int z, int y, int xx) {
  if (z < 0 || z >= x.d || y < 0 || y >= x.h || xx < 0 || xx >= x.w) return 0.0;
  return double(x.at(b, c, z, y, xx));
}

// Zero-stuffed tconv source: per axis the tap index q maps to x[q/2] when q
// is even and in range.
template <typename T>
double stuffed(const TensorT<T>& x, int b, int c, int qz, int qy, int qx) {
  if (qz % 2 || qy % 2 || qx % 2) return 0.0;
  return sample(x, b, c, qz / 2, qy / 2, qx / 2);
}

inline std::size_t kidx(int o, int cin, int c, int dz, int dy, int dx) {
  return ((((std::size_t(o) * cin + c) * 3 + dz) * 3 + dy) * 3 + dx);
}

}  // namespace

template <typename T>
void conv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch, TensorT<T>& y) {
  y.resize(x.b, out_ch, x.d, x.h, x.w);
  for (int b = 0; b < x.b; ++b)
    for (int o = 0; o < out_ch; ++o)
      for (int z = 0; z < x.d; ++z)
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) {
            double acc = bias ? double(bias[o]) : 0.0;
            for (int c = 0; c < x.c; ++c)
              for (int dz = 0; dz < 3; ++dz)
                for (int dy = 0; dy < 3; ++dy)
                  for (int dx = 0; dx < 3; ++dx)
                    acc += double(k[kidx(o, x.c, c, dz, dy, dx)]) *
                           sample(x, b, c, z + dz - 1, yy + dy - 1, xx + dx - 1);
            y.at(b, o, z, yy, xx) = T(acc);
          }
}

template <typename T>
void conv3d_backward(const TensorT<T>& x, const T* k, int out_ch, const TensorT<T>& dy,
                     TensorT<T>* dx, T* dk, T* db) {
  if (db)
    for (int o = 0; o < out_ch; ++o) {
      double acc = 0.0;
      for (int b = 0; b < dy.b; ++b)
        for (int z = 0; z < dy.d; ++z)
          for (int yy = 0; yy < dy.h; ++yy)
            for (int xx = 0; xx < dy.w; ++xx) acc += double(dy.at(b, o, z, yy, xx));
      db[o] += T(acc);
    }

  if (dk)
    for (int o = 0; o < out_ch; ++o)
      for (int c = 0; c < x.c; ++c)
        for (int dz = 0; dz < 3; ++dz)
          for (int dyk = 0; dyk < 3; ++dyk)
            for (int dxk = 0; dxk < 3; ++dxk) {
              double acc = 0.0;
              for (int b = 0; b < x.b; ++b)
                for (int z = 0; z < x.d; ++z)
                  for (int yy = 0; yy < x.h; ++yy)
                    for (int xx = 0; xx < x.w; ++xx)
                      acc += double(dy.at(b, o, z, yy, xx)) *
                             sample(x, b, c, z + dz - 1, yy + dyk - 1, xx + dxk - 1);
              dk[kidx(o, x.c, c, dz, dyk, dxk)] += T(acc);
            }

  if (dx) {
    dx->resize(x.b, x.c, x.d, x.h, x.w);
    for (int b = 0; b < x.b; ++b)
      for (int c = 0; c < x.c; ++c)
        for (int z = 0; z < x.d; ++z)
          for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx) {
              double acc = 0.0;
              for (int o = 0; o < out_ch; ++o)
                for (int dz = 0; dz < 3; ++dz)
                  for (int dyk = 0; dyk < 3; ++dyk)
                    for (int dxk = 0; dxk < 3; ++dxk)
                      acc += double(k[kidx(o, x.c, c, dz, dyk, dxk)]) *
                             sample(dy, b, o, z + 1 - dz, yy + 1 - dyk, xx + 1 - dxk);
              dx->at(b, c, z, yy, xx) = T(acc);
            }
  }
}

template <typename T>
void tconv3d_forward(const TensorT<T>& x, const T* k, const T* bias, int out_ch, TensorT<T>& y) {
  y.resize(x.b, out_ch, 2 * x.d, 2 * x.h, 2 * x.w);
  for (int b = 0; b < x.b; ++b)
    for (int o = 0; o < out_ch; ++o)
      for (int z = 0; z < y.d; ++z)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx) {
            double acc = bias ? double(bias[o]) : 0.0;
            for (int c = 0; c < x.c; ++c)
              for (int dz = 0; dz < 3; ++dz)
                for (int dy = 0; dy < 3; ++dy)
                  for (int dx = 0; dx < 3; ++dx)
                    acc += double(k[kidx(o, x.c, c, dz, dy, dx)]) *
                           stuffed(x, b, c, z - 2 + dz, yy - 2 + dy, xx - 2 + dx);
            y.at(b, o, z, yy, xx) = T(acc);
          }
}

template <typename T>
void tconv3d_backward(const TensorT<T>& x, const T* k, int out_ch, const TensorT<T>& dy,
                      TensorT<T>* dx, T* dk, T* db) {
  if (db)
    for (int o = 0; o < out_ch; ++o) {
      double acc = 0.0;
      for (int b = 0; b < dy.b; ++b)
        for (int z = 0; z < dy.d; ++z)
          for (int yy = 0; yy < dy.h; ++yy)
            for (int xx = 0; xx < dy.w; ++xx) acc += double(dy.at(b, o, z, yy, xx));
      db[o] += T(acc);
    }

  if (dk)
    for (int o = 0; o < out_ch; ++o)
      for (int c = 0; c < x.c; ++c)
        for (int dz = 0; dz < 3; ++dz)
          for (int dyk = 0; dyk < 3; ++dyk)
            for (int dxk = 0; dxk < 3; ++dxk) {
              double acc = 0.0;
              for (int b = 0; b < dy.b; ++b)
                for (int z = 0; z < dy.d; ++z)
                  for (int yy = 0; yy < dy.h; ++yy)
                    for (int xx = 0; xx < dy.w; ++xx)
                      acc += double(dy.at(b, o, z, yy, xx)) *
                             stuffed(x, b, c, z - 2 + dz, yy - 2 + dyk, xx - 2 + dxk);
              dk[kidx(o, x.c, c, dz, dyk, dxk)] += T(acc);
            }

  if (dx) {
    dx->resize(x.b, x.c, x.d, x.h, x.w);
    for (int b = 0; b < x.b; ++b)
      for (int c = 0; c < x.c; ++c)
        for (int z = 0; z < x.d; ++z)
          for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx) {
              double acc = 0.0;
              for (int o = 0; o < out_ch; ++o)
                for (int dz = 0; dz < 3; ++dz)
                  for (int dyk = 0; dyk < 3; ++dyk)
                    for (int dxk = 0; dxk < 3; ++dxk)
                      acc += double(k[kidx(o, x.c, c, dz, dyk, dxk)]) *
                             sample(dy, b, o, 2 * z + 2 - dz, 2 * yy + 2 - dyk, 2 * xx + 2 - dxk);
              dx->at(b, c, z, yy, xx) = T(acc);
            }
  }
}

template <typename T>
void maxpool3d_forward(const TensorT<T>& x, TensorT<T>& y, std::vector<std::int32_t>& argmax) {
  y.resize(x.b, x.c, x.d / 2, x.h / 2, x.w / 2);
  argmax.assign(y.size(), 0);
  for (int b = 0; b < x.b; ++b)
    for (int c = 0; c < x.c; ++c)
      for (int oz = 0; oz < y.d; ++oz)
        for (int oy = 0; oy < y.h; ++oy)
          for (int ox = 0; ox < y.w; ++ox) {
            T best = x.at(b, c, 2 * oz, 2 * oy, 2 * ox);
            std::size_t bi = x.idx(b, c, 2 * oz, 2 * oy, 2 * ox);
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  const std::size_t i = x.idx(b, c, 2 * oz + dz, 2 * oy + dy, 2 * ox + dx);
                  if (x.v[i] > best) {
                    best = x.v[i];
                    bi = i;
                  }
                }
            y.at(b, c, oz, oy, ox) = best;
            argmax[y.idx(b, c, oz, oy, ox)] = std::int32_t(bi);
          }
}

template <typename T>
void batchnorm3d_train_forward(TensorT<T>& x, const T* gamma, const T* beta, double eps) {
  const std::size_t per_bc = x.spatial();
  const double n = double(std::size_t(x.b) * per_bc);
  for (int c = 0; c < x.c; ++c) {
    double s = 0.0;
    for (int b = 0; b < x.b; ++b)
      for (std::size_t i = 0; i < per_bc; ++i) s += double(x.v[x.idx(b, c, 0, 0, 0) + i]);
    const double mean = s / n;
    double v = 0.0;
    for (int b = 0; b < x.b; ++b)
      for (std::size_t i = 0; i < per_bc; ++i) {
        const double d = double(x.v[x.idx(b, c, 0, 0, 0) + i]) - mean;
        v += d * d;
      }
    const double inv_std = 1.0 / std::sqrt(v / n + eps);
    for (int b = 0; b < x.b; ++b)
      for (std::size_t i = 0; i < per_bc; ++i) {
        T& e = x.v[x.idx(b, c, 0, 0, 0) + i];
        e = T(double(gamma[c]) * (double(e) - mean) * inv_std + double(beta[c]));
      }
  }
}

#define FISSURA_REF_INSTANTIATE(T)                                                             \
  template void conv3d_forward<T>(const TensorT<T>&, const T*, const T*, int, TensorT<T>&);    \
  template void conv3d_backward<T>(const TensorT<T>&, const T*, int, const TensorT<T>&,        \
                                   TensorT<T>*, T*, T*);                                       \
  template void tconv3d_forward<T>(const TensorT<T>&, const T*, const T*, int, TensorT<T>&);   \
  template void tconv3d_backward<T>(const TensorT<T>&, const T*, int, const TensorT<T>&,       \
                                    TensorT<T>*, T*, T*);                                      \
  template void maxpool3d_forward<T>(const TensorT<T>&, TensorT<T>&,                           \
                                     std::vector<std::int32_t>&);                              \
  template void batchnorm3d_train_forward<T>(TensorT<T>&, const T*, const T*, double);

FISSURA_REF_INSTANTIATE(float)
FISSURA_REF_INSTANTIATE(double)

}  // namespace fissura::ref
