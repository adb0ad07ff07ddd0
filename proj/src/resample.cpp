#include "fissura/resample.hpp"

#include <algorithm>
#include <cmath>

#include "fissura/parallel.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "volume";

// Natural cubic spline second derivatives for a uniformly spaced line
// (Thomas algorithm); m must have room for n values.
void spline_moments(const double* y, int n, double* m, double* scratch) {
  std::fill(m, m + n, 0.0);
  const int k = n - 2;
  if (k < 1) return;
  double* cp = scratch;      // k values
  double* dp = scratch + k;  // k values
  double d0 = 6.0 * (y[2] - 2.0 * y[1] + y[0]);
  cp[0] = 1.0 / 4.0;
  dp[0] = d0 / 4.0;
  for (int i = 1; i < k; ++i) {
    double di = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
    double w = 4.0 - cp[i - 1];
    cp[i] = 1.0 / w;
    dp[i] = (di - dp[i - 1]) / w;
  }
  m[k] = dp[k - 1];
  for (int i = k - 2; i >= 0; --i) m[i + 1] = dp[i] - cp[i] * m[i + 2];
}

// Evaluate the line at position t; with all moments zero this is linear
// interpolation, so one routine serves both methods.
double eval_line(const double* y, const double* m, int n, double t) {
  if (n == 1) return y[0];
  int i = int(std::floor(t));
  i = std::clamp(i, 0, n - 2);
  double u = t - i;
  double a = 1.0 - u;
  return m[i] * a * a * a / 6.0 + m[i + 1] * u * u * u / 6.0 + (y[i] - m[i] / 6.0) * a +
         (y[i + 1] - m[i + 1] / 6.0) * u;
}

std::vector<double> axis_positions(int in_n, int out_n) {
  std::vector<double> pos(out_n);
  if (out_n == 1) {
    pos[0] = (in_n - 1) / 2.0;
  } else {
    double f = double(in_n - 1) / double(out_n - 1);
    for (int i = 0; i < out_n; ++i) pos[i] = i * f;
  }
  return pos;
}

// Resample one axis of src (dims sd) to out_n samples.
std::vector<float> resample_axis(const std::vector<float>& src, Dims3 sd, int axis, int out_n,
                                 bool cubic, Dims3& od) {
  od = sd;
  (axis == 0 ? od.x : axis == 1 ? od.y : od.z) = out_n;
  std::vector<float> dst(od.count());
  const int n = sd[axis];
  if (out_n == n) {  // positions are exactly the knots; splines reproduce them
    std::copy(src.begin(), src.end(), dst.begin());
    return dst;
  }
  const std::vector<double> pos = axis_positions(n, out_n);

  const int ba = axis == 0 ? 1 : 0;
  const int ca = axis == 2 ? 1 : 2;
  const int nb = sd[ba], nc = sd[ca];
  const auto sidx = [&](int i, int ib, int ic) {
    int c[3];
    c[axis] = i;
    c[ba] = ib;
    c[ca] = ic;
    return (std::size_t(c[2]) * sd.y + c[1]) * sd.x + c[0];
  };
  const auto didx = [&](int i, int ib, int ic) {
    int c[3];
    c[axis] = i;
    c[ba] = ib;
    c[ca] = ic;
    return (std::size_t(c[2]) * od.y + c[1]) * od.x + c[0];
  };
  const std::size_t sstep = sidx(1, 0, 0) - sidx(0, 0, 0);
  const std::size_t dstep = didx(1, 0, 0) - didx(0, 0, 0);

#pragma omp parallel num_threads(par::max_threads())
  {
    std::vector<double> line(n), mom(n), scratch(2 * std::max(n - 2, 1));
#pragma omp for schedule(static) collapse(2)
    for (int ic = 0; ic < nc; ++ic)
      for (int ib = 0; ib < nb; ++ib) {
        const float* s = &src[sidx(0, ib, ic)];
        for (int i = 0; i < n; ++i) line[i] = s[i * sstep];
        if (cubic && n >= 3) spline_moments(line.data(), n, mom.data(), scratch.data());
        else std::fill(mom.begin(), mom.end(), 0.0);
        float* d = &dst[didx(0, ib, ic)];
        for (int i = 0; i < out_n; ++i)
          d[i * dstep] = float(eval_line(line.data(), mom.data(), n, pos[i]));
      }
  }
  return dst;
}

Volume resample_impl(const Volume& v, Dims3 target, Interp method) {
  require(v.data.size() == v.dims.count(), kModule, "value count does not match dims");
  if (target == v.dims) return v;

  const bool cubic = method == Interp::cubic_spline;
  float in_min = v.data[0], in_max = v.data[0];
  if (cubic) {
    auto [mn, mx] = std::minmax_element(v.data.begin(), v.data.end());
    in_min = *mn;
    in_max = *mx;
  }

  Dims3 cur = v.dims;
  std::vector<float> data = v.data;
  for (int axis = 0; axis < 3; ++axis) {
    Dims3 next;
    data = resample_axis(data, cur, axis, target[axis], cubic, next);
    cur = next;
  }

  Volume out;
  out.dims = cur;
  out.kind = v.kind;
  out.voxel_size_um = v.voxel_size_um;
  out.data = std::move(data);
  if (cubic)
    for (float& x : out.data) x = std::clamp(x, in_min, in_max);
  if (out.kind != ElemKind::f32) {
    const float top = float(elem_kind_max(out.kind));
    for (float& x : out.data) x = std::clamp(float(std::lround(x)), 0.0f, top);
  }
  return out;
}

}  // namespace

Volume resample(const Volume& v, double scale, Interp method) {
  require(scale > 0.0, kModule, "resample scale must be positive");
  if (scale == 1.0) return v;
  Dims3 target{std::max(1, int(std::lround(scale * v.dims.x))),
               std::max(1, int(std::lround(scale * v.dims.y))),
               std::max(1, int(std::lround(scale * v.dims.z)))};
  return resample_impl(v, target, method);
}

Volume resample_to_dims(const Volume& v, Dims3 target, Interp method) {
  require(target.x > 0 && target.y > 0 && target.z > 0, kModule, "target dims must be positive");
  return resample_impl(v, target, method);
}

}  // namespace fissura
