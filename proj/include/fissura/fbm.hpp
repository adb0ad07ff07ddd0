#pragma once

#include <cstdint>
#include <vector>

namespace fissura {

struct FbmParams {
  int grid_n = 128;
  double hurst = 0.5;
  double amplitude_vox = 8.0;  // target standard deviation of the field, in voxels
  std::uint64_t seed = 0;
};

/// Square height field over the base plane, heights in voxels.
struct HeightField {
  int n = 0;
  std::vector<double> h;  // n*n, row-major: h[v*n + u]

  double at(int u, int v) const { return h[std::size_t(v) * n + u]; }
  double& at(int u, int v) { return h[std::size_t(v) * n + u]; }
};

/// Sample a 2D fractional Brownian field with Hurst exponent p.hurst via
/// circulant embedding of Stein's locally stationary covariance, pinned to
/// 0 at the origin grid node and rescaled so the empirical standard
/// deviation of the field equals p.amplitude_vox.
HeightField gen_fbm_field(const FbmParams& p);

}  // namespace fissura
