#include "fissura/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fissura/morphology.hpp"
#include "fissura/resample.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "segment";

// Reflected index for padding past the top edge (n-2, n-3, ... mirrored
// about the last sample).
int fold(int j, int n) {
  if (n == 1) return 0;
  const int m = j % (2 * n - 2);
  return m < n ? m : 2 * n - 2 - m;
}

}  // namespace

std::vector<double> base_scales() { return {0.0375, 0.0625, 0.125, 0.1875, 0.25}; }
std::vector<double> finetuned_scales() { return {0.075, 0.125, 0.25, 0.375, 0.5}; }

Volume predict_volume(Unet3Df& net, const Volume& v, const PatchSpec& tile) {
  const int p = tile.patch_size;
  require(p >= 1 && p % (1 << net.cfg.levels) == 0, kModule,
          "tile size must be a positive multiple of 2^levels");
  require(v.dims.count() > 0, kModule, "empty volume");

  const double inv = 1.0 / elem_kind_max(v.kind);
  const Dims3 pd{std::max(v.dims.x, p), std::max(v.dims.y, p), std::max(v.dims.z, p)};

  std::vector<float> gray(std::size_t(pd.count()));
  for (int z = 0; z < pd.z; ++z)
    for (int y = 0; y < pd.y; ++y) {
      const int sz = fold(z, v.dims.z), sy = fold(y, v.dims.y);
      float* row = &gray[(std::size_t(z) * pd.y + y) * pd.x];
      for (int x = 0; x < pd.x; ++x)
        row[x] = float(v.data[v.index(fold(x, v.dims.x), sy, sz)] * inv);
    }
  std::vector<float> prob(gray.size(), 0.0f);

  const std::vector<int> ox = tile_origins(pd.x, p, tile.overlap_vox);
  const std::vector<int> oy = tile_origins(pd.y, p, tile.overlap_vox);
  const std::vector<int> oz = tile_origins(pd.z, p, tile.overlap_vox);

  TensorF xt;
  UnetCache<float> cache;
  for (int z0 : oz)
    for (int y0 : oy)
      for (int x0 : ox) {
        xt.resize(1, 1, p, p, p);
        for (int zz = 0; zz < p; ++zz)
          for (int yy = 0; yy < p; ++yy) {
            const float* src = &gray[(std::size_t(z0 + zz) * pd.y + y0 + yy) * pd.x + x0];
            std::copy(src, src + p, &xt.v[xt.idx(0, 0, zz, yy, 0)]);
          }
        net.forward(xt, cache, false);
        for (int zz = 0; zz < p; ++zz)
          for (int yy = 0; yy < p; ++yy) {
            const float* src = &cache.prob.v[cache.prob.idx(0, 0, zz, yy, 0)];
            float* dst = &prob[(std::size_t(z0 + zz) * pd.y + y0 + yy) * pd.x + x0];
            for (int xx = 0; xx < p; ++xx) dst[xx] = std::max(dst[xx], src[xx]);
          }
      }

  Volume out;
  out.dims = v.dims;
  out.kind = ElemKind::f32;
  out.voxel_size_um = v.voxel_size_um;
  out.data.resize(std::size_t(v.dims.count()));
  for (int z = 0; z < v.dims.z; ++z)
    for (int y = 0; y < v.dims.y; ++y) {
      const float* src = &prob[(std::size_t(z) * pd.y + y) * pd.x];
      std::copy(src, src + v.dims.x, &out.data[out.index(0, y, z)]);
    }
  return out;
}

Volume multiscale_predict(Unet3Df& net, const Volume& v, const std::vector<double>& scales,
                          const PatchSpec& tile) {
  require(!scales.empty(), kModule, "empty scale set");
  for (double s : scales) require(s > 0.0 && s <= 1.0, kModule, "scale must lie in (0, 1]");

  Volume merged;
  merged.dims = v.dims;
  merged.kind = ElemKind::f32;
  merged.voxel_size_um = v.voxel_size_um;
  merged.data.assign(std::size_t(v.dims.count()), 0.0f);

  for (double s : scales) {
    require(std::lround(s * v.dims.x) >= 1 && std::lround(s * v.dims.y) >= 1 &&
                std::lround(s * v.dims.z) >= 1,
            kModule, "scale makes the volume degenerate");
    const Volume vs = s == 1.0 ? v : resample(v, s, Interp::trilinear);
    const Volume pr = predict_volume(net, vs, tile);
    const Volume up =
        pr.dims == v.dims ? pr : resample_to_dims(pr, v.dims, Interp::cubic_spline);
    for (std::size_t i = 0; i < merged.data.size(); ++i)
      merged.data[i] = std::max(merged.data[i], std::clamp(up.data[i], 0.0f, 1.0f));
  }
  return merged;
}

Mask binarize(const Volume& prob, const PostprocessConfig& c) {
  require(c.threshold > 0.0 && c.threshold < 1.0, kModule, "threshold must lie in (0, 1)");
  Mask m = Mask::zeros(prob.dims);
  for (std::size_t i = 0; i < prob.data.size(); ++i)
    m.bits[i] = prob.data[i] >= c.threshold ? 1 : 0;
  return m;
}

Mask postprocess(const Mask& m, const PostprocessConfig& c) {
  const int crop = c.boundary_crop_vox;
  require(crop >= 0, kModule, "boundary crop must be non-negative");
  const int min_dim = std::min({m.dims.x, m.dims.y, m.dims.z});
  require(2 * crop < min_dim, kModule, "boundary crop must be smaller than half the minimum dim");

  Mask work = m;
  if (crop > 0) {
    for (int z = 0; z < m.dims.z; ++z)
      for (int y = 0; y < m.dims.y; ++y)
        for (int x = 0; x < m.dims.x; ++x) {
          const bool inside = x >= crop && x < m.dims.x - crop && y >= crop &&
                              y < m.dims.y - crop && z >= crop && z < m.dims.z - crop;
          if (!inside) work.bits[work.index(x, y, z)] = 0;
        }
  }
  return largest_component(work, c.connectivity);
}

MetricsReport evaluate(const Mask& pred, const Mask& truth) {
  require(pred.dims == truth.dims, kModule, "mask dims mismatch");
  MetricsReport r;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0, t = truth.bits[i] != 0;
    if (p && t)
      ++r.tp;
    else if (p && !t)
      ++r.fp;
    else if (!p && t)
      ++r.fn;
    else
      ++r.tn;
  }
  const std::uint64_t pp = r.tp + r.fp, ap = r.tp + r.fn;
  r.precision = pp > 0 ? double(r.tp) / double(pp) : (ap == 0 ? 1.0 : 0.0);
  r.recall = ap > 0 ? double(r.tp) / double(ap) : (pp == 0 ? 1.0 : 0.0);
  const std::uint64_t den = 2 * r.tp + r.fp + r.fn;
  r.dice = den > 0 ? 2.0 * double(r.tp) / double(den) : 1.0;
  return r;
}

void save_metrics(const std::string& path, const MetricsReport& r) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), kModule, "cannot open for writing: " + path);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "tp = %llu\nfp = %llu\nfn = %llu\ntn = %llu\n"
                "precision = %.17g\nrecall = %.17g\ndice = %.17g\n",
                (unsigned long long)r.tp, (unsigned long long)r.fp, (unsigned long long)r.fn,
                (unsigned long long)r.tn, r.precision, r.recall, r.dice);
  os << buf;
  require(os.good(), kModule, "write failed: " + path);
}

}  // namespace fissura
