#include "fissura/crack.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fissura/morphology.hpp"
#include "fissura/rng.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "crack";

// Sub-stream keys under a scene seed.
constexpr std::uint64_t kKeySurface = 1;
constexpr std::uint64_t kKeyWidth = 2;

void plane_axes(BasePlane p, int& ua, int& va, int& na) {
  switch (p) {
    case BasePlane::xy: ua = 0; va = 1; na = 2; break;
    case BasePlane::xz: ua = 0; va = 2; na = 1; break;
    case BasePlane::yz: ua = 1; va = 2; na = 0; break;
  }
}

double bilinear(const std::vector<double>& g, int gn, double u, double v) {
  u = std::clamp(u, 0.0, double(gn - 1));
  v = std::clamp(v, 0.0, double(gn - 1));
  const int u0 = std::min(int(u), gn - 2 < 0 ? 0 : gn - 2);
  const int v0 = std::min(int(v), gn - 2 < 0 ? 0 : gn - 2);
  const int u1 = std::min(u0 + 1, gn - 1);
  const int v1 = std::min(v0 + 1, gn - 1);
  const double fu = u - u0, fv = v - v0;
  const double a = g[std::size_t(v0) * gn + u0], b = g[std::size_t(v0) * gn + u1];
  const double c = g[std::size_t(v1) * gn + u0], d = g[std::size_t(v1) * gn + u1];
  return (a * (1 - fu) + b * fu) * (1 - fv) + (c * (1 - fu) + d * fu) * fv;
}

}  // namespace

Mask voxelize_surface(const HeightField& f, const Orientation& o, Dims3 dims) {
  require(dims.x > 0 && dims.y > 0 && dims.z > 0, kModule, "dims must be positive");
  require(f.n >= 2 && f.h.size() == std::size_t(f.n) * f.n, kModule, "bad height field");

  int ua = 0, va = 1, na = 2;
  plane_axes(o.plane, ua, va, na);
  const int nu = dims[ua], nv = dims[va], nn = dims[na];
  const double center = nn / 2.0;
  const double shear = std::tan(o.tilt_rad);
  const double su = nu > 1 ? double(f.n - 1) / double(nu - 1) : 0.0;
  const double sv = nv > 1 ? double(f.n - 1) / double(nv - 1) : 0.0;

  Mask out = Mask::zeros(dims);
  int c[3];
  for (int v = 0; v < nv; ++v)
    for (int u = 0; u < nu; ++u) {
      const double height = bilinear(f.h, f.n, u * su, v * sv) + shear * (u - (nu - 1) / 2.0);
      const long k = std::clamp(std::lround(center + height), 0L, long(nn - 1));
      c[ua] = u;
      c[va] = v;
      c[na] = int(k);
      out.at(c[0], c[1], c[2]) = 1;
    }
  return out;
}

Mask compose_scene(const CrackSpec& spec, Dims3 dims, const FbmParams& fbm) {
  require(spec.count == 1 || spec.count == 2, kModule, "crack count must be 1 or 2");
  require(dims.x >= 32 && dims.y >= 32 && dims.z >= 32, kModule, "scene dims must be >= 32");
  for (int i = 0; i < spec.count; ++i) {
    const CrackWidth& w = spec.width[i];
    if (w.varying)
      require(w.min_vox >= 1.0 && w.min_vox <= w.max_vox && w.max_vox <= 13.0, kModule,
              "varying width profile must stay within [1, 13]");
    else
      require(w.constant_vox >= 1.0 && w.constant_vox <= 13.0, kModule,
              "crack width must be in [1, 13]");
  }

  Mask scene = Mask::zeros(dims);
  for (int i = 0; i < spec.count; ++i) {
    Orientation o = spec.orient[i];
    if (spec.count == 2 && i == 1) {
      if (spec.coplanar)
        o.plane = spec.orient[0].plane;
      else if (o.plane == spec.orient[0].plane)
        o.plane = BasePlane((int(o.plane) + 1) % 3);
    }

    int ua = 0, va = 1, na = 2;
    plane_axes(o.plane, ua, va, na);

    FbmParams fp = fbm;
    fp.seed = substream_seed(spec.seed, kKeySurface, std::uint64_t(i));
    HeightField field = gen_fbm_field(fp);
    if (spec.count == 2 && spec.coplanar) {
      const double offset = (i == 0 ? -1.0 : 1.0) * dims[na] / 6.0;
      for (double& h : field.h) h += offset;
    }
    Mask surface = voxelize_surface(field, o, dims);

    std::vector<float> width_field(dims.count(), 1.0f);
    const CrackWidth& w = spec.width[i];
    if (!w.varying) {
      std::fill(width_field.begin(), width_field.end(), float(w.constant_vox));
    } else {
      // Smooth profile: bilinear interpolation of a coarse random grid.
      constexpr int kProfileN = 8;
      std::mt19937_64 rng = make_rng(substream_seed(spec.seed, kKeyWidth, std::uint64_t(i)));
      std::uniform_real_distribution<double> uw(w.min_vox, w.max_vox);
      std::vector<double> coarse(kProfileN * kProfileN);
      for (double& c : coarse) c = uw(rng);
      const int nu = dims[ua], nv = dims[va];
      const double su = nu > 1 ? double(kProfileN - 1) / double(nu - 1) : 0.0;
      const double sv = nv > 1 ? double(kProfileN - 1) / double(nv - 1) : 0.0;
      int c[3];
      for (int v = 0; v < nv; ++v)
        for (int u = 0; u < nu; ++u) {
          c[ua] = u;
          c[va] = v;
          for (int k = 0; k < dims[na]; ++k) {
            c[na] = k;
            width_field[scene.index(c[0], c[1], c[2])] =
                float(bilinear(coarse, kProfileN, u * su, v * sv));
          }
        }
    }

    Mask dilated = dilate_to_width(surface, width_field);
    for (std::size_t j = 0; j < scene.bits.size(); ++j) scene.bits[j] |= dilated.bits[j];
  }
  return scene;
}

}  // namespace fissura
