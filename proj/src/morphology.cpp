#include "fissura/morphology.hpp"

#include <algorithm>
#include <cmath>

#include "fissura/parallel.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "volume";

struct SurfVox {
  int x, y, z;
  float r2;  // squared dilation radius
  int ri;    // integer radius bound
};

}  // namespace

Mask dilate_to_width(const Mask& surface, const std::vector<float>& width_field) {
  require(width_field.size() == surface.dims.count(), kModule,
          "width field size does not match dims");
  const Dims3 d = surface.dims;

  std::vector<SurfVox> surf;
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        const std::size_t i = surface.index(x, y, z);
        if (!surface.bits[i]) continue;
        const float w = width_field[i];
        require(w >= 1.0f, kModule, "dilation width must be >= 1");
        const float r = (w - 1.0f) / 2.0f;
        surf.push_back({x, y, z, r * r, int(std::floor(r))});
      }

  Mask out = Mask::zeros(d);
  // Threads own disjoint z slabs; every thread scans all surface voxels and
  // stamps only into its slab, so writes never race and the result is a set
  // union independent of order.
  const int nt = std::min(par::max_threads(), d.z);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int t = 0; t < nt; ++t) {
    const int z0 = int(std::size_t(t) * d.z / nt);
    const int z1 = int(std::size_t(t + 1) * d.z / nt);
    for (const SurfVox& s : surf) {
      if (s.ri == 0) {
        if (s.z >= z0 && s.z < z1) out.bits[out.index(s.x, s.y, s.z)] = 1;
        continue;
      }
      const int za = std::max(s.z - s.ri, z0), zb = std::min(s.z + s.ri, z1 - 1);
      const int ya = std::max(s.y - s.ri, 0), yb = std::min(s.y + s.ri, d.y - 1);
      const int xa = std::max(s.x - s.ri, 0), xb = std::min(s.x + s.ri, d.x - 1);
      for (int z = za; z <= zb; ++z) {
        const float dz2 = float(z - s.z) * float(z - s.z);
        for (int y = ya; y <= yb; ++y) {
          const float dyz2 = dz2 + float(y - s.y) * float(y - s.y);
          if (dyz2 > s.r2) continue;
          std::uint8_t* row = &out.bits[out.index(0, y, z)];
          for (int x = xa; x <= xb; ++x)
            if (dyz2 + float(x - s.x) * float(x - s.x) <= s.r2) row[x] = 1;
        }
      }
    }
  }
  return out;
}

Mask largest_component(const Mask& m, int connectivity) {
  require(connectivity == 6 || connectivity == 26, kModule, "connectivity must be 6 or 26");
  const Dims3 d = m.dims;
  const std::size_t n = d.count();

  // Prior-scan neighbor offsets (strictly lower linear index).
  int offs[13][3];
  int n_offs = 0;
  if (connectivity == 6) {
    int six[3][3] = {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    for (auto& o : six) {
      offs[n_offs][0] = o[0];
      offs[n_offs][1] = o[1];
      offs[n_offs][2] = o[2];
      ++n_offs;
    }
  } else {
    for (int dz = -1; dz <= 0; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
          offs[n_offs][0] = dx;
          offs[n_offs][1] = dy;
          offs[n_offs][2] = dz;
          ++n_offs;
        }
  }

  // Two-pass union-find labeling.  Labels are created in scan order and
  // unions keep the smaller label as root, so a component's root is the
  // label born at its earliest voxel.
  constexpr std::uint32_t kBg = 0xffffffffu;
  std::vector<std::uint32_t> label(n, kBg);
  std::vector<std::uint32_t> parent;
  parent.reserve(1024);

  auto find = [&](std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };

  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        const std::size_t i = m.index(x, y, z);
        if (!m.bits[i]) continue;
        std::uint32_t best = kBg;
        std::uint32_t roots[13];
        int nr = 0;
        for (int k = 0; k < n_offs; ++k) {
          const int nx = x + offs[k][0], ny = y + offs[k][1], nz = z + offs[k][2];
          if (nx < 0 || ny < 0 || nz < 0 || nx >= d.x || ny >= d.y || nz >= d.z) continue;
          const std::uint32_t l = label[m.index(nx, ny, nz)];
          if (l == kBg) continue;
          const std::uint32_t r = find(l);
          roots[nr++] = r;
          if (best == kBg || r < best) best = r;
        }
        if (best == kBg) {
          const std::uint32_t fresh = std::uint32_t(parent.size());
          parent.push_back(fresh);
          label[i] = fresh;
        } else {
          label[i] = best;
          for (int k = 0; k < nr; ++k) parent[roots[k]] = best;
        }
      }

  if (parent.empty()) return Mask::zeros(d);

  std::vector<std::size_t> size(parent.size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    if (label[i] != kBg) ++size[find(label[i])];

  std::uint32_t winner = 0;
  std::size_t best_size = 0;
  for (std::uint32_t r = 0; r < parent.size(); ++r)
    if (parent[r] == r && size[r] > best_size) {
      winner = r;
      best_size = size[r];
    }

  Mask out = Mask::zeros(d);
  for (std::size_t i = 0; i < n; ++i)
    if (label[i] != kBg && find(label[i]) == winner) out.bits[i] = 1;
  return out;
}

}  // namespace fissura
