#include "fissura/patches.hpp"

namespace fissura {

namespace {
constexpr const char* kModule = "synth";
}

std::vector<int> tile_origins(int dim, int patch, int overlap) {
  require(patch > 0 && overlap >= 0 && overlap < patch, kModule,
          "overlap must be non-negative and smaller than the patch size");
  require(patch <= dim, kModule, "patch size exceeds volume dim");
  const int stride = patch - overlap;
  std::vector<int> origins;
  for (int o = 0; o + patch <= dim; o += stride) origins.push_back(o);
  if (origins.back() + patch < dim) origins.push_back(dim - patch);
  return origins;
}

std::vector<PatchSample> extract_patches(const LabeledVolume& lv, const PatchSpec& spec,
                                         int source_id) {
  require(lv.gray.dims == lv.truth.dims, kModule, "image/truth dims mismatch");
  require(spec.min_crack_fraction >= 0.0 && spec.min_crack_fraction < 1.0, kModule,
          "min_crack_fraction must be in [0,1)");
  const int p = spec.patch_size;
  const Dims3 d = lv.gray.dims;
  const std::vector<int> ox = tile_origins(d.x, p, spec.overlap_vox);
  const std::vector<int> oy = tile_origins(d.y, p, spec.overlap_vox);
  const std::vector<int> oz = tile_origins(d.z, p, spec.overlap_vox);

  std::vector<PatchSample> out;
  out.reserve(ox.size() * oy.size() * oz.size());
  const float norm = float(elem_kind_max(lv.gray.kind));
  for (int z0 : oz)
    for (int y0 : oy)
      for (int x0 : ox) {
        PatchSample s;
        s.origin[0] = x0;
        s.origin[1] = y0;
        s.origin[2] = z0;
        s.source_id = source_id;
        s.norm_max = norm;
        s.gray.resize(std::size_t(p) * p * p);
        s.truth.resize(std::size_t(p) * p * p);
        for (int z = 0; z < p; ++z)
          for (int y = 0; y < p; ++y) {
            const std::size_t src = lv.gray.index(x0, y0 + y, z0 + z);
            const std::size_t dst = (std::size_t(z) * p + y) * p;
            std::copy(&lv.gray.data[src], &lv.gray.data[src] + p, &s.gray[dst]);
            std::copy(&lv.truth.bits[src], &lv.truth.bits[src] + p, &s.truth[dst]);
          }
        out.push_back(std::move(s));
      }
  return out;
}

std::vector<PatchSample> filter_patches(const std::vector<PatchSample>& patches,
                                        const PatchSpec& spec) {
  if (!spec.filter_enabled) return patches;
  const double need = spec.min_crack_fraction * double(spec.patch_size) *
                      double(spec.patch_size) * double(spec.patch_size);
  std::vector<PatchSample> kept;
  kept.reserve(patches.size());
  for (const PatchSample& s : patches)
    if (double(s.crack_count()) >= need) kept.push_back(s);
  return kept;
}

}  // namespace fissura
