#pragma once

#include "fissura/synth.hpp"

namespace fissura {

struct PatchSpec {
  int patch_size = 32;
  int overlap_vox = 14;
  double min_crack_fraction = 0.00005;  // the 0.005% rule
  bool filter_enabled = true;

  /// Protocol defaults: overlap 14, filtering only at patch size 32.
  static PatchSpec for_size(int size) {
    return {size, 14, 0.00005, size == 32};
  }
};

struct PatchSample {
  std::vector<float> gray;         // raw gray values, patch_size^3
  std::vector<std::uint8_t> truth; // patch_size^3
  int origin[3] = {0, 0, 0};
  int source_id = 0;
  float norm_max = 255.0f;  // element-kind max of the source volume

  std::size_t crack_count() const {
    std::size_t n = 0;
    for (std::uint8_t b : truth) n += b;
    return n;
  }
};

/// Per-axis tile origins: 0, s, 2s, ... with stride s = patch - overlap,
/// plus a final origin clamped to dim - patch when the last regular tile
/// stops short of the boundary.
std::vector<int> tile_origins(int dim, int patch, int overlap);

std::vector<PatchSample> extract_patches(const LabeledVolume& lv, const PatchSpec& spec,
                                         int source_id = 0);
std::vector<PatchSample> filter_patches(const std::vector<PatchSample>& patches,
                                        const PatchSpec& spec);

}  // namespace fissura
