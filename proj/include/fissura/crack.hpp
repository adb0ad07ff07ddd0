#pragma once

#include "fissura/fbm.hpp"
#include "fissura/volume.hpp"

namespace fissura {

enum class BasePlane : std::uint8_t { xy, xz, yz };

/// Base plane plus a tilt realized as a linear shear of the height field
/// along the plane's first axis (keeps one voxel per column exact).
struct Orientation {
  BasePlane plane = BasePlane::xy;
  double tilt_rad = 0.0;
};

/// Per-crack width: a constant diameter, or a smooth random profile in
/// [min_vox, max_vox] over the base plane (used for fine-tuning data).
struct CrackWidth {
  double constant_vox = 1.0;
  bool varying = false;
  double min_vox = 1.0;
  double max_vox = 13.0;
};

struct CrackSpec {
  int count = 1;  // 1 or 2
  CrackWidth width[2];
  Orientation orient[2];
  bool coplanar = false;  // double cracks: same base plane at split offsets
  std::uint64_t seed = 0;
};

/// Discretize a height field into a 1-voxel-thick surface: per base-plane
/// column (u,v) set the voxel at round(center + height(u,v)) along the
/// plane normal, clamped to the grid.  The field is bilinearly resampled
/// to the base-plane extent, and the orientation's shear is added.
Mask voxelize_surface(const HeightField& f, const Orientation& o, Dims3 dims);

/// Union of `count` fBm crack surfaces, each dilated to its width.
Mask compose_scene(const CrackSpec& spec, Dims3 dims, const FbmParams& fbm);

}  // namespace fissura
