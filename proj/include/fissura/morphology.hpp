#pragma once

#include "fissura/volume.hpp"

namespace fissura {

/// Dilate a 1-voxel-thick surface so the local diameter around surface
/// voxel s becomes width_field(s): voxel p is set iff some surface voxel s
/// has |p - s| <= (width_field(s) - 1) / 2.  width_field holds one value
/// per grid voxel; only values at surface voxels are read, and each must
/// be >= 1.  Constant width 1 is the identity.
Mask dilate_to_width(const Mask& surface, const std::vector<float>& width_field);

/// Largest connected component under 6- or 26-connectivity.  Ties go to
/// the component whose first voxel comes earliest in x-fastest scan order.
Mask largest_component(const Mask& m, int connectivity = 26);

}  // namespace fissura
