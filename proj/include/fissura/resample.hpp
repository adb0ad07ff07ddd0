#pragma once

#include "fissura/volume.hpp"

namespace fissura {

enum class Interp : std::uint8_t { trilinear, cubic_spline };

/// Separable per-axis resampling with align-corners coordinate mapping.
/// Output dims are max(1, round(scale * dim)) per axis; scale 1 returns
/// the input unchanged.  Cubic splines use natural boundary conditions
/// and the result is clamped to the input's observed value range.
/// Integer element kinds are rounded.
Volume resample(const Volume& v, double scale, Interp method);

/// Same, but with explicit target dims (used to invert a downscale exactly).
Volume resample_to_dims(const Volume& v, Dims3 target, Interp method);

}  // namespace fissura
