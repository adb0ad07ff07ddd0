#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fissura/patches.hpp"
#include "fissura/unet.hpp"
#include "fissura/volume.hpp"

namespace fissura {

// Inference scale presets; each scale must lie in (0, 1].
std::vector<double> base_scales();       // {0.0375, 0.0625, 0.125, 0.1875, 0.25}
std::vector<double> finetuned_scales();  // {0.075, 0.125, 0.25, 0.375, 0.5}

struct PostprocessConfig {
  double threshold = 0.5;  // voxel is crack iff prob >= threshold
  int connectivity = 26;
  int boundary_crop_vox = 0;
};

struct MetricsReport {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, dice = 0.0;
};

// Tiled single-scale inference.  Gray values are normalized by the element
// kind's max, the volume is covered by overlapping tiles (reflect-padded up
// to the tile size when smaller), and per-tile sigmoid outputs are merged by
// voxelwise maximum.  Returns an f32 volume of probabilities.
Volume predict_volume(Unet3Df& net, const Volume& v, const PatchSpec& tile);

// For each scale: downscale (trilinear), predict, upscale the probabilities
// back to the original dims (cubic spline, clamped to [0,1]); merge across
// scales by voxelwise maximum.
Volume multiscale_predict(Unet3Df& net, const Volume& v, const std::vector<double>& scales,
                          const PatchSpec& tile);

Mask binarize(const Volume& prob, const PostprocessConfig& c);

// Zero a boundary shell of boundary_crop_vox voxels, then keep only the
// largest connected component.
Mask postprocess(const Mask& m, const PostprocessConfig& c);

// Voxelwise confusion counts and the derived metrics.  Conventions for empty
// masks: dice(empty, empty) = 1; precision with no predicted positives is 0
// unless the truth is also empty; recall mirrors this for empty truth.
MetricsReport evaluate(const Mask& pred, const Mask& truth);

// Plain-text key=value report.
void save_metrics(const std::string& path, const MetricsReport& r);

}  // namespace fissura
