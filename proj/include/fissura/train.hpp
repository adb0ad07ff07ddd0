#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fissura/optimizer.hpp"
#include "fissura/patches.hpp"
#include "fissura/unet.hpp"

namespace fissura {

struct TrainConfig {
  int batch_size = 2;
  int epochs = 20;
  LrSchedule schedule;
  std::uint64_t seed = 0;
};

// epoch is 1-based; loss is the epoch's mean per-voxel training loss.
using EpochCallback = std::function<void(int epoch, float loss, double lr)>;

// In-place training: per epoch the patches are reshuffled with a seed derived
// from cfg.seed, split into batches (the last may be partial), and stepped
// through Adam on voxelwise binary cross entropy.  Returns one mean loss per
// epoch, weighted by batch voxel count.  Results are bit-identical for any
// thread count.
std::vector<float> train_unet(Unet3Df& net, Adam<float>& opt,
                              const std::vector<PatchSample>& patches, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

}  // namespace fissura
