#pragma once

#include <string>
#include <vector>

#include "fissura/optimizer.hpp"
#include "fissura/unet.hpp"

namespace fissura {

struct TrainState {
  int epoch = 0;  // completed epochs; history holds one loss per epoch
  bool has_adam = false;
  Adam<float> opt;
  std::vector<float> history;
};

// Single-file checkpoint: a small text header (magic, base_filters, levels,
// epoch, has_adam, end) followed by all tensors as little-endian f32 in
// traversal order with batchnorm running stats inline, then optionally the
// Adam state (all first moments, all second moments, step count as u64) and
// the loss history.
void save_checkpoint(const std::string& path, const Unet3Df& net, const TrainState& st);

// Loads into an existing network; the header must match net.cfg.
TrainState load_checkpoint_into(const std::string& path, Unet3Df& net);

struct LoadedCheckpoint {
  Unet3Df net;
  TrainState state;
};

// Builds the network described by the header, then loads into it.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace fissura
