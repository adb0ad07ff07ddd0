#include "fissura/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fissura/loss.hpp"
#include "fissura/rng.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "nn";
constexpr std::uint64_t kShuffleKey = 0xEF0C;

int cube_side(std::size_t n) {
  const int p = int(std::lround(std::cbrt(double(n))));
  for (int c = std::max(1, p - 1); c <= p + 1; ++c)
    if (std::size_t(c) * c * c == n) return c;
  raise(kModule, "patch is not cubic");
}

}  // namespace

std::vector<float> train_unet(Unet3Df& net, Adam<float>& opt,
                              const std::vector<PatchSample>& patches, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  require(!patches.empty(), kModule, "no training patches");
  require(cfg.batch_size >= 1, kModule, "batch size must be positive");
  require(cfg.epochs >= 1, kModule, "epoch count must be positive");
  require(opt.m.size() == net.theta.size(), kModule, "optimizer state does not match network");
  const int p = cube_side(patches[0].gray.size());
  for (const PatchSample& ps : patches) {
    require(ps.gray.size() == patches[0].gray.size() && ps.truth.size() == ps.gray.size(),
            kModule, "patches must share one size");
    require(ps.norm_max > 0.0f, kModule, "patch normalization constant must be positive");
  }

  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<float> history;
  TensorF x, t, dprob;
  UnetCache<float> cache;
  std::vector<float> grad;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto rng = make_rng(substream_seed(cfg.seed, kShuffleKey, std::uint64_t(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.schedule.lr_at(epoch);

    double loss_sum = 0.0;  // batch loss weighted by batch voxel count
    std::size_t voxels = 0;
    int batch_index = 0;
    for (std::size_t at = 0; at < order.size(); at += std::size_t(cfg.batch_size), ++batch_index) {
      const int bs = int(std::min<std::size_t>(std::size_t(cfg.batch_size), order.size() - at));
      x.resize(bs, 1, p, p, p);
      t.resize(bs, 1, p, p, p);
      for (int bi = 0; bi < bs; ++bi) {
        const PatchSample& ps = patches[order[at + bi]];
        float* xd = &x.v[x.idx(bi, 0, 0, 0, 0)];
        float* td = &t.v[t.idx(bi, 0, 0, 0, 0)];
        const float inv = 1.0f / ps.norm_max;
        for (std::size_t q = 0; q < ps.gray.size(); ++q) {
          xd[q] = ps.gray[q] * inv;
          td[q] = float(ps.truth[q]);
        }
      }
      net.forward(x, cache, true);
      const double batch_loss = bce_loss(cache.prob, t);
      require(std::isfinite(batch_loss), kModule,
              "non-finite loss at epoch " + std::to_string(epoch + 1) + " batch " +
                  std::to_string(batch_index + 1));
      bce_grad(cache.prob, t, dprob);
      net.backward(x, cache, dprob, grad);
      opt.step(net.theta, grad, lr);
      loss_sum += batch_loss * double(cache.prob.size());
      voxels += cache.prob.size();
    }
    const float epoch_loss = float(loss_sum / double(voxels));
    history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss, lr);
  }
  return history;
}

}  // namespace fissura
