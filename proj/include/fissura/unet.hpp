#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fissura/kernels.hpp"

namespace fissura {

inline constexpr double kBnMomentum = 0.1;
inline constexpr double kBnEps = 1e-5;

struct UnetConfig {
  int base_filters = 16;
  int levels = 3;
};

// Closed-form learnable-parameter count for the architecture below; must
// equal count_params() of a freshly built network.
std::int64_t unet_param_audit(int base_filters, int levels);

// One named tensor in checkpoint payload order.  Learnable tensors point
// into theta; batchnorm running stats point into the running vector.
struct TensorRef {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool is_running = false;
};

struct ConvDesc {
  int in_ch = 0, out_ch = 0;
  std::size_t k_off = 0, b_off = 0;  // offsets into theta

  std::size_t kernel_size() const { return std::size_t(out_ch) * in_ch * 27; }
};

struct BnDesc {
  int ch = 0;
  std::size_t g_off = 0, b_off = 0;  // gamma/beta offsets into theta
  std::size_t r_off = 0;             // running mean at r_off, var at r_off+ch
};

// conv (or strided transposed conv) + batchnorm + relu
struct StageDesc {
  ConvDesc conv;
  BnDesc bn;
};

template <typename T>
struct UnetCache {
  struct StageCache {
    BnCache<T> bn;
    TensorT<T> out;  // stage output after relu
  };
  struct EncCache {
    StageCache c1, c2;
    TensorT<T> pooled;
    std::vector<std::int32_t> argmax;
  };
  struct DecCache {
    StageCache up, c1, c2;
    TensorT<T> cat;  // concat(up.out, skip)
  };
  std::vector<EncCache> enc;
  StageCache bot1, bot2;
  std::vector<DecCache> dec;
  TensorT<T> prob;  // network output, after sigmoid
};

// Encoder/decoder segmentation net.  Each encoder level is two conv stages
// followed by 2x max pooling; the bottleneck is two conv stages; each decoder
// level is a strided transposed conv stage, concatenation with the matching
// encoder output, and two conv stages; a final 3x3x3 conv to one channel
// feeds a sigmoid.  Channel widths double per level starting at base_filters.
template <typename T>
struct Unet3D {
  UnetConfig cfg;
  std::vector<T> theta;    // learnable parameters, traversal order
  std::vector<T> running;  // batchnorm running mean/var, traversal order

  struct EncDesc {
    StageDesc c1, c2;
  };
  struct DecDesc {
    StageDesc up, c1, c2;  // up is the transposed conv stage
  };
  std::vector<EncDesc> enc;
  EncDesc bot;
  std::vector<DecDesc> dec;
  ConvDesc fin;

  void build(const UnetConfig& c, std::uint64_t seed);
  std::size_t count_params() const { return theta.size(); }
  std::vector<TensorRef> payload_layout() const;

  // train=true uses batch statistics, updates running stats and fills the
  // gradient caches; the result lands in cache.prob.
  void forward(const TensorT<T>& x, UnetCache<T>& cache, bool train);

  // Parameter gradients for the loss gradient dprob (w.r.t. cache.prob),
  // written into g (resized and zeroed here).
  void backward(const TensorT<T>& x, const UnetCache<T>& cache, const TensorT<T>& dprob,
                std::vector<T>& g);
};

using Unet3Df = Unet3D<float>;
using Unet3Dd = Unet3D<double>;

}  // namespace fissura
