#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fissura/error.hpp"

namespace fissura {

// Stepwise-halving learning rate: base_lr * 0.5^floor(epoch / halve_every),
// epoch counted from 0.
struct LrSchedule {
  double base_lr = 1e-3;
  int halve_every = 5;

  double lr_at(int epoch) const {
    require(epoch >= 0, "nn", "negative epoch");
    require(halve_every > 0, "nn", "schedule interval must be positive");
    return base_lr * std::pow(0.5, double(epoch / halve_every));
  }
};

// Adam with bias correction.  Per-element arithmetic runs in double and is
// rounded back to T, so float and double parameter vectors share one code
// path and results do not depend on threading.
template <typename T>
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<T> m, v;
  std::uint64_t t = 0;

  void init(std::size_t n) {
    m.assign(n, T(0));
    v.assign(n, T(0));
    t = 0;
  }

  void step(std::vector<T>& theta, const std::vector<T>& grad, double lr) {
    require(theta.size() == m.size() && grad.size() == m.size(), "nn",
            "adam/parameter size mismatch");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, double(t));
    const double bc2 = 1.0 - std::pow(beta2, double(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = double(grad[i]);
      const double mi = beta1 * double(m[i]) + (1.0 - beta1) * g;
      const double vi = beta2 * double(v[i]) + (1.0 - beta2) * g * g;
      m[i] = T(mi);
      v[i] = T(vi);
      const double mh = mi / bc1;
      const double vh = vi / bc2;
      theta[i] = T(double(theta[i]) - lr * mh / (std::sqrt(vh) + eps));
    }
  }
};

}  // namespace fissura
