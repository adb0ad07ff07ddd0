#include "fissura/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fissura/error.hpp"

namespace fissura {

namespace {
constexpr const char* kModule = "nn";
}

double cross_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  require(p.size() == q.size(), kModule, "cross entropy needs equal-length distributions");
  require(!p.empty(), kModule, "cross entropy of empty distributions");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double qc = std::clamp(q[i], kProbClamp, 1.0 - kProbClamp);
    s -= p[i] * std::log(qc);
  }
  return s;
}

template <typename T>
double bce_loss(const TensorT<T>& prob, const TensorT<T>& target) {
  require(prob.same_shape(target), kModule, "bce shape mismatch");
  require(prob.size() > 0, kModule, "bce on empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    const double q = std::clamp(double(prob.v[i]), kProbClamp, 1.0 - kProbClamp);
    const double t = double(target.v[i]);
    s -= t * std::log(q) + (1.0 - t) * std::log1p(-q);
  }
  return s / double(prob.v.size());
}

template <typename T>
void bce_grad(const TensorT<T>& prob, const TensorT<T>& target, TensorT<T>& dprob) {
  require(prob.same_shape(target), kModule, "bce shape mismatch");
  dprob.resize(prob.b, prob.c, prob.d, prob.h, prob.w);
  const double n = double(prob.v.size());
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    const double q = double(prob.v[i]);
    if (q < kProbClamp || q > 1.0 - kProbClamp) {
      dprob.v[i] = T(0);
      continue;
    }
    const double t = double(target.v[i]);
    dprob.v[i] = T((-t / q + (1.0 - t) / (1.0 - q)) / n);
  }
}

template double bce_loss<float>(const TensorT<float>&, const TensorT<float>&);
template double bce_loss<double>(const TensorT<double>&, const TensorT<double>&);
template void bce_grad<float>(const TensorT<float>&, const TensorT<float>&, TensorT<float>&);
template void bce_grad<double>(const TensorT<double>&, const TensorT<double>&, TensorT<double>&);

}  // namespace fissura
