#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <vector>

#include "fissura/kernels.hpp"
#include "fissura/parallel.hpp"
#include "ref/reference_kernels.hpp"

namespace {

using namespace fissura;

template <typename F>
double best_ms(F&& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

double max_diff(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

void report(const char* name, double opt, double ref, double diff) {
  std::printf("%-18s %9.2f ms   serial ref %9.2f ms   speedup %6.2fx   max|diff| %.3g\n", name,
              opt, ref, ref / opt, diff);
}

}  // namespace

int main() {
  std::printf("worker threads: %d (set FISSURA_THREADS to change)\n", par::max_threads());

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const int C = 8, O = 8, n = 24, reps = 3;

  TensorF x(2, C, n, n, n);
  for (float& v : x.v) v = u(rng);
  std::vector<float> k(std::size_t(O) * C * 27), bias(O, 0.1f);
  for (float& v : k) v = u(rng);

  TensorF y, yr;
  {
    const double o = best_ms([&] { conv3d_forward(x, k.data(), bias.data(), O, y); }, reps);
    const double r = best_ms([&] { ref::conv3d_forward(x, k.data(), bias.data(), O, yr); }, reps);
    report("conv3d forward", o, r, max_diff(y.v, yr.v));
  }

  TensorF dy(2, O, n, n, n);
  for (float& v : dy.v) v = u(rng);
  TensorF dx, dxr;
  std::vector<float> dk(k.size()), db(O), dkr(k.size()), dbr(O);
  {
    const double o = best_ms(
        [&] {
          std::fill(dk.begin(), dk.end(), 0.f);
          std::fill(db.begin(), db.end(), 0.f);
          conv3d_backward(x, k.data(), O, dy, &dx, dk.data(), db.data());
        },
        reps);
    const double r = best_ms(
        [&] {
          std::fill(dkr.begin(), dkr.end(), 0.f);
          std::fill(dbr.begin(), dbr.end(), 0.f);
          ref::conv3d_backward(x, k.data(), O, dy, &dxr, dkr.data(), dbr.data());
        },
        reps);
    report("conv3d backward", o, r,
           std::max({max_diff(dx.v, dxr.v), max_diff(dk, dkr), max_diff(db, dbr)}));
  }

  {
    const double o = best_ms([&] { tconv3d_forward(x, k.data(), bias.data(), O, y); }, reps);
    const double r = best_ms([&] { ref::tconv3d_forward(x, k.data(), bias.data(), O, yr); }, reps);
    report("tconv3d forward", o, r, max_diff(y.v, yr.v));
  }

  TensorF dy2(2, O, 2 * n, 2 * n, 2 * n);
  for (float& v : dy2.v) v = u(rng);
  {
    const double o = best_ms(
        [&] {
          std::fill(dk.begin(), dk.end(), 0.f);
          std::fill(db.begin(), db.end(), 0.f);
          tconv3d_backward(x, k.data(), O, dy2, &dx, dk.data(), db.data());
        },
        reps);
    const double r = best_ms(
        [&] {
          std::fill(dkr.begin(), dkr.end(), 0.f);
          std::fill(dbr.begin(), dbr.end(), 0.f);
          ref::tconv3d_backward(x, k.data(), O, dy2, &dxr, dkr.data(), dbr.data());
        },
        reps);
    report("tconv3d backward", o, r,
           std::max({max_diff(dx.v, dxr.v), max_diff(dk, dkr), max_diff(db, dbr)}));
  }

  std::vector<std::int32_t> am, amr;
  {
    const double o = best_ms([&] { maxpool3d_forward(x, y, am); }, reps);
    const double r = best_ms([&] { ref::maxpool3d_forward(x, yr, amr); }, reps);
    report("maxpool3d forward", o, r, max_diff(y.v, yr.v));
  }

  std::vector<float> gamma(C, 1.2f), beta(C, -0.1f), rm(C, 0.f), rv(C, 1.f);
  TensorF bx = x, bxr = x;
  BnCache<float> cache;
  {
    const double o = best_ms(
        [&] {
          bx = x;
          batchnorm3d_forward(bx, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5,
                              true, &cache);
        },
        reps);
    const double r = best_ms(
        [&] {
          bxr = x;
          ref::batchnorm3d_train_forward(bxr, gamma.data(), beta.data(), 1e-5);
        },
        reps);
    report("batchnorm3d train", o, r, max_diff(bx.v, bxr.v));
  }

  return 0;
}
