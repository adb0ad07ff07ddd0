#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fissura/error.hpp"
#include "fissura/kernels.hpp"
#include "fissura/loss.hpp"
#include "fissura/optimizer.hpp"
#include "fissura/parallel.hpp"
#include "ref/reference_kernels.hpp"

using namespace fissura;

namespace {

std::mt19937_64 g_rng(12345);

template <typename T>
void randomize(std::vector<T>& v, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (T& x : v) x = T(u(g_rng));
}

template <typename T>
void randomize(TensorT<T>& t, double lo = -1.0, double hi = 1.0) {
  randomize(t.v, lo, hi);
}

template <typename T>
double dot(const std::vector<T>& a, const std::vector<T>& b) {
  REQUIRE(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

double rel_err(double analytic, double numeric) {
  const double scale = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

// Central finite difference of a scalar function at x[i].
template <typename F>
double central_diff(std::vector<double>& x, std::size_t i, F&& loss, double h = 1e-5) {
  const double keep = x[i];
  x[i] = keep + h;
  const double up = loss();
  x[i] = keep - h;
  const double dn = loss();
  x[i] = keep;
  return (up - dn) / (2.0 * h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Hand oracles
// ---------------------------------------------------------------------------

TEST_CASE("conv with an all-ones kernel counts in-bounds neighbors") {
  TensorD x(1, 1, 4, 4, 4);
  for (double& v : x.v) v = 1.0;
  std::vector<double> k(27, 1.0), b(1, 0.0);
  TensorD y;
  conv3d_forward(x, k.data(), b.data(), 1, y);
  REQUIRE(y.same_shape(x));
  CHECK(y.at(0, 0, 1, 1, 1) == doctest::Approx(27.0));  // interior
  CHECK(y.at(0, 0, 0, 0, 0) == doctest::Approx(8.0));   // corner
  CHECK(y.at(0, 0, 0, 1, 1) == doctest::Approx(18.0));  // face
  CHECK(y.at(0, 0, 0, 0, 1) == doctest::Approx(12.0));  // edge
}

TEST_CASE("conv with a centered delta kernel is the identity plus bias") {
  TensorD x(2, 1, 3, 4, 5);
  randomize(x);
  std::vector<double> k(27, 0.0), b(1, 0.25);
  k[13] = 1.0;  // dz=dy=dx=1
  TensorD y;
  conv3d_forward(x, k.data(), b.data(), 1, y);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    CHECK(y.v[i] == doctest::Approx(x.v[i] + 0.25).epsilon(1e-12));
}

TEST_CASE("conv sums over input channels") {
  TensorD x(1, 2, 3, 3, 3);
  randomize(x);
  std::vector<double> k(2 * 27, 0.0), b(1, 0.0);
  k[13] = 1.0;       // channel 0 center
  k[27 + 13] = 2.0;  // channel 1 center
  TensorD y;
  conv3d_forward(x, k.data(), b.data(), 1, y);
  for (int z = 0; z < 3; ++z)
    for (int yy = 0; yy < 3; ++yy)
      for (int xx = 0; xx < 3; ++xx)
        CHECK(y.at(0, 0, z, yy, xx) ==
              doctest::Approx(x.at(0, 0, z, yy, xx) + 2.0 * x.at(0, 1, z, yy, xx)));
}

TEST_CASE("transposed conv of a single voxel spreads mirrored kernel taps") {
  TensorD x(1, 1, 1, 1, 1);
  x.v[0] = 2.0;
  std::vector<double> k(27);
  randomize(k);
  std::vector<double> b(1, 0.0);
  TensorD y;
  tconv3d_forward(x, k.data(), b.data(), 1, y);
  REQUIRE(y.d == 2);
  REQUIRE(y.h == 2);
  REQUIRE(y.w == 2);
  for (int z = 0; z < 2; ++z)
    for (int yy = 0; yy < 2; ++yy)
      for (int xx = 0; xx < 2; ++xx) {
        const double want = 2.0 * k[std::size_t(((2 - z) * 3 + (2 - yy)) * 3 + (2 - xx))];
        CHECK(y.at(0, 0, z, yy, xx) == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("transposed conv doubles each spatial dim") {
  TensorD x(2, 3, 4, 5, 6);
  randomize(x);
  std::vector<double> k(std::size_t(2) * 3 * 27), b(2, 0.0);
  randomize(k);
  TensorD y;
  tconv3d_forward(x, k.data(), b.data(), 2, y);
  CHECK(y.b == 2);
  CHECK(y.c == 2);
  CHECK(y.d == 8);
  CHECK(y.h == 10);
  CHECK(y.w == 12);
}

TEST_CASE("maxpool picks the block maximum and routes gradients to it") {
  TensorF x(1, 1, 2, 2, 2);
  x.v = {1.f, 7.f, 3.f, 4.f, 5.f, 6.f, 2.f, 0.f};
  TensorF y;
  std::vector<std::int32_t> am;
  maxpool3d_forward(x, y, am);
  REQUIRE(y.size() == 1);
  CHECK(y.v[0] == 7.0f);
  CHECK(am[0] == 1);

  TensorF dy(1, 1, 1, 1, 1);
  dy.v[0] = 3.5f;
  TensorF dx;
  dx.resize(1, 1, 2, 2, 2);
  maxpool3d_backward(am, dy, dx);
  for (std::size_t i = 0; i < 8; ++i) CHECK(dx.v[i] == (i == 1 ? 3.5f : 0.0f));
}

TEST_CASE("maxpool ties go to the first voxel in x-fastest order") {
  TensorF x(1, 1, 2, 2, 2);
  for (float& v : x.v) v = 4.0f;
  TensorF y;
  std::vector<std::int32_t> am;
  maxpool3d_forward(x, y, am);
  CHECK(y.v[0] == 4.0f);
  CHECK(am[0] == 0);

  TensorF odd(1, 1, 3, 2, 2);
  TensorF yo;
  CHECK_THROWS_WITH_AS(maxpool3d_forward(odd, yo, am), doctest::Contains("even"), Error);
}

TEST_CASE("maxpool handles multiple blocks and channels") {
  TensorF x(1, 2, 2, 2, 4);
  randomize(x);
  TensorF y;
  std::vector<std::int32_t> am;
  maxpool3d_forward(x, y, am);
  REQUIRE(y.d == 1);
  REQUIRE(y.h == 1);
  REQUIRE(y.w == 2);
  for (int c = 0; c < 2; ++c)
    for (int ox = 0; ox < 2; ++ox) {
      float want = -1e30f;
      for (int z = 0; z < 2; ++z)
        for (int yy = 0; yy < 2; ++yy)
          for (int xx = 0; xx < 2; ++xx) want = std::max(want, x.at(0, c, z, yy, 2 * ox + xx));
      CHECK(y.at(0, c, 0, 0, ox) == want);
      CHECK(x.v[std::size_t(am[y.idx(0, c, 0, 0, ox)])] == want);
    }
}

TEST_CASE("batchnorm standardizes with the batch statistics") {
  // One channel, two values {1, 5}: mean 3, biased variance 4.
  TensorF x(2, 1, 1, 1, 1);
  x.v = {1.0f, 5.0f};
  std::vector<float> gamma{3.0f}, beta{1.0f}, rm{0.0f}, rv{1.0f};
  BnCache<float> cache;
  batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5, true,
                      &cache);
  CHECK(x.v[0] == doctest::Approx(-2.0).epsilon(1e-4));  // 3*(-1)+1
  CHECK(x.v[1] == doctest::Approx(4.0).epsilon(1e-4));
  // Running stats: (1-m)*old + m*batch.
  CHECK(rm[0] == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(rv[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 4.0).epsilon(1e-6));
}

TEST_CASE("batchnorm normalizes every channel to zero mean unit variance") {
  TensorF x(2, 3, 4, 4, 4);
  randomize(x, -5.0, 5.0);
  std::vector<float> gamma(3, 1.0f), beta(3, 0.0f), rm(3, 0.0f), rv(3, 1.0f);
  BnCache<float> cache;
  batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5, true,
                      &cache);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (int b = 0; b < 2; ++b)
      for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
          for (int xx = 0; xx < 4; ++xx) {
            const double v = x.at(b, c, z, y, xx);
            s += v;
            ss += v * v;
            ++n;
          }
    const double mean = s / double(n);
    const double var = ss / double(n) - mean * mean;
    CHECK(std::abs(mean) < 1e-4);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm inference path uses the running statistics") {
  TensorF x(1, 1, 1, 1, 2);
  x.v = {2.0f, 6.0f};
  std::vector<float> gamma{2.0f}, beta{-1.0f}, rm{4.0f}, rv{16.0f};
  batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 0.0, false,
                      static_cast<BnCache<float>*>(nullptr));
  CHECK(x.v[0] == doctest::Approx(2.0 * (2.0 - 4.0) / 4.0 - 1.0).epsilon(1e-6));  // -2
  CHECK(x.v[1] == doctest::Approx(0.0).epsilon(1e-6));
  // Inference must not touch the running stats.
  CHECK(rm[0] == 4.0f);
  CHECK(rv[0] == 16.0f);
}

TEST_CASE("batchnorm training requires a cache and 2+ samples per channel") {
  TensorF x(1, 1, 1, 1, 1);
  std::vector<float> gamma{1.0f}, beta{0.0f}, rm{0.0f}, rv{1.0f};
  BnCache<float> cache;
  CHECK_THROWS_AS(batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1,
                                      1e-5, true, &cache),
                  Error);
  TensorF x2(2, 1, 1, 1, 1);
  CHECK_THROWS_AS(batchnorm3d_forward(x2, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1,
                                      1e-5, true, static_cast<BnCache<float>*>(nullptr)),
                  Error);
}

TEST_CASE("relu and sigmoid match closed forms") {
  TensorD x(1, 1, 1, 1, 5);
  x.v = {-2.0, -0.0, 0.5, 3.0, -1e-9};
  TensorD r = x;
  relu_forward(r);
  CHECK(r.v == std::vector<double>{0.0, 0.0, 0.5, 3.0, 0.0});

  TensorD d(1, 1, 1, 1, 5);
  for (double& v : d.v) v = 1.0;
  relu_backward(r, d);
  CHECK(d.v == std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0});

  TensorD s(1, 1, 1, 1, 3);
  s.v = {0.0, std::log(3.0), -std::log(3.0)};
  sigmoid_forward(s);
  CHECK(s.v[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.v[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.v[2] == doctest::Approx(0.25).epsilon(1e-12));

  TensorD ds(1, 1, 1, 1, 3);
  ds.v = {1.0, 1.0, 1.0};
  sigmoid_backward(s, ds);
  CHECK(ds.v[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ds.v[1] == doctest::Approx(0.75 * 0.25).epsilon(1e-12));
}

TEST_CASE("channel concat and split are inverse permutations") {
  TensorD a(2, 2, 3, 3, 3), b(2, 1, 3, 3, 3);
  randomize(a);
  randomize(b);
  TensorD y;
  concat_channels(a, b, y);
  REQUIRE(y.c == 3);
  CHECK(y.at(1, 0, 2, 1, 0) == a.at(1, 0, 2, 1, 0));
  CHECK(y.at(1, 2, 2, 1, 0) == b.at(1, 0, 2, 1, 0));

  TensorD da, db;
  da.resize(2, 2, 3, 3, 3);
  db.resize(2, 1, 3, 3, 3);
  split_channels(y, da, db);
  CHECK(da.v == a.v);
  CHECK(db.v == b.v);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

TEST_CASE("cross entropy reproduces ln 2 and the clamp case") {
  CHECK(cross_entropy({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // q = 0 is clamped to 1e-7.
  CHECK(cross_entropy({1.0, 0.0}, {0.0, 1.0}) ==
        doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  CHECK_THROWS_AS(cross_entropy({0.5}, {0.25, 0.75}), Error);
  CHECK_THROWS_AS(cross_entropy({}, {}), Error);
}

TEST_CASE("cross entropy satisfies Gibbs' inequality") {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + g_rng() % 8;
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(g_rng);
      q[i] = u(g_rng);
      sp += p[i];
      sq += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    CHECK(cross_entropy(p, q) >= cross_entropy(p, p) - 1e-12);
  }
}

TEST_CASE("binary cross entropy values and gradient") {
  TensorF prob(1, 1, 1, 1, 2), target(1, 1, 1, 1, 2);
  prob.v = {0.5f, 0.5f};
  target.v = {1.0f, 0.0f};
  CHECK(bce_loss(prob, target) == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  prob.v = {1.0f, 0.0f};  // perfectly right, hits both clamps
  CHECK(bce_loss(prob, target) == doctest::Approx(0.0).epsilon(1e-5));

  prob.v = {0.25f, 0.75f};
  TensorF g;
  bce_grad(prob, target, g);
  REQUIRE(g.size() == 2);
  // d/dq of -(t log q + (1-t) log(1-q)) / N with N = 2.
  CHECK(g.v[0] == doctest::Approx((-1.0 / 0.25) / 2.0).epsilon(1e-5));
  CHECK(g.v[1] == doctest::Approx((1.0 / 0.25) / 2.0).epsilon(1e-5));

  prob.v = {1.0f, 0.0f};  // clamped region carries zero gradient
  bce_grad(prob, target, g);
  CHECK(g.v[0] == 0.0f);
  CHECK(g.v[1] == 0.0f);

  TensorF bad(1, 1, 1, 1, 3);
  CHECK_THROWS_AS(bce_loss(prob, bad), Error);
}

TEST_CASE("bce matches an independent double evaluation on random data") {
  TensorD prob(2, 1, 3, 3, 3), target(2, 1, 3, 3, 3);
  randomize(prob, 0.02, 0.98);
  for (double& t : target.v) t = g_rng() % 2 ? 1.0 : 0.0;
  double want = 0.0;
  for (std::size_t i = 0; i < prob.v.size(); ++i) {
    const double q = prob.v[i], t = target.v[i];
    want += -(t * std::log(q) + (1.0 - t) * std::log(1.0 - q));
  }
  want /= double(prob.v.size());
  CHECK(bce_loss(prob, target) == doctest::Approx(want).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Optimizer and schedule
// ---------------------------------------------------------------------------

TEST_CASE("the learning rate halves every 5 epochs") {
  LrSchedule s;
  CHECK(s.base_lr == 0.001);
  CHECK(s.halve_every == 5);
  for (int e = 0; e < 5; ++e) CHECK(s.lr_at(e) == 0.001);
  for (int e = 5; e < 10; ++e) CHECK(s.lr_at(e) == 0.0005);
  for (int e = 10; e < 15; ++e) CHECK(s.lr_at(e) == 0.00025);
  for (int e = 15; e < 20; ++e) CHECK(s.lr_at(e) == 0.000125);
  CHECK_THROWS_AS(s.lr_at(-1), Error);
}

TEST_CASE("adam's first step has magnitude ~lr and it minimizes a parabola") {
  Adam<double> opt;
  opt.init(2);
  std::vector<double> theta{10.0, -4.0};
  std::vector<double> grad{0.8, -0.3};
  opt.step(theta, grad, 0.01);
  CHECK(theta[0] == doctest::Approx(10.0 - 0.01).epsilon(1e-6));
  CHECK(theta[1] == doctest::Approx(-4.0 + 0.01).epsilon(1e-6));
  CHECK(opt.t == 1);

  // Minimize (x-3)^2.
  Adam<double> o2;
  o2.init(1);
  std::vector<double> x{-5.0};
  for (int it = 0; it < 3000; ++it) {
    std::vector<double> g{2.0 * (x[0] - 3.0)};
    o2.step(x, g, 0.05);
  }
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-3));

  Adam<double> bad;
  bad.init(3);
  CHECK_THROWS_AS(bad.step(x, x, 0.1), Error);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks (real-64)
// ---------------------------------------------------------------------------

TEST_CASE("conv3d gradients match finite differences") {
  for (int trial = 0; trial < 6; ++trial) {
    const int B = 1 + int(g_rng() % 2), C = 1 + int(g_rng() % 3), O = 1 + int(g_rng() % 3);
    const int n = 3 + int(g_rng() % 3);
    TensorD x(B, C, n, n, n), w(B, O, n, n, n);
    randomize(x);
    randomize(w);
    std::vector<double> k(std::size_t(O) * C * 27), bias(std::size_t(O), 0.0);
    randomize(k);
    randomize(bias);

    auto loss = [&] {
      TensorD y;
      conv3d_forward(x, k.data(), bias.data(), O, y);
      return dot(y.v, w.v);
    };

    TensorD dx;
    std::vector<double> dk(k.size(), 0.0), db(bias.size(), 0.0);
    conv3d_backward(x, k.data(), O, w, &dx, dk.data(), db.data());

    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t ix = g_rng() % x.v.size();
      CHECK(rel_err(dx.v[ix], central_diff(x.v, ix, loss)) < 1e-4);
      const std::size_t ik = g_rng() % k.size();
      CHECK(rel_err(dk[ik], central_diff(k, ik, loss)) < 1e-4);
      const std::size_t ib = g_rng() % bias.size();
      CHECK(rel_err(db[ib], central_diff(bias, ib, loss)) < 1e-4);
    }
  }
}

TEST_CASE("tconv3d gradients match finite differences") {
  for (int trial = 0; trial < 6; ++trial) {
    const int B = 1 + int(g_rng() % 2), C = 1 + int(g_rng() % 3), O = 1 + int(g_rng() % 3);
    const int n = 2 + int(g_rng() % 3);
    TensorD x(B, C, n, n, n), w(B, O, 2 * n, 2 * n, 2 * n);
    randomize(x);
    randomize(w);
    std::vector<double> k(std::size_t(O) * C * 27), bias(std::size_t(O), 0.0);
    randomize(k);
    randomize(bias);

    auto loss = [&] {
      TensorD y;
      tconv3d_forward(x, k.data(), bias.data(), O, y);
      return dot(y.v, w.v);
    };

    TensorD dx;
    std::vector<double> dk(k.size(), 0.0), db(bias.size(), 0.0);
    tconv3d_backward(x, k.data(), O, w, &dx, dk.data(), db.data());

    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t ix = g_rng() % x.v.size();
      CHECK(rel_err(dx.v[ix], central_diff(x.v, ix, loss)) < 1e-4);
      const std::size_t ik = g_rng() % k.size();
      CHECK(rel_err(dk[ik], central_diff(k, ik, loss)) < 1e-4);
      const std::size_t ib = g_rng() % bias.size();
      CHECK(rel_err(db[ib], central_diff(bias, ib, loss)) < 1e-4);
    }
  }
}

TEST_CASE("maxpool gradients match finite differences") {
  for (int trial = 0; trial < 5; ++trial) {
    const int B = 1 + int(g_rng() % 2), C = 1 + int(g_rng() % 2);
    TensorD x(B, C, 4, 4, 4), w(B, C, 2, 2, 2);
    randomize(x);
    randomize(w);

    auto loss = [&] {
      TensorD y;
      std::vector<std::int32_t> am;
      maxpool3d_forward(x, y, am);
      return dot(y.v, w.v);
    };

    TensorD y;
    std::vector<std::int32_t> am;
    maxpool3d_forward(x, y, am);
    TensorD dx;
    dx.resize(B, C, 4, 4, 4);
    maxpool3d_backward(am, w, dx);

    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t ix = g_rng() % x.v.size();
      CHECK(rel_err(dx.v[ix], central_diff(x.v, ix, loss)) < 1e-4);
    }
  }
}

TEST_CASE("batchnorm gradients match finite differences") {
  for (int trial = 0; trial < 5; ++trial) {
    const int B = 2, C = 1 + int(g_rng() % 3), n = 3;
    TensorD x0(B, C, n, n, n), w(B, C, n, n, n);
    randomize(x0, -2.0, 2.0);
    randomize(w);
    std::vector<double> gamma(std::size_t(C), 0.0), beta(std::size_t(C), 0.0);
    randomize(gamma, 0.5, 1.5);
    randomize(beta, -0.5, 0.5);

    auto loss = [&] {
      TensorD x = x0;
      std::vector<double> rm(std::size_t(C), 0.0), rv(std::size_t(C), 1.0);
      BnCache<double> cache;
      batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5, true,
                          &cache);
      return dot(x.v, w.v);
    };

    TensorD x = x0;
    std::vector<double> rm(std::size_t(C), 0.0), rv(std::size_t(C), 1.0);
    BnCache<double> cache;
    batchnorm3d_forward(x, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5, true,
                        &cache);
    TensorD dx;
    std::vector<double> dg(std::size_t(C), 0.0), db(std::size_t(C), 0.0);
    batchnorm3d_backward(cache, gamma.data(), w, dx, dg.data(), db.data());

    for (int probe = 0; probe < 8; ++probe) {
      const std::size_t ix = g_rng() % x0.v.size();
      CHECK(rel_err(dx.v[ix], central_diff(x0.v, ix, loss)) < 1e-4);
    }
    for (std::size_t c = 0; c < std::size_t(C); ++c) {
      CHECK(rel_err(dg[c], central_diff(gamma, c, loss)) < 1e-4);
      CHECK(rel_err(db[c], central_diff(beta, c, loss)) < 1e-4);
    }
  }
}

TEST_CASE("relu, sigmoid and bce gradients match finite differences") {
  for (int trial = 0; trial < 5; ++trial) {
    TensorD x0(1, 2, 3, 3, 3), target(1, 2, 3, 3, 3);
    randomize(x0, -2.0, 2.0);
    for (double& t : target.v) t = g_rng() % 2 ? 1.0 : 0.0;

    auto loss = [&] {
      TensorD a = x0;
      relu_forward(a);
      TensorD s = a;
      sigmoid_forward(s);
      return bce_loss(s, target);
    };

    TensorD a = x0;
    relu_forward(a);
    TensorD s = a;
    sigmoid_forward(s);
    TensorD d;
    bce_grad(s, target, d);
    sigmoid_backward(s, d);
    relu_backward(a, d);

    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t ix = g_rng() % x0.v.size();
      if (std::abs(x0.v[ix]) < 1e-3) continue;  // kink of relu
      CHECK(rel_err(d.v[ix], central_diff(x0.v, ix, loss)) < 1e-4);
    }
  }
}

// ---------------------------------------------------------------------------
// Optimized kernels against the serial reference
// ---------------------------------------------------------------------------

TEST_CASE("optimized kernels agree with the serial reference at odd sizes") {
  for (int trial = 0; trial < 3; ++trial) {
    const int B = 2, C = 3, O = 2, n = 5 + 2 * trial;  // 5, 7, 9
    TensorF x(B, C, n, n + 2, n);
    randomize(x);
    std::vector<float> k(std::size_t(O) * C * 27), bias(std::size_t(O), 0.0f);
    randomize(k);
    randomize(bias);

    TensorF y, yr;
    conv3d_forward(x, k.data(), bias.data(), O, y);
    ref::conv3d_forward(x, k.data(), bias.data(), O, yr);
    REQUIRE(y.same_shape(yr));
    for (std::size_t i = 0; i < y.v.size(); ++i)
      CHECK(std::abs(y.v[i] - yr.v[i]) < 1e-4f);

    TensorF dy(B, O, n, n + 2, n);
    randomize(dy);
    TensorF dx, dxr;
    std::vector<float> dk(k.size(), 0.f), db(std::size_t(O), 0.f);
    std::vector<float> dkr(k.size(), 0.f), dbr(std::size_t(O), 0.f);
    conv3d_backward(x, k.data(), O, dy, &dx, dk.data(), db.data());
    ref::conv3d_backward(x, k.data(), O, dy, &dxr, dkr.data(), dbr.data());
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      CHECK(std::abs(dx.v[i] - dxr.v[i]) < 1e-4f);
    for (std::size_t i = 0; i < dk.size(); ++i) CHECK(std::abs(dk[i] - dkr[i]) < 2e-3f);
    for (std::size_t i = 0; i < db.size(); ++i) CHECK(std::abs(db[i] - dbr[i]) < 2e-3f);

    TensorF ty, tyr;
    tconv3d_forward(x, k.data(), bias.data(), O, ty);
    ref::tconv3d_forward(x, k.data(), bias.data(), O, tyr);
    REQUIRE(ty.same_shape(tyr));
    for (std::size_t i = 0; i < ty.v.size(); ++i)
      CHECK(std::abs(ty.v[i] - tyr.v[i]) < 1e-4f);

    TensorF tdy(B, O, 2 * n, 2 * (n + 2), 2 * n);
    randomize(tdy);
    std::fill(dk.begin(), dk.end(), 0.f);
    std::fill(db.begin(), db.end(), 0.f);
    std::fill(dkr.begin(), dkr.end(), 0.f);
    std::fill(dbr.begin(), dbr.end(), 0.f);
    tconv3d_backward(x, k.data(), O, tdy, &dx, dk.data(), db.data());
    ref::tconv3d_backward(x, k.data(), O, tdy, &dxr, dkr.data(), dbr.data());
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      CHECK(std::abs(dx.v[i] - dxr.v[i]) < 1e-4f);
    for (std::size_t i = 0; i < dk.size(); ++i) CHECK(std::abs(dk[i] - dkr[i]) < 5e-3f);
  }
}

TEST_CASE("optimized batchnorm agrees with the serial reference") {
  TensorF x(2, 4, 5, 5, 5);
  randomize(x, -3.0, 3.0);
  std::vector<float> gamma(4), beta(4), rm(4, 0.f), rv(4, 1.f);
  randomize(gamma, 0.5, 1.5);
  randomize(beta, -0.5, 0.5);
  TensorF a = x, b = x;
  BnCache<float> cache;
  batchnorm3d_forward(a, gamma.data(), beta.data(), rm.data(), rv.data(), 0.1, 1e-5, true,
                      &cache);
  ref::batchnorm3d_train_forward(b, gamma.data(), beta.data(), 1e-5);
  for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(std::abs(a.v[i] - b.v[i]) < 1e-5f);
}

TEST_CASE("maxpool agrees with the serial reference bit for bit") {
  TensorF x(2, 3, 6, 8, 6);
  randomize(x);
  TensorF y, yr;
  std::vector<std::int32_t> am, amr;
  maxpool3d_forward(x, y, am);
  ref::maxpool3d_forward(x, yr, amr);
  CHECK(y.v == yr.v);
  CHECK(am == amr);
}

// ---------------------------------------------------------------------------
// Adjointness: <A x, w> == <x, A^T w> for the linear part of conv and tconv
// ---------------------------------------------------------------------------

TEST_CASE("conv and tconv backward are adjoint to their forward maps") {
  for (int trial = 0; trial < 8; ++trial) {
    const int B = 1 + int(g_rng() % 2), C = 1 + int(g_rng() % 3), O = 1 + int(g_rng() % 3);
    const int n = 3 + int(g_rng() % 4);
    TensorD x(B, C, n, n, n);
    randomize(x);
    std::vector<double> k(std::size_t(O) * C * 27), zero_bias(std::size_t(O), 0.0);
    randomize(k);

    TensorD w(B, O, n, n, n);
    randomize(w);
    TensorD y, dx;
    conv3d_forward(x, k.data(), zero_bias.data(), O, y);
    std::vector<double> dk(k.size(), 0.0), db(std::size_t(O), 0.0);
    conv3d_backward(x, k.data(), O, w, &dx, dk.data(), db.data());
    const double lhs = dot(y.v, w.v);
    const double rhs = dot(x.v, dx.v);
    CHECK(rel_err(lhs, rhs) < 1e-10);

    TensorD wt(B, O, 2 * n, 2 * n, 2 * n);
    randomize(wt);
    TensorD yt, dxt;
    tconv3d_forward(x, k.data(), zero_bias.data(), O, yt);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    tconv3d_backward(x, k.data(), O, wt, &dxt, dk.data(), db.data());
    CHECK(rel_err(dot(yt.v, wt.v), dot(x.v, dxt.v)) < 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Thread-count invariance
// ---------------------------------------------------------------------------

TEST_CASE("kernel results are bit-identical across thread counts") {
  TensorF x(2, 3, 8, 8, 8);
  randomize(x);
  std::vector<float> k(std::size_t(4) * 3 * 27), bias(4);
  randomize(k);
  randomize(bias);

  par::set_max_threads(1);
  TensorF y1;
  conv3d_forward(x, k.data(), bias.data(), 4, y1);
  TensorF dy(2, 4, 8, 8, 8);
  randomize(dy);
  TensorF dx1;
  std::vector<float> dk1(k.size(), 0.f), db1(4, 0.f);
  conv3d_backward(x, k.data(), 4, dy, &dx1, dk1.data(), db1.data());

  par::set_max_threads(3);
  TensorF y3;
  conv3d_forward(x, k.data(), bias.data(), 4, y3);
  TensorF dx3;
  std::vector<float> dk3(k.size(), 0.f), db3(4, 0.f);
  conv3d_backward(x, k.data(), 4, dy, &dx3, dk3.data(), db3.data());
  par::set_max_threads(1);

  CHECK(y1.v == y3.v);
  CHECK(dx1.v == dx3.v);
  CHECK(dk1 == dk3);
  CHECK(db1 == db3);
}
