#include "fissura/fbm.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include "fissura/error.hpp"
#include "fissura/rng.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "crack";

// FFTW plan creation/destruction is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

void fft2_inplace(std::vector<std::complex<double>>& a, int m) {
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_2d(m, m, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(a.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
}

// Stein's compactly supported covariance whose stationary field extends to
// an exact fractional Brownian field on the unit disk.
struct SteinCov {
  double alpha, R, beta, c0, c2;

  explicit SteinCov(double hurst) {
    alpha = 2.0 * hurst;
    if (alpha <= 1.5) {
      R = 1.0;
      beta = 0.0;
      c2 = alpha / 2.0;
      c0 = 1.0 - alpha / 2.0;
    } else {
      R = 2.0;
      beta = alpha * (2.0 - alpha) / (3.0 * R * (R * R - 1.0));
      c2 = (alpha - beta * (R - 1.0) * (R - 1.0) * (R + 2.0)) / 2.0;
      c0 = beta * (R - 1.0) * (R - 1.0) * (R - 1.0) + 1.0 - c2;
    }
  }

  double rho(double r) const {
    if (r <= 1.0) return c0 - std::pow(r, alpha) + c2 * r * r;
    if (r <= R) return beta * (R - r) * (R - r) * (R - r) / r;
    return 0.0;
  }
};

}  // namespace

HeightField gen_fbm_field(const FbmParams& p) {
  require(p.grid_n >= 2, kModule, "fbm grid_n must be >= 2");
  require(p.hurst > 0.0 && p.hurst < 1.0, kModule, "hurst must be in (0,1)");
  require(p.amplitude_vox > 0.0, kModule, "fbm amplitude must be positive");

  // Grid over [0, 0.7]^2: the far corner is at distance 0.7*sqrt(2) < 1,
  // so every output node lies inside the disk where the construction is
  // an exact fractional Brownian field.
  const int n = p.grid_n;
  const double extent = 0.7;
  const double h = extent / (n - 1);
  const SteinCov cov(p.hurst);

  // Embedding size: power of two whose torus period m*h covers 2R, grown
  // if the eigenvalues come out materially negative.
  int m = 1;
  while (m * h < 2.0 * cov.R || m < 2 * n) m *= 2;

  std::vector<double> lam;
  for (;; m *= 2) {
    require(m <= (1 << 15), kModule, "fbm embedding did not become positive definite");
    std::vector<std::complex<double>> crow(std::size_t(m) * m);
    for (int j2 = 0; j2 < m; ++j2) {
      const double d2 = std::min(j2, m - j2) * h;
      for (int j1 = 0; j1 < m; ++j1) {
        const double d1 = std::min(j1, m - j1) * h;
        crow[std::size_t(j2) * m + j1] = cov.rho(std::hypot(d1, d2));
      }
    }
    fft2_inplace(crow, m);

    lam.resize(crow.size());
    double neg = 0.0, pos = 0.0;
    const double inv_total = 1.0 / (double(m) * double(m));
    for (std::size_t i = 0; i < crow.size(); ++i) {
      lam[i] = crow[i].real() * inv_total;
      neg = std::min(neg, lam[i]);
      pos = std::max(pos, lam[i]);
    }
    if (-neg <= 1e-9 * pos) {
      for (double& l : lam)
        if (l < 0.0) l = 0.0;
      break;
    }
  }

  // Spectral synthesis: Re FFT2(sqrt(lam) .* xi) has covariance rho on the
  // first n x n block (xi with iid standard normal real/imag parts).
  std::mt19937_64 rng = make_rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> f(std::size_t(m) * m);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    const double s = std::sqrt(lam[i]);
    f[i] = {s * re, s * im};
  }
  fft2_inplace(f, m);

  // B(t) = (Z(t) - Z(0) + t.W) / sqrt(2),  W ~ N(0, 2*c2*I),  so that
  // E[(B(t)-B(s))^2] = |t-s|^(2H) exactly for |t-s| <= 1.
  const double wx = std::sqrt(2.0 * cov.c2) * normal(rng);
  const double wy = std::sqrt(2.0 * cov.c2) * normal(rng);
  const double z00 = f[0].real();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  HeightField out;
  out.n = n;
  out.h.resize(std::size_t(n) * n);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      const double z = f[std::size_t(v) * m + u].real();
      out.h[std::size_t(v) * n + u] = (z - z00 + wx * (u * h) + wy * (v * h)) * inv_sqrt2;
    }

  // Rescale to the requested amplitude; the origin stays pinned at 0.
  double mean = 0.0;
  for (double x : out.h) mean += x;
  mean /= double(out.h.size());
  double var = 0.0;
  for (double x : out.h) var += (x - mean) * (x - mean);
  var /= double(out.h.size());
  if (var > 0.0) {
    const double s = p.amplitude_vox / std::sqrt(var);
    for (double& x : out.h) x *= s;
  }
  return out;
}

}  // namespace fissura
