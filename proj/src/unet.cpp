#include "fissura/unet.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "fissura/rng.hpp"

namespace fissura {

namespace {
constexpr const char* kModule = "unet";
}

std::int64_t unet_param_audit(int base_filters, int levels) {
  require(base_filters >= 1 && levels >= 1, kModule, "invalid architecture");
  auto conv = [](std::int64_t in, std::int64_t out) { return 27 * in * out + out; };
  auto bn = [](std::int64_t ch) { return 2 * ch; };
  const std::int64_t f = base_filters;
  std::int64_t p = 0;
  for (int i = 0; i < levels; ++i) {
    const std::int64_t in = i == 0 ? 1 : f << (i - 1);
    const std::int64_t out = f << i;
    p += conv(in, out) + bn(out) + conv(out, out) + bn(out);
  }
  const std::int64_t bin = f << (levels - 1), bout = f << levels;
  p += conv(bin, bout) + bn(bout) + conv(bout, bout) + bn(bout);
  for (int j = 0; j < levels; ++j) {
    const std::int64_t u = f << (levels - j);
    const std::int64_t s = f << (levels - 1 - j);
    p += conv(u, u) + bn(u) + conv(3 * s, s) + bn(s) + conv(s, s) + bn(s);
  }
  p += conv(f, 1);
  return p;
}

template <typename T>
void Unet3D<T>::build(const UnetConfig& c, std::uint64_t seed) {
  require(c.base_filters >= 1, kModule, "base_filters must be positive");
  require(c.levels >= 1, kModule, "levels must be positive");
  cfg = c;
  enc.assign(c.levels, {});
  dec.assign(c.levels, {});

  std::size_t po = 0, ro = 0;
  auto conv_desc = [&](int in_ch, int out_ch) {
    ConvDesc d;
    d.in_ch = in_ch;
    d.out_ch = out_ch;
    d.k_off = po;
    po += d.kernel_size();
    d.b_off = po;
    po += out_ch;
    return d;
  };
  auto stage = [&](int in_ch, int out_ch) {
    StageDesc s;
    s.conv = conv_desc(in_ch, out_ch);
    s.bn.ch = out_ch;
    s.bn.g_off = po;
    po += out_ch;
    s.bn.b_off = po;
    po += out_ch;
    s.bn.r_off = ro;
    ro += 2 * std::size_t(out_ch);
    return s;
  };

  const int f = c.base_filters;
  for (int i = 0; i < c.levels; ++i) {
    const int in = i == 0 ? 1 : f << (i - 1);
    const int out = f << i;
    enc[i].c1 = stage(in, out);
    enc[i].c2 = stage(out, out);
  }
  bot.c1 = stage(f << (c.levels - 1), f << c.levels);
  bot.c2 = stage(f << c.levels, f << c.levels);
  for (int j = 0; j < c.levels; ++j) {
    const int u = f << (c.levels - j);
    const int s = f << (c.levels - 1 - j);
    dec[j].up = stage(u, u);
    dec[j].c1 = stage(3 * s, s);
    dec[j].c2 = stage(s, s);
  }
  fin = conv_desc(f, 1);

  theta.assign(po, T(0));
  running.assign(ro, T(0));

  // Uniform +-sqrt(6/(fan_in+fan_out)) kernels, zero biases, unit gamma and
  // running variance.  One generator, fixed traversal order.
  auto rng = make_rng(seed);
  auto init_conv = [&](const ConvDesc& d) {
    const double a = std::sqrt(6.0 / (27.0 * d.in_ch + 27.0 * d.out_ch));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < d.kernel_size(); ++i) theta[d.k_off + i] = T(u(rng));
  };
  auto init_stage = [&](const StageDesc& s) {
    init_conv(s.conv);
    for (int i = 0; i < s.bn.ch; ++i) theta[s.bn.g_off + i] = T(1);
    for (int i = 0; i < s.bn.ch; ++i) running[s.bn.r_off + s.bn.ch + i] = T(1);
  };
  for (int i = 0; i < c.levels; ++i) {
    init_stage(enc[i].c1);
    init_stage(enc[i].c2);
  }
  init_stage(bot.c1);
  init_stage(bot.c2);
  for (int j = 0; j < c.levels; ++j) {
    init_stage(dec[j].up);
    init_stage(dec[j].c1);
    init_stage(dec[j].c2);
  }
  init_conv(fin);
}

template <typename T>
std::vector<TensorRef> Unet3D<T>::payload_layout() const {
  std::vector<TensorRef> refs;
  auto add_conv = [&](const std::string& p, const ConvDesc& d) {
    refs.push_back({p + ".kernel", d.k_off, d.kernel_size(), false});
    refs.push_back({p + ".bias", d.b_off, std::size_t(d.out_ch), false});
  };
  auto add_bn = [&](const std::string& p, const BnDesc& d) {
    refs.push_back({p + ".gamma", d.g_off, std::size_t(d.ch), false});
    refs.push_back({p + ".beta", d.b_off, std::size_t(d.ch), false});
    refs.push_back({p + ".running_mean", d.r_off, std::size_t(d.ch), true});
    refs.push_back({p + ".running_var", d.r_off + d.ch, std::size_t(d.ch), true});
  };
  auto add_stage = [&](const std::string& cp, const std::string& bp, const StageDesc& s) {
    add_conv(cp, s.conv);
    add_bn(bp, s.bn);
  };
  for (int i = 0; i < cfg.levels; ++i) {
    const std::string p = "enc" + std::to_string(i + 1);
    add_stage(p + ".conv1", p + ".bn1", enc[i].c1);
    add_stage(p + ".conv2", p + ".bn2", enc[i].c2);
  }
  add_stage("bottleneck.conv1", "bottleneck.bn1", bot.c1);
  add_stage("bottleneck.conv2", "bottleneck.bn2", bot.c2);
  for (int j = 0; j < cfg.levels; ++j) {
    const std::string p = "dec" + std::to_string(j + 1);
    add_stage(p + ".up", p + ".up_bn", dec[j].up);
    add_stage(p + ".conv1", p + ".bn1", dec[j].c1);
    add_stage(p + ".conv2", p + ".bn2", dec[j].c2);
  }
  add_conv("final", fin);
  return refs;
}

template <typename T>
void Unet3D<T>::forward(const TensorT<T>& x, UnetCache<T>& cache, bool train) {
  require(!theta.empty(), kModule, "network not built");
  require(x.c == 1, kModule, "input must have one channel");
  const int div = 1 << cfg.levels;
  require(x.d % div == 0 && x.h % div == 0 && x.w % div == 0 && x.d >= div && x.h >= div &&
              x.w >= div,
          kModule, "spatial dims must be positive multiples of 2^levels");
  cache.enc.resize(cfg.levels);
  cache.dec.resize(cfg.levels);

  auto stage_fwd = [&](const StageDesc& s, bool transposed, const TensorT<T>& in,
                       typename UnetCache<T>::StageCache& sc) {
    if (transposed)
      tconv3d_forward(in, &theta[s.conv.k_off], &theta[s.conv.b_off], s.conv.out_ch, sc.out);
    else
      conv3d_forward(in, &theta[s.conv.k_off], &theta[s.conv.b_off], s.conv.out_ch, sc.out);
    batchnorm3d_forward(sc.out, &theta[s.bn.g_off], &theta[s.bn.b_off], &running[s.bn.r_off],
                        &running[s.bn.r_off + s.bn.ch], kBnMomentum, kBnEps, train,
                        train ? &sc.bn : nullptr);
    relu_forward(sc.out);
  };

  const TensorT<T>* cur = &x;
  for (int i = 0; i < cfg.levels; ++i) {
    auto& ec = cache.enc[i];
    stage_fwd(enc[i].c1, false, *cur, ec.c1);
    stage_fwd(enc[i].c2, false, ec.c1.out, ec.c2);
    maxpool3d_forward(ec.c2.out, ec.pooled, ec.argmax);
    cur = &ec.pooled;
  }
  stage_fwd(bot.c1, false, *cur, cache.bot1);
  stage_fwd(bot.c2, false, cache.bot1.out, cache.bot2);
  cur = &cache.bot2.out;
  for (int j = 0; j < cfg.levels; ++j) {
    auto& dc = cache.dec[j];
    stage_fwd(dec[j].up, true, *cur, dc.up);
    concat_channels(dc.up.out, cache.enc[cfg.levels - 1 - j].c2.out, dc.cat);
    stage_fwd(dec[j].c1, false, dc.cat, dc.c1);
    stage_fwd(dec[j].c2, false, dc.c1.out, dc.c2);
    cur = &dc.c2.out;
  }
  conv3d_forward(*cur, &theta[fin.k_off], &theta[fin.b_off], 1, cache.prob);
  sigmoid_forward(cache.prob);
}

template <typename T>
void Unet3D<T>::backward(const TensorT<T>& x, const UnetCache<T>& cache, const TensorT<T>& dprob,
                         std::vector<T>& g) {
  require(dprob.same_shape(cache.prob), kModule, "output gradient shape mismatch");
  require(int(cache.enc.size()) == cfg.levels && int(cache.dec.size()) == cfg.levels, kModule,
          "cache does not match network");
  g.assign(theta.size(), T(0));

  TensorT<T> d = dprob;
  TensorT<T> tmp;
  sigmoid_backward(cache.prob, d);  // d is now the gradient at the logits

  // On entry d holds the gradient at the stage output; on exit (want_dx) it
  // holds the gradient at the stage input.
  auto stage_bwd = [&](const StageDesc& s, bool transposed, const TensorT<T>& in,
                       const typename UnetCache<T>::StageCache& sc, bool want_dx) {
    relu_backward(sc.out, d);
    batchnorm3d_backward(sc.bn, &theta[s.bn.g_off], d, tmp, &g[s.bn.g_off], &g[s.bn.b_off]);
    if (transposed)
      tconv3d_backward(in, &theta[s.conv.k_off], s.conv.out_ch, tmp, want_dx ? &d : nullptr,
                       &g[s.conv.k_off], &g[s.conv.b_off]);
    else
      conv3d_backward(in, &theta[s.conv.k_off], s.conv.out_ch, tmp, want_dx ? &d : nullptr,
                      &g[s.conv.k_off], &g[s.conv.b_off]);
  };

  conv3d_backward(cache.dec.back().c2.out, &theta[fin.k_off], 1, d, &tmp, &g[fin.k_off],
                  &g[fin.b_off]);
  std::swap(d, tmp);

  std::vector<TensorT<T>> dskip(cfg.levels);
  for (int j = cfg.levels - 1; j >= 0; --j) {
    const auto& dc = cache.dec[j];
    stage_bwd(dec[j].c2, false, dc.c1.out, dc.c2, true);
    stage_bwd(dec[j].c1, false, dc.cat, dc.c1, true);
    const int sk = cfg.levels - 1 - j;
    TensorT<T> da, db;
    da.resize(d.b, dec[j].up.conv.out_ch, d.d, d.h, d.w);
    db.resize(d.b, enc[sk].c2.conv.out_ch, d.d, d.h, d.w);
    split_channels(d, da, db);
    dskip[sk] = std::move(db);
    d = std::move(da);
    stage_bwd(dec[j].up, true, j == 0 ? cache.bot2.out : cache.dec[j - 1].c2.out, dc.up, true);
  }
  stage_bwd(bot.c2, false, cache.bot1.out, cache.bot2, true);
  stage_bwd(bot.c1, false, cache.enc[cfg.levels - 1].pooled, cache.bot1, true);
  for (int i = cfg.levels - 1; i >= 0; --i) {
    const auto& ec = cache.enc[i];
    const auto& co = ec.c2.out;
    tmp.resize(co.b, co.c, co.d, co.h, co.w);
    maxpool3d_backward(ec.argmax, d, tmp);
    for (std::size_t q = 0; q < tmp.v.size(); ++q) tmp.v[q] += dskip[i].v[q];
    std::swap(d, tmp);
    stage_bwd(enc[i].c2, false, ec.c1.out, ec.c2, true);
    stage_bwd(enc[i].c1, false, i == 0 ? x : cache.enc[i - 1].pooled, ec.c1, i != 0);
  }
}

template struct Unet3D<float>;
template struct Unet3D<double>;

}  // namespace fissura
