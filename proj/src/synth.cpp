#include "fissura/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fissura/rng.hpp"

namespace fissura {

namespace {

constexpr const char* kModule = "synth";

void paint_ball(Volume& v, double cx, double cy, double cz, double r, float value) {
  const int xa = std::max(0, int(std::floor(cx - r))), xb = std::min(v.dims.x - 1, int(std::ceil(cx + r)));
  const int ya = std::max(0, int(std::floor(cy - r))), yb = std::min(v.dims.y - 1, int(std::ceil(cy + r)));
  const int za = std::max(0, int(std::floor(cz - r))), zb = std::min(v.dims.z - 1, int(std::ceil(cz + r)));
  const double r2 = r * r;
  for (int z = za; z <= zb; ++z)
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        if (dx * dx + dy * dy + dz * dz <= r2) v.at(x, y, z) = value;
      }
}

}  // namespace

float GrayDistribution::quantile(double u) const {
  require(!values.empty(), kModule, "empty gray distribution");
  u = std::clamp(u, 0.0, 1.0);
  const double target = u * double(source_count);
  std::size_t lo = 0, hi = values.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (double(cum[mid]) >= target) hi = mid;
    else lo = mid + 1;
  }
  return values[lo];
}

double GrayDistribution::mean() const {
  require(!values.empty(), kModule, "empty gray distribution");
  double s = 0.0;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s += double(values[i]) * double(cum[i] - prev);
    prev = cum[i];
  }
  return s / double(source_count);
}

const char* concrete_kind_name(ConcreteKind k) {
  switch (k) {
    case ConcreteKind::NC: return "NC";
    case ConcreteKind::HPC: return "HPC";
    case ConcreteKind::PPFRC: return "PPFRC";
    case ConcreteKind::SFRC: return "SFRC";
  }
  return "?";
}

ConcreteKind concrete_kind_from_name(const std::string& name) {
  if (name == "NC") return ConcreteKind::NC;
  if (name == "HPC") return ConcreteKind::HPC;
  if (name == "PPFRC") return ConcreteKind::PPFRC;
  if (name == "SFRC") return ConcreteKind::SFRC;
  raise(kModule, "unknown concrete kind '" + name + "'");
}

double otsu_threshold(const Volume& v) {
  auto [mn_it, mx_it] = std::minmax_element(v.data.begin(), v.data.end());
  const double mn = *mn_it, mx = *mx_it;
  require(mx > mn, kModule, "cannot threshold a constant image");

  int bins;
  double bin_w, origin;
  if (v.kind == ElemKind::f32) {
    bins = 4096;
    bin_w = (mx - mn) / bins;
    origin = mn;
  } else {
    origin = mn;
    bins = int(mx - mn) + 1;  // exact integer bins
    bin_w = 1.0;
  }

  std::vector<double> hist(bins, 0.0);
  for (float x : v.data) {
    int b = int((x - origin) / bin_w);
    hist[std::clamp(b, 0, bins - 1)] += 1.0;
  }
  const double total = double(v.data.size());
  double sum_all = 0.0;
  for (int b = 0; b < bins; ++b) sum_all += (origin + (b + 0.5) * bin_w) * hist[b];

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = 0;
  for (int t = 0; t < bins - 1; ++t) {
    const double center = origin + (t + 0.5) * bin_w;
    w0 += hist[t];
    sum0 += center * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
    const double var_b = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var_b > best) {
      best = var_b;
      best_t = t;
    }
  }
  // Upper edge of the last pore bin; pores are values strictly below it.
  return v.kind == ElemKind::f32 ? origin + (best_t + 1) * bin_w : origin + best_t + 0.5;
}

namespace {

GrayDistribution build_distribution(std::vector<float>&& pool) {
  require(!pool.empty(), kModule, "no pore voxels to estimate from");
  std::sort(pool.begin(), pool.end());
  GrayDistribution d;
  d.source_count = pool.size();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (d.values.empty() || pool[i] != d.values.back()) {
      d.values.push_back(pool[i]);
      d.cum.push_back(i + 1);
    } else {
      d.cum.back() = i + 1;
    }
  }
  return d;
}

}  // namespace

GrayDistribution estimate_pore_distribution(const Volume& background) {
  const double thr = otsu_threshold(background);
  std::vector<float> pool;
  for (float x : background.data)
    if (double(x) < thr) pool.push_back(x);
  require(pool.size() >= 1000, kModule,
          "fewer than 1000 pore voxels below the Otsu threshold; supply a pore mask");
  return build_distribution(std::move(pool));
}

GrayDistribution estimate_pore_distribution(const Volume& background, const Mask& pores) {
  require(background.dims == pores.dims, kModule, "pore mask dims do not match");
  std::vector<float> pool;
  for (std::size_t i = 0; i < pores.bits.size(); ++i)
    if (pores.bits[i]) pool.push_back(background.data[i]);
  return build_distribution(std::move(pool));
}

LabeledVolume imprint_crack(const Volume& background, const Mask& crack,
                            const GrayDistribution& dist, std::uint64_t seed) {
  require(background.dims == crack.dims, kModule, "crack mask dims do not match");
  LabeledVolume lv;
  lv.gray = background;
  lv.truth = crack;
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t i = 0; i < crack.bits.size(); ++i)
    if (crack.bits[i]) lv.gray.data[i] = dist.quantile(uni(rng));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "imprint_seed=%llu", static_cast<unsigned long long>(seed));
  lv.provenance = buf;
  return lv;
}

Volume make_surrogate_background(ConcreteKind kind, Dims3 dims, std::uint64_t seed) {
  const bool wide = kind != ConcreteKind::PPFRC;  // PPFRC scans are 8 bit
  const ElemKind ek = wide ? ElemKind::u16 : ElemKind::u8;
  const double matrix = wide ? 30000.0 : 150.0;
  const double matrix_sd = wide ? 1200.0 : 6.0;
  const double pore_gray = wide ? 3000.0 : 30.0;
  const double pore_sd = wide ? 400.0 : 4.0;
  const double top = elem_kind_max(ek);

  Volume v = Volume::zeros(dims, ek, 50.0);

  {  // matrix + per-voxel noise
    std::mt19937_64 rng = make_rng(substream_seed(seed, 1));
    std::normal_distribution<double> noise(matrix, matrix_sd);
    for (float& x : v.data) x = float(std::clamp(std::round(noise(rng)), 1.0, top));
  }

  {  // aggregate blobs, slightly off-matrix gray
    std::mt19937_64 rng = make_rng(substream_seed(seed, 2));
    std::uniform_real_distribution<double> ux(0.0, dims.x), uy(0.0, dims.y), uz(0.0, dims.z);
    const bool fine = kind == ConcreteKind::HPC;
    std::uniform_real_distribution<double> ur(fine ? 2.0 : 3.0, fine ? 5.0 : 9.0);
    std::uniform_real_distribution<double> uf(0.85, 1.15);
    const std::size_t count = dims.count() / 25000 + 1;
    for (std::size_t i = 0; i < count; ++i) {
      const double cx = ux(rng), cy = uy(rng), cz = uz(rng), r = ur(rng);
      const float g = float(std::clamp(std::round(uf(rng) * matrix), 1.0, top));
      paint_ball(v, cx, cy, cz, r, g);
    }
  }

  if (kind == ConcreteKind::SFRC || kind == ConcreteKind::PPFRC) {  // fiber segments
    std::mt19937_64 rng = make_rng(substream_seed(seed, 4));
    std::uniform_real_distribution<double> ux(0.0, dims.x), uy(0.0, dims.y), uz(0.0, dims.z);
    std::uniform_real_distribution<double> udir(-1.0, 1.0);
    const int min_dim = std::min({dims.x, dims.y, dims.z});
    std::uniform_real_distribution<double> ulen(min_dim / 4.0, min_dim / 2.0);
    const bool bright = kind == ConcreteKind::SFRC;  // steel bright, polypropylene dark
    const double fiber_gray = bright ? 62000.0 : 55.0;
    const double fiber_r = bright ? 1.2 : 0.8;
    const std::size_t count = dims.count() / 40000 + 1;
    for (std::size_t i = 0; i < count; ++i) {
      double dx = udir(rng), dy = udir(rng), dz = udir(rng);
      const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (norm < 1e-6) continue;
      dx /= norm;
      dy /= norm;
      dz /= norm;
      double x = ux(rng), y = uy(rng), z = uz(rng);
      const double len = ulen(rng);
      for (double s = 0.0; s < len; s += 0.5)
        paint_ball(v, x + s * dx, y + s * dy, z + s * dz, fiber_r, float(fiber_gray));
    }
  }

  {  // pores last so nothing overwrites them; enough that the pore-statistics
     // estimator has a usable sample even at the 32^3 minimum volume
    std::mt19937_64 rng = make_rng(substream_seed(seed, 3));
    std::uniform_real_distribution<double> ux(0.0, dims.x), uy(0.0, dims.y), uz(0.0, dims.z);
    std::uniform_real_distribution<double> ur(0.8, 3.2);
    std::normal_distribution<double> ug(pore_gray, pore_sd);
    const std::size_t count = dims.count() / 1000 + 8;
    for (std::size_t i = 0; i < count; ++i) {
      const double cx = ux(rng), cy = uy(rng), cz = uz(rng), r = ur(rng);
      const float g = float(std::clamp(std::round(ug(rng)), 1.0, top));
      paint_ball(v, cx, cy, cz, r, g);
    }
  }
  return v;
}

TrainingSet build_dataset(const Volume backgrounds[4], const FbmParams& fbm, std::uint64_t seed,
                          int size) {
  require(size >= 32, kModule, "dataset volume size must be >= 32");
  constexpr ConcreteKind kinds[4] = {ConcreteKind::NC, ConcreteKind::HPC, ConcreteKind::PPFRC,
                                     ConcreteKind::SFRC};
  constexpr int widths[3] = {1, 3, 5};

  TrainingSet ts;
  ts.volumes.reserve(24);
  for (int k = 0; k < 4; ++k) {
    const Volume& bg = backgrounds[k];
    require(bg.dims.x >= size && bg.dims.y >= size && bg.dims.z >= size, kModule,
            std::string("background too small for ") + concrete_kind_name(kinds[k]));
    BoxRegion r{{0, 0, 0}, {size, size, size}};
    const Volume bg_crop = bg.dims == Dims3{size, size, size} ? bg : crop(bg, r);
    const GrayDistribution dist = estimate_pore_distribution(bg_crop);

    for (int j = 0; j < 6; ++j) {
      const int nn = k * 6 + j;
      const int w = widths[j % 3];
      std::mt19937_64 rng = make_rng(substream_seed(seed, 10, std::uint64_t(nn)));
      std::uniform_int_distribution<int> uplane(0, 2);
      std::uniform_real_distribution<double> utilt(-0.2, 0.2);

      CrackSpec spec;
      spec.count = j < 3 ? 1 : 2;
      spec.seed = substream_seed(seed, 11, std::uint64_t(nn));
      for (int c = 0; c < 2; ++c) {
        spec.width[c].constant_vox = w;
        spec.orient[c].plane = BasePlane(uplane(rng));
        spec.orient[c].tilt_rad = utilt(rng);
      }
      spec.coplanar = spec.count == 2 && (rng() & 1u);

      const Mask scene = compose_scene(spec, {size, size, size}, fbm);
      LabeledVolume lv =
          imprint_crack(bg_crop, scene, dist, substream_seed(seed, 12, std::uint64_t(nn)));
      lv.kind = kinds[k];
      char buf[160];
      std::snprintf(buf, sizeof(buf), "kind=%s;width=%d;cracks=%d;coplanar=%d;seed=%llu",
                    concrete_kind_name(kinds[k]), w, spec.count, spec.coplanar ? 1 : 0,
                    static_cast<unsigned long long>(spec.seed));
      lv.provenance = buf;
      ts.volumes.push_back(std::move(lv));
    }
  }
  return ts;
}

void save_dataset(const TrainingSet& ts, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, kModule, "cannot create directory '" + dir + "'");

  std::ofstream man(dir + "/manifest.txt", std::ios::binary | std::ios::trunc);
  require(man.good(), kModule, "cannot write manifest in '" + dir + "'");
  man << "volumes = " << ts.volumes.size() << "\n";
  for (std::size_t i = 0; i < ts.volumes.size(); ++i) {
    const LabeledVolume& lv = ts.volumes[i];
    char img[32], gt[32];
    std::snprintf(img, sizeof(img), "img%02zu.vvol", i);
    std::snprintf(gt, sizeof(gt), "gt%02zu.vvol", i);
    save_volume(lv.gray, dir + "/" + img);
    save_mask(lv.truth, dir + "/" + gt, lv.gray.voxel_size_um);
    char key[16];
    std::snprintf(key, sizeof(key), "vol%02zu", i);
    man << key << ".kind = " << concrete_kind_name(lv.kind) << "\n";
    man << key << ".provenance = " << lv.provenance << "\n";
  }
  require(man.good(), kModule, "manifest write failed in '" + dir + "'");
}

TrainingSet load_dataset(const std::string& dir) {
  std::ifstream man(dir + "/manifest.txt", std::ios::binary);
  require(man.good(), kModule, "cannot open manifest in '" + dir + "'");
  std::size_t count = 0;
  std::string line;
  std::vector<std::string> kinds, provs;
  while (std::getline(man, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "volumes") count = std::stoul(val);
    else if (key.size() > 5 && key.substr(5) == ".kind") kinds.push_back(val);
    else if (key.size() > 5 && key.substr(5) == ".provenance") provs.push_back(val);
  }
  require(count > 0 && kinds.size() == count, kModule, "bad manifest in '" + dir + "'");

  TrainingSet ts;
  ts.volumes.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    char img[32], gt[32];
    std::snprintf(img, sizeof(img), "img%02zu.vvol", i);
    std::snprintf(gt, sizeof(gt), "gt%02zu.vvol", i);
    LabeledVolume& lv = ts.volumes[i];
    lv.gray = load_volume(dir + "/" + img);
    lv.truth = load_mask(dir + "/" + gt);
    require(lv.gray.dims == lv.truth.dims, kModule, "image/truth dims mismatch in '" + dir + "'");
    lv.kind = concrete_kind_from_name(kinds[i]);
    lv.provenance = i < provs.size() ? provs[i] : "";
  }
  return ts;
}

}  // namespace fissura
