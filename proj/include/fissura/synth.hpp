#pragma once

#include <string>

#include "fissura/crack.hpp"
#include "fissura/volume.hpp"

namespace fissura {

/// Empirical gray-value distribution (sorted support + cumulative counts).
struct GrayDistribution {
  std::vector<float> values;     // sorted unique gray values
  std::vector<std::size_t> cum;  // cumulative counts, parallel to values
  std::size_t source_count = 0;

  /// Smallest value whose CDF is >= u (inverse CDF), u in [0,1].
  float quantile(double u) const;
  double mean() const;
};

enum class ConcreteKind : std::uint8_t { NC, HPC, PPFRC, SFRC };
const char* concrete_kind_name(ConcreteKind k);
ConcreteKind concrete_kind_from_name(const std::string& name);

struct LabeledVolume {
  Volume gray;
  Mask truth;
  ConcreteKind kind = ConcreteKind::NC;
  std::string provenance;
};

/// Global two-class threshold maximizing between-class variance.
double otsu_threshold(const Volume& v);

/// Pore gray statistics: voxels below the Otsu threshold.  Errors on
/// constant images or when fewer than 1000 pore voxels are found; use the
/// explicit-mask overload in that case.
GrayDistribution estimate_pore_distribution(const Volume& background);
GrayDistribution estimate_pore_distribution(const Volume& background, const Mask& pores);

/// Imprint a crack: crack voxels get i.i.d. samples from dist (inverse-CDF,
/// x-fastest draw order), everything else stays byte-identical.
LabeledVolume imprint_crack(const Volume& background, const Mask& crack,
                            const GrayDistribution& dist, std::uint64_t seed);

/// Procedural uncracked concrete stand-in: bright matrix with aggregate
/// blobs and dark pores; SFRC adds bright fiber segments (u16), PPFRC dark
/// thin fibers (u8).  Deterministic in seed.
Volume make_surrogate_background(ConcreteKind kind, Dims3 dims, std::uint64_t seed);

struct TrainingSet {
  std::vector<LabeledVolume> volumes;
};

/// The 24-volume training protocol: per concrete kind, single cracks of
/// widths 1/3/5 then double cracks of widths 1/3/5 (coplanar or not by a
/// seeded coin), applied to size^3 crops of the four backgrounds.
TrainingSet build_dataset(const Volume backgrounds[4], const FbmParams& fbm, std::uint64_t seed,
                          int size = 256);

void save_dataset(const TrainingSet& ts, const std::string& dir);
TrainingSet load_dataset(const std::string& dir);

}  // namespace fissura
