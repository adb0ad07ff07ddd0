#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fissura/error.hpp"

namespace fissura {

enum class ElemKind : std::uint8_t { u8, u16, f32 };

const char* elem_kind_name(ElemKind k);
ElemKind elem_kind_from_name(const std::string& name);
std::size_t elem_kind_size(ElemKind k);
double elem_kind_max(ElemKind k);  // 255 / 65535 / 1.0

struct Dims3 {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t count() const {
    return std::size_t(x) * std::size_t(y) * std::size_t(z);
  }
  int operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  bool operator==(const Dims3&) const = default;
};

/// Dense 3D scalar grid, x-fastest layout.  Values are held as float
/// regardless of element kind; u8/u16 grids keep exact integer values,
/// so file round trips are bit-exact.
struct Volume {
  Dims3 dims;
  ElemKind kind = ElemKind::u8;
  double voxel_size_um = 1.0;
  std::vector<float> data;

  static Volume zeros(Dims3 d, ElemKind k, double voxel_size_um = 1.0);

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * dims.y + std::size_t(y)) * dims.x + std::size_t(x);
  }
  float at(int x, int y, int z) const { return data[index(x, y, z)]; }
  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
};

/// Dense 3D binary grid, x-fastest, values exactly 0 or 1.
struct Mask {
  Dims3 dims;
  std::vector<std::uint8_t> bits;

  static Mask zeros(Dims3 d);

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * dims.y + std::size_t(y)) * dims.x + std::size_t(x);
  }
  std::uint8_t at(int x, int y, int z) const { return bits[index(x, y, z)]; }
  std::uint8_t& at(int x, int y, int z) { return bits[index(x, y, z)]; }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

/// Axis-aligned box, lo inclusive, hi exclusive.
struct BoxRegion {
  int lo[3] = {0, 0, 0};
  int hi[3] = {0, 0, 0};
};

Volume load_volume(const std::string& path);
void save_volume(const Volume& v, const std::string& path);
Mask load_mask(const std::string& path);
void save_mask(const Mask& m, const std::string& path, double voxel_size_um = 1.0);

Volume crop(const Volume& v, const BoxRegion& r);
Mask crop(const Mask& m, const BoxRegion& r);

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

/// Binary PGM export of one slice.  u8 passes through; u16/f32 are
/// min-max scaled over the slice to 0..255 (floor).
void export_slice(const Volume& v, Axis axis, int index, const std::string& path);

}  // namespace fissura
