#include "fissura/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace fissura {

namespace {

constexpr const char* kModule = "volume";

void put_bytes(std::vector<std::uint8_t>& out, const Volume& v) {
  const std::size_t n = v.dims.count();
  switch (v.kind) {
    case ElemKind::u8:
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        long q = std::lround(v.data[i]);
        out[i] = std::uint8_t(std::clamp(q, 0L, 255L));
      }
      break;
    case ElemKind::u16:
      out.resize(n * 2);
      for (std::size_t i = 0; i < n; ++i) {
        long q = std::lround(v.data[i]);
        std::uint16_t w = std::uint16_t(std::clamp(q, 0L, 65535L));
        out[2 * i] = std::uint8_t(w & 0xff);
        out[2 * i + 1] = std::uint8_t(w >> 8);
      }
      break;
    case ElemKind::f32:
      out.resize(n * 4);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t w = std::bit_cast<std::uint32_t>(v.data[i]);
        out[4 * i] = std::uint8_t(w & 0xff);
        out[4 * i + 1] = std::uint8_t((w >> 8) & 0xff);
        out[4 * i + 2] = std::uint8_t((w >> 16) & 0xff);
        out[4 * i + 3] = std::uint8_t((w >> 24) & 0xff);
      }
      break;
  }
}

void get_values(const std::vector<std::uint8_t>& in, Volume& v) {
  const std::size_t n = v.dims.count();
  v.data.resize(n);
  switch (v.kind) {
    case ElemKind::u8:
      for (std::size_t i = 0; i < n; ++i) v.data[i] = float(in[i]);
      break;
    case ElemKind::u16:
      for (std::size_t i = 0; i < n; ++i)
        v.data[i] = float(std::uint16_t(in[2 * i]) | (std::uint16_t(in[2 * i + 1]) << 8));
      break;
    case ElemKind::f32:
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t w = std::uint32_t(in[4 * i]) | (std::uint32_t(in[4 * i + 1]) << 8) |
                          (std::uint32_t(in[4 * i + 2]) << 16) |
                          (std::uint32_t(in[4 * i + 3]) << 24);
        v.data[i] = std::bit_cast<float>(w);
      }
      break;
  }
}

std::string read_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) raise(kModule, "unexpected end of VVOL1 header");
  return line;
}

}  // namespace

const char* elem_kind_name(ElemKind k) {
  switch (k) {
    case ElemKind::u8: return "u8";
    case ElemKind::u16: return "u16";
    case ElemKind::f32: return "f32";
  }
  return "?";
}

ElemKind elem_kind_from_name(const std::string& name) {
  if (name == "u8") return ElemKind::u8;
  if (name == "u16") return ElemKind::u16;
  if (name == "f32") return ElemKind::f32;
  raise(kModule, "unknown dtype '" + name + "'");
}

std::size_t elem_kind_size(ElemKind k) {
  return k == ElemKind::u8 ? 1 : k == ElemKind::u16 ? 2 : 4;
}

double elem_kind_max(ElemKind k) {
  return k == ElemKind::u8 ? 255.0 : k == ElemKind::u16 ? 65535.0 : 1.0;
}

Volume Volume::zeros(Dims3 d, ElemKind k, double voxel_size_um) {
  require(d.x > 0 && d.y > 0 && d.z > 0, kModule, "dims must be positive");
  require(voxel_size_um > 0.0, kModule, "voxel size must be positive");
  Volume v;
  v.dims = d;
  v.kind = k;
  v.voxel_size_um = voxel_size_um;
  v.data.assign(d.count(), 0.0f);
  return v;
}

Mask Mask::zeros(Dims3 d) {
  require(d.x > 0 && d.y > 0 && d.z > 0, kModule, "dims must be positive");
  Mask m;
  m.dims = d;
  m.bits.assign(d.count(), 0);
  return m;
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits) n += b;
  return n;
}

Volume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), kModule, "cannot open '" + path + "'");
  require(read_line(in) == "VVOL1", kModule, "bad magic in '" + path + "'");

  Volume v;
  {
    std::string line = read_line(in);
    int x = 0, y = 0, z = 0;
    require(std::sscanf(line.c_str(), "dims %d %d %d", &x, &y, &z) == 3 && x > 0 && y > 0 && z > 0,
            kModule, "bad dims line '" + line + "'");
    v.dims = {x, y, z};
  }
  {
    std::string line = read_line(in);
    require(line.rfind("dtype ", 0) == 0, kModule, "bad dtype line '" + line + "'");
    v.kind = elem_kind_from_name(line.substr(6));
  }
  {
    std::string line = read_line(in);
    double s = 0.0;
    require(std::sscanf(line.c_str(), "voxsize_um %lf", &s) == 1 && s > 0.0, kModule,
            "bad voxsize_um line '" + line + "'");
    v.voxel_size_um = s;
  }
  require(read_line(in) == "end", kModule, "missing 'end' line in '" + path + "'");

  const std::size_t bytes = v.dims.count() * elem_kind_size(v.kind);
  std::vector<std::uint8_t> payload(bytes);
  in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(bytes));
  require(std::size_t(in.gcount()) == bytes, kModule, "truncated payload in '" + path + "'");
  get_values(payload, v);
  return v;
}

void save_volume(const Volume& v, const std::string& path) {
  require(v.data.size() == v.dims.count(), kModule, "value count does not match dims");
  require(v.voxel_size_um > 0.0, kModule, "voxel size must be positive");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), kModule, "cannot write '" + path + "'");

  char head[160];
  int len = std::snprintf(head, sizeof(head), "VVOL1\ndims %d %d %d\ndtype %s\nvoxsize_um %.17g\nend\n",
                          v.dims.x, v.dims.y, v.dims.z, elem_kind_name(v.kind), v.voxel_size_um);
  out.write(head, len);

  std::vector<std::uint8_t> payload;
  put_bytes(payload, v);
  out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
  require(out.good(), kModule, "write failed for '" + path + "'");
}

Mask load_mask(const std::string& path) {
  Volume v = load_volume(path);
  require(v.kind == ElemKind::u8, kModule, "mask file must be dtype u8: '" + path + "'");
  Mask m;
  m.dims = v.dims;
  m.bits.resize(v.data.size());
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    require(v.data[i] == 0.0f || v.data[i] == 1.0f, kModule,
            "mask file has values other than 0/1: '" + path + "'");
    m.bits[i] = std::uint8_t(v.data[i]);
  }
  return m;
}

void save_mask(const Mask& m, const std::string& path, double voxel_size_um) {
  Volume v = Volume::zeros(m.dims, ElemKind::u8, voxel_size_um);
  for (std::size_t i = 0; i < m.bits.size(); ++i) v.data[i] = float(m.bits[i]);
  save_volume(v, path);
}

namespace {

void check_region(Dims3 dims, const BoxRegion& r) {
  for (int a = 0; a < 3; ++a) {
    require(r.lo[a] >= 0 && r.lo[a] < r.hi[a] && r.hi[a] <= dims[a], kModule,
            "region out of bounds");
  }
}

}  // namespace

Volume crop(const Volume& v, const BoxRegion& r) {
  check_region(v.dims, r);
  Dims3 od{r.hi[0] - r.lo[0], r.hi[1] - r.lo[1], r.hi[2] - r.lo[2]};
  Volume out = Volume::zeros(od, v.kind, v.voxel_size_um);
  for (int z = 0; z < od.z; ++z)
    for (int y = 0; y < od.y; ++y) {
      const float* src = &v.data[v.index(r.lo[0], r.lo[1] + y, r.lo[2] + z)];
      std::copy(src, src + od.x, &out.data[out.index(0, y, z)]);
    }
  return out;
}

Mask crop(const Mask& m, const BoxRegion& r) {
  check_region(m.dims, r);
  Dims3 od{r.hi[0] - r.lo[0], r.hi[1] - r.lo[1], r.hi[2] - r.lo[2]};
  Mask out = Mask::zeros(od);
  for (int z = 0; z < od.z; ++z)
    for (int y = 0; y < od.y; ++y) {
      const std::uint8_t* src = &m.bits[m.index(r.lo[0], r.lo[1] + y, r.lo[2] + z)];
      std::copy(src, src + od.x, &out.bits[out.index(0, y, z)]);
    }
  return out;
}

void export_slice(const Volume& v, Axis axis, int index, const std::string& path) {
  const int a = int(axis);
  require(index >= 0 && index < v.dims[a], kModule, "slice index out of range");

  // Slice plane axes: x -> (y,z), y -> (x,z), z -> (x,y); first axis fastest.
  int ua = a == 0 ? 1 : 0;
  int va = a == 2 ? 1 : 2;
  const int w = v.dims[ua];
  const int h = v.dims[va];

  std::vector<float> plane(std::size_t(w) * h);
  int c[3];
  c[a] = index;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      c[ua] = i;
      c[va] = j;
      plane[std::size_t(j) * w + i] = v.at(c[0], c[1], c[2]);
    }

  std::vector<std::uint8_t> bytes(plane.size());
  if (v.kind == ElemKind::u8) {
    for (std::size_t i = 0; i < plane.size(); ++i)
      bytes[i] = std::uint8_t(std::clamp(std::lround(plane[i]), 0L, 255L));
  } else {
    auto [mn, mx] = std::minmax_element(plane.begin(), plane.end());
    const double lo = *mn, hi = *mx;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      double b = hi > lo ? std::floor((plane[i] - lo) * 255.0 / (hi - lo)) : 0.0;
      bytes[i] = std::uint8_t(std::clamp(b, 0.0, 255.0));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), kModule, "cannot write '" + path + "'");
  char head[64];
  int len = std::snprintf(head, sizeof(head), "P5\n%d %d\n255\n", w, h);
  out.write(head, len);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  require(out.good(), kModule, "write failed for '" + path + "'");
}

}  // namespace fissura
