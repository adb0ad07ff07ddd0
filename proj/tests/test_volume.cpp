#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fissura/error.hpp"
#include "fissura/volume.hpp"

using namespace fissura;

namespace {

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  REQUIRE(out.good());
}

}  // namespace

TEST_CASE("elem kind helpers") {
  CHECK(std::string(elem_kind_name(ElemKind::u8)) == "u8");
  CHECK(std::string(elem_kind_name(ElemKind::u16)) == "u16");
  CHECK(std::string(elem_kind_name(ElemKind::f32)) == "f32");
  CHECK(elem_kind_from_name("u8") == ElemKind::u8);
  CHECK(elem_kind_from_name("u16") == ElemKind::u16);
  CHECK(elem_kind_from_name("f32") == ElemKind::f32);
  CHECK_THROWS_AS(elem_kind_from_name("i32"), Error);
  CHECK(elem_kind_size(ElemKind::u8) == 1);
  CHECK(elem_kind_size(ElemKind::u16) == 2);
  CHECK(elem_kind_size(ElemKind::f32) == 4);
  CHECK(elem_kind_max(ElemKind::u8) == 255.0);
  CHECK(elem_kind_max(ElemKind::u16) == 65535.0);
  CHECK(elem_kind_max(ElemKind::f32) == 1.0);
}

TEST_CASE("save_volume writes the documented byte layout") {
  Volume v = Volume::zeros({2, 2, 2}, ElemKind::u8, 5.5);
  for (int i = 0; i < 8; ++i) v.data[std::size_t(i)] = float(i);
  save_volume(v, "tv_layout.vvol");

  const std::string head = "VVOL1\ndims 2 2 2\ndtype u8\nvoxsize_um 5.5\nend\n";
  std::vector<std::uint8_t> want(head.begin(), head.end());
  for (int i = 0; i < 8; ++i) want.push_back(std::uint8_t(i));
  CHECK(slurp("tv_layout.vvol") == want);
}

TEST_CASE("u16 and f32 payloads are little-endian") {
  Volume v = Volume::zeros({1, 1, 1}, ElemKind::u16);
  v.data[0] = 513.0f;  // 0x0201
  save_volume(v, "tv_le16.vvol");
  auto b = slurp("tv_le16.vvol");
  REQUIRE(b.size() >= 2);
  CHECK(b[b.size() - 2] == 0x01);
  CHECK(b[b.size() - 1] == 0x02);

  v.kind = ElemKind::f32;
  v.data[0] = 1.0f;  // 0x3f800000
  save_volume(v, "tv_le32.vvol");
  b = slurp("tv_le32.vvol");
  REQUIRE(b.size() >= 4);
  CHECK(b[b.size() - 4] == 0x00);
  CHECK(b[b.size() - 3] == 0x00);
  CHECK(b[b.size() - 2] == 0x80);
  CHECK(b[b.size() - 1] == 0x3f);
}

TEST_CASE("volume round trips are exact and re-saves are byte-identical") {
  std::mt19937_64 rng(7);
  for (ElemKind kind : {ElemKind::u8, ElemKind::u16, ElemKind::f32}) {
    Volume v = Volume::zeros({5, 3, 4}, kind, 2.25);
    for (float& x : v.data) {
      if (kind == ElemKind::u8)
        x = float(rng() % 256);
      else if (kind == ElemKind::u16)
        x = float(rng() % 65536);
      else
        x = float(std::uniform_real_distribution<double>(-10.0, 10.0)(rng));
    }
    save_volume(v, "tv_rt.vvol");
    Volume w = load_volume("tv_rt.vvol");
    CHECK(w.dims == v.dims);
    CHECK(w.kind == v.kind);
    CHECK(w.voxel_size_um == v.voxel_size_um);
    CHECK(w.data == v.data);

    save_volume(w, "tv_rt2.vvol");
    CHECK(slurp("tv_rt.vvol") == slurp("tv_rt2.vvol"));
  }
}

TEST_CASE("load_volume rejects malformed files") {
  Volume v = Volume::zeros({2, 2, 2}, ElemKind::u8);
  save_volume(v, "tv_bad.vvol");
  auto good = slurp("tv_bad.vvol");

  auto bad = good;
  bad[0] = 'X';
  spit("tv_bad.vvol", bad);
  CHECK_THROWS_WITH_AS(load_volume("tv_bad.vvol"), doctest::Contains("bad magic"), Error);

  bad = good;
  bad.pop_back();
  spit("tv_bad.vvol", bad);
  CHECK_THROWS_WITH_AS(load_volume("tv_bad.vvol"), doctest::Contains("truncated"), Error);

  CHECK_THROWS_WITH_AS(load_volume("tv_missing.vvol"), doctest::Contains("cannot open"), Error);
}

TEST_CASE("mask io round trips and rejects non-binary data") {
  Mask m = Mask::zeros({4, 3, 2});
  m.at(0, 0, 0) = 1;
  m.at(3, 2, 1) = 1;
  m.at(1, 2, 0) = 1;
  save_mask(m, "tv_mask.vvol", 3.0);

  Volume as_vol = load_volume("tv_mask.vvol");
  CHECK(as_vol.kind == ElemKind::u8);
  CHECK(as_vol.voxel_size_um == 3.0);

  Mask r = load_mask("tv_mask.vvol");
  CHECK(r.dims == m.dims);
  CHECK(r.bits == m.bits);
  CHECK(r.count() == 3);

  as_vol.data[5] = 7.0f;
  save_volume(as_vol, "tv_mask_bad.vvol");
  CHECK_THROWS_WITH_AS(load_mask("tv_mask_bad.vvol"), doctest::Contains("0/1"), Error);
}

TEST_CASE("crop matches a hand loop") {
  Volume v = Volume::zeros({6, 5, 4}, ElemKind::f32);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) v.at(x, y, z) = float(100 * z + 10 * y + x);

  BoxRegion r{{1, 2, 0}, {4, 5, 3}};
  Volume c = crop(v, r);
  CHECK(c.dims == Dims3{3, 3, 3});
  CHECK(c.kind == v.kind);
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(c.at(x, y, z) == v.at(x + 1, y + 2, z + 0));

  Mask m = Mask::zeros({6, 5, 4});
  m.at(2, 3, 1) = 1;
  Mask cm = crop(m, r);
  CHECK(cm.dims == Dims3{3, 3, 3});
  CHECK(cm.count() == 1);
  CHECK(cm.at(1, 1, 1) == 1);

  CHECK_THROWS_WITH_AS(crop(v, BoxRegion{{0, 0, 0}, {7, 5, 4}}), doctest::Contains("region"),
                       Error);
  CHECK_THROWS_AS(crop(v, BoxRegion{{2, 0, 0}, {2, 5, 4}}), Error);
}

TEST_CASE("export_slice passes u8 through and min-max scales wider kinds") {
  // u8: exact bytes.
  Volume v = Volume::zeros({4, 4, 2}, ElemKind::u8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) v.at(x, y, 1) = float(10 * y + x);
  export_slice(v, Axis::z, 1, "tv_slice.pgm");
  auto b = slurp("tv_slice.pgm");
  const std::string head = "P5\n4 4\n255\n";
  REQUIRE(b.size() == head.size() + 16);
  CHECK(std::string(b.begin(), b.begin() + std::ptrdiff_t(head.size())) == head);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(b[head.size() + std::size_t(4 * y + x)] == 10 * y + x);

  // u16 ramp 0..8: floor((v-lo)*255/(hi-lo)).
  Volume w = Volume::zeros({3, 3, 1}, ElemKind::u16);
  for (int i = 0; i < 9; ++i) w.data[std::size_t(i)] = float(i);
  export_slice(w, Axis::z, 0, "tv_slice16.pgm");
  b = slurp("tv_slice16.pgm");
  const std::string head2 = "P5\n3 3\n255\n";
  REQUIRE(b.size() == head2.size() + 9);
  const int want[9] = {0, 31, 63, 95, 127, 159, 191, 223, 255};
  for (int i = 0; i < 9; ++i) CHECK(int(b[head2.size() + std::size_t(i)]) == want[i]);

  // Constant non-u8 slice maps to 0.
  Volume c = Volume::zeros({3, 3, 1}, ElemKind::f32);
  for (float& x : c.data) x = 0.7f;
  export_slice(c, Axis::z, 0, "tv_slicec.pgm");
  b = slurp("tv_slicec.pgm");
  for (std::size_t i = head2.size(); i < b.size(); ++i) CHECK(b[i] == 0);

  CHECK_THROWS_WITH_AS(export_slice(v, Axis::z, 2, "tv_x.pgm"), doctest::Contains("index"),
                       Error);
}

TEST_CASE("export_slice picks the right plane per axis") {
  Volume v = Volume::zeros({2, 3, 4}, ElemKind::u8);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 2; ++x) v.at(x, y, z) = float(z);

  // Axis x -> plane (y,z), dims 3 x 4; row j has value j.
  export_slice(v, Axis::x, 0, "tv_ax.pgm");
  auto b = slurp("tv_ax.pgm");
  const std::string head = "P5\n3 4\n255\n";
  REQUIRE(b.size() == head.size() + 12);
  CHECK(std::string(b.begin(), b.begin() + std::ptrdiff_t(head.size())) == head);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 3; ++i) CHECK(int(b[head.size() + std::size_t(3 * j + i)]) == j);
}

TEST_CASE("volume constructors validate") {
  CHECK_THROWS_AS(Volume::zeros({0, 1, 1}, ElemKind::u8), Error);
  CHECK_THROWS_AS(Volume::zeros({1, 1, 1}, ElemKind::u8, 0.0), Error);
  CHECK_THROWS_AS(Mask::zeros({1, -1, 1}), Error);
}
