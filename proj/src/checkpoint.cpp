#include "fissura/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>

namespace fissura {

namespace {

constexpr const char* kModule = "unet";
constexpr const char* kMagic = "UNET3DCKPT1";

void write_f32(std::ostream& os, const float* p, std::size_t n) {
  std::vector<unsigned char> buf(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(p[i]);
    buf[4 * i] = u & 0xff;
    buf[4 * i + 1] = (u >> 8) & 0xff;
    buf[4 * i + 2] = (u >> 16) & 0xff;
    buf[4 * i + 3] = (u >> 24) & 0xff;
  }
  os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

void read_f32(std::istream& is, float* p, std::size_t n, const std::string& what) {
  std::vector<unsigned char> buf(n * 4);
  is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  require(std::size_t(is.gcount()) == buf.size(), kModule,
          "unexpected end of checkpoint while reading " + what);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = std::uint32_t(buf[4 * i]) | (std::uint32_t(buf[4 * i + 1]) << 8) |
                            (std::uint32_t(buf[4 * i + 2]) << 16) |
                            (std::uint32_t(buf[4 * i + 3]) << 24);
    p[i] = std::bit_cast<float>(u);
  }
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is, const std::string& what) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(is.gcount() == 8, kModule, "unexpected end of checkpoint while reading " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

struct Header {
  UnetConfig cfg;
  int epoch = 0;
  bool has_adam = false;
};

std::string next_line(std::istream& is) {
  std::string line;
  require(bool(std::getline(is, line)), kModule, "truncated checkpoint header");
  return line;
}

Header parse_header(std::istream& is) {
  require(next_line(is) == kMagic, kModule, "not a checkpoint file (bad magic)");
  Header h;
  int v = 0;
  require(std::sscanf(next_line(is).c_str(), "base_filters %d", &h.cfg.base_filters) == 1 &&
              h.cfg.base_filters >= 1,
          kModule, "bad base_filters line");
  require(std::sscanf(next_line(is).c_str(), "levels %d", &h.cfg.levels) == 1 && h.cfg.levels >= 1,
          kModule, "bad levels line");
  require(std::sscanf(next_line(is).c_str(), "epoch %d", &h.epoch) == 1 && h.epoch >= 0, kModule,
          "bad epoch line");
  require(std::sscanf(next_line(is).c_str(), "has_adam %d", &v) == 1 && (v == 0 || v == 1),
          kModule, "bad has_adam line");
  h.has_adam = v == 1;
  require(next_line(is) == "end", kModule, "missing header end marker");
  return h;
}

TrainState load_body(std::istream& is, const Header& h, Unet3Df& net) {
  for (const TensorRef& r : net.payload_layout()) {
    float* dst = r.is_running ? &net.running[r.offset] : &net.theta[r.offset];
    read_f32(is, dst, r.size, r.name);
  }
  TrainState st;
  st.epoch = h.epoch;
  st.has_adam = h.has_adam;
  if (h.has_adam) {
    st.opt.init(net.theta.size());
    read_f32(is, st.opt.m.data(), st.opt.m.size(), "adam first moments");
    read_f32(is, st.opt.v.data(), st.opt.v.size(), "adam second moments");
    st.opt.t = read_u64(is, "adam step count");
  }
  st.history.resize(h.epoch);
  read_f32(is, st.history.data(), st.history.size(), "loss history");
  require(is.peek() == std::istream::traits_type::eof(), kModule,
          "trailing bytes after checkpoint payload");
  return st;
}

}  // namespace

void save_checkpoint(const std::string& path, const Unet3Df& net, const TrainState& st) {
  require(!net.theta.empty(), kModule, "cannot save an unbuilt network");
  require(int(st.history.size()) == st.epoch, kModule, "history length must equal epoch");
  if (st.has_adam)
    require(st.opt.m.size() == net.theta.size() && st.opt.v.size() == net.theta.size(), kModule,
            "adam state does not match parameter count");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), kModule, "cannot open for writing: " + path);

  char head[128];
  std::snprintf(head, sizeof head, "%s\nbase_filters %d\nlevels %d\nepoch %d\nhas_adam %d\nend\n",
                kMagic, net.cfg.base_filters, net.cfg.levels, st.epoch, st.has_adam ? 1 : 0);
  os << head;
  for (const TensorRef& r : net.payload_layout()) {
    const float* src = r.is_running ? &net.running[r.offset] : &net.theta[r.offset];
    write_f32(os, src, r.size);
  }
  if (st.has_adam) {
    write_f32(os, st.opt.m.data(), st.opt.m.size());
    write_f32(os, st.opt.v.data(), st.opt.v.size());
    write_u64(os, st.opt.t);
  }
  write_f32(os, st.history.data(), st.history.size());
  os.flush();
  require(os.good(), kModule, "write failed: " + path);
}

TrainState load_checkpoint_into(const std::string& path, Unet3Df& net) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), kModule, "cannot open: " + path);
  const Header h = parse_header(is);
  require(h.cfg.base_filters == net.cfg.base_filters, kModule,
          "checkpoint base_filters does not match network");
  require(h.cfg.levels == net.cfg.levels, kModule, "checkpoint levels does not match network");
  return load_body(is, h, net);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), kModule, "cannot open: " + path);
  const Header h = parse_header(is);
  LoadedCheckpoint lc;
  lc.net.build(h.cfg, 0);
  lc.state = load_body(is, h, lc.net);
  return lc;
}

}  // namespace fissura
