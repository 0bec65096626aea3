#include "pddpm/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace pddpm {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated checkpoint: " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ofstream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(std::ifstream& in, const std::string& path) {
  const std::uint32_t bits = get_u32(in, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ConvScoreNetF& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("PDSN", 4);
  put_u32(out, kFormatVersion);
  const NetConfig& cfg = net.config();
  put_u32(out, static_cast<std::uint32_t>(cfg.depth));
  put_u32(out, static_cast<std::uint32_t>(cfg.width));
  put_u32(out, static_cast<std::uint32_t>(cfg.degree));
  put_u32(out, static_cast<std::uint32_t>(cfg.channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.steps));
  net.params().for_each([&](const ConvScoreNetF::Mat& m) {
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) put_f32(out, m(r, c));
  });
  if (!out) throw IoError("write failed: " + path);
}

ConvScoreNetF load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PDSN", 4) != 0) throw IoError("not a PDSN checkpoint: " + path);
  const std::uint32_t version = get_u32(in, path);
  if (version != kFormatVersion) throw IoError("unsupported checkpoint version: " + path);

  NetConfig cfg;
  cfg.depth = static_cast<int>(get_u32(in, path));
  cfg.width = static_cast<int>(get_u32(in, path));
  cfg.degree = static_cast<int>(get_u32(in, path));
  cfg.channels = static_cast<int>(get_u32(in, path));
  cfg.steps = static_cast<int>(get_u32(in, path));
  cfg.validate();

  Rng rng(0);
  ConvScoreNetF net(cfg, rng);
  net.params().for_each([&](ConvScoreNetF::Mat& m) {
    const std::uint32_t rank = get_u32(in, path);
    if (rank != 2) throw IoError("unexpected tensor rank in " + path);
    const std::uint32_t rows = get_u32(in, path);
    const std::uint32_t cols = get_u32(in, path);
    if (rows != static_cast<std::uint32_t>(m.rows()) ||
        cols != static_cast<std::uint32_t>(m.cols()))
      throw IoError("tensor shape mismatch in " + path);
    for (std::uint32_t c = 0; c < cols; ++c)
      for (std::uint32_t r = 0; r < rows; ++r) m(r, c) = get_f32(in, path);
  });
  return net;
}

}  // namespace pddpm
