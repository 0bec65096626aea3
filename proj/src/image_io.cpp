#include "pddpm/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace pddpm {

ImageFormat image_format_from_string(const std::string& s) {
  if (s == "pgm") return ImageFormat::pgm;
  if (s == "ppm") return ImageFormat::ppm;
  if (s == "raw") return ImageFormat::raw;
  throw ParamError("unknown image format: " + s);
}

std::string to_string(ImageFormat f) {
  switch (f) {
    case ImageFormat::pgm: return "pgm";
    case ImageFormat::ppm: return "ppm";
    default: return "raw";
  }
}

std::string extension(ImageFormat f) { return "." + to_string(f); }

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

std::uint8_t quantize(double v) {
  const double mapped = std::round(255.0 * (v + 1.0) / 2.0);
  return static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
}

void put_u32_le(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(std::ifstream& in, const std::string& path) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw IoError("truncated file: " + path);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

int read_pnm_token(std::ifstream& in, const std::string& path) {
  // skips whitespace and '#' comments between header fields
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw IoError("truncated header: " + path);
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

void write_pnm(const std::string& path, const Planes& image) {
  if (image.size() != 1 && image.size() != 3)
    throw ShapeError("pnm output needs 1 (P5) or 3 (P6) channels");
  const Eigen::Index h = image[0].rows(), w = image[0].cols();
  auto out = open_out(path);
  out << (image.size() == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      for (const Plane& p : image) out.put(static_cast<char>(quantize(p(r, c))));
  if (!out) throw IoError("write failed: " + path);
}

Planes read_pnm(const std::string& path) {
  auto in = open_in(path);
  char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) throw IoError("not a P5/P6 file: " + path);
  const std::size_t channels = m1 == '5' ? 1 : 3;
  const int w = read_pnm_token(in, path);
  const int h = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (w < 1 || h < 1 || maxval != 255) throw IoError("unsupported pnm header: " + path);
  Planes image(channels, Plane(h, w));
  std::vector<char> row(static_cast<std::size_t>(w) * channels);
  for (int r = 0; r < h; ++r) {
    in.read(row.data(), static_cast<std::streamsize>(row.size()));
    if (!in) throw IoError("truncated file: " + path);
    for (int c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < channels; ++ch)
        image[ch](r, c) =
            2.0 * static_cast<std::uint8_t>(row[static_cast<std::size_t>(c) * channels + ch]) /
                255.0 - 1.0;
  }
  return image;
}

void write_raw(const std::string& path, const Planes& image) {
  if (image.empty()) throw ShapeError("raw output needs at least one channel");
  const Eigen::Index h = image[0].rows(), w = image[0].cols();
  auto out = open_out(path);
  out.write("PDG1", 4);
  put_u32_le(out, static_cast<std::uint32_t>(h));
  put_u32_le(out, static_cast<std::uint32_t>(w));
  put_u32_le(out, static_cast<std::uint32_t>(image.size()));
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      for (const Plane& p : image) {
        const float v = static_cast<float>(p(r, c));
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32_le(out, bits);
      }
  if (!out) throw IoError("write failed: " + path);
}

Planes read_raw(const std::string& path) {
  auto in = open_in(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PDG1", 4) != 0) throw IoError("not a PDG1 file: " + path);
  const std::uint32_t h = get_u32_le(in, path);
  const std::uint32_t w = get_u32_le(in, path);
  const std::uint32_t channels = get_u32_le(in, path);
  if (h < 1 || w < 1 || channels < 1) throw IoError("bad PDG1 header: " + path);
  Planes image(channels, Plane(h, w));
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c)
      for (std::uint32_t ch = 0; ch < channels; ++ch) {
        const std::uint32_t bits = get_u32_le(in, path);
        float v;
        std::memcpy(&v, &bits, 4);
        image[ch](r, c) = v;
      }
  return image;
}

void write_image(const std::string& path, const Planes& image, ImageFormat format) {
  if (format == ImageFormat::raw) {
    write_raw(path, image);
    return;
  }
  if (format == ImageFormat::pgm && image.size() != 1)
    throw ShapeError("pgm needs a single channel");
  if (format == ImageFormat::ppm && image.size() != 3)
    throw ShapeError("ppm needs three channels");
  write_pnm(path, image);
}

Planes read_image(const std::string& path) {
  auto in = open_in(path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.close();
  if (std::memcmp(magic, "PDG1", 4) == 0) return read_raw(path);
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return read_pnm(path);
  throw IoError("unrecognized image file: " + path);
}

}  // namespace pddpm
