#pragma once

#include "pddpm/types.hpp"

#include <string>

namespace pddpm {

enum class ImageFormat { pgm, ppm, raw };
ImageFormat image_format_from_string(const std::string& s);
std::string to_string(ImageFormat f);
std::string extension(ImageFormat f);

/// 8-bit P5 (one channel) / P6 (three channels); values mapped from [-1, 1]
/// by round(255*(v+1)/2) and clamped to [0, 255].
void write_pnm(const std::string& path, const Planes& image);

/// Inverse of write_pnm's quantization: byte b maps to 2*b/255 - 1.
Planes read_pnm(const std::string& path);

/// Lossless interchange: 16-byte header (magic "PDG1", u32 LE height, width,
/// channels) then H*W*C little-endian f32 in row-major, channel-last order.
void write_raw(const std::string& path, const Planes& image);
Planes read_raw(const std::string& path);

void write_image(const std::string& path, const Planes& image, ImageFormat format);

/// Dispatches on the file's magic bytes (P5/P6/PDG1).
Planes read_image(const std::string& path);

}  // namespace pddpm
