#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesr/eval.hpp"

namespace sesr {

/// Decoded 8-bit image, interleaved; channels is 1 (gray) or 3 (RGB).
struct PngImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads a PNG file. Palette, low-bit-depth gray, 16-bit, and alpha inputs are
/// normalized to 8-bit gray or RGB.
PngImage read_png(const std::string& path);

/// Writes an 8-bit gray or RGB PNG atomically (temp file + rename).
void write_png(const std::string& path, const PngImage& image);

/// Clamps and rounds a luma plane into an 8-bit grayscale PNG.
void write_png_gray(const std::string& path, const ImagePlane& plane);

/// Luma plane from a decoded image: gray samples pass through, RGB goes through
/// the BT.601 conversion.
ImagePlane png_to_y(const PngImage& image);

}  // namespace sesr
