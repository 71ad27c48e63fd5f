#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tempcycle {

/// 8-bit interleaved RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* at(int x, int y) { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* at(int x, int y) const { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
};

/// Decodes a PNG; grayscale/palette/16-bit inputs are expanded to 8-bit RGB, alpha is dropped.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace tempcycle
