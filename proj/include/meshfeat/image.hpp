#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace meshfeat {

/// Interleaved RGB float image, top row first.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(size_t(w) * h * 3, fill) {}

  size_t pixel_count() const { return size_t(width) * height; }
  float& at(int x, int y, int c) { return data[(size_t(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return data[(size_t(y) * width + x) * 3 + c]; }
};

/// One byte per pixel, nonzero = valid.
using Mask = std::vector<uint8_t>;

/// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on write.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

/// Little-endian colour PFM ("PF", scale -1). Rows are stored bottom to top on disk.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const Image& img, const std::filesystem::path& path);

/// Dispatches on extension (.png / .pfm).
Image read_image(const std::filesystem::path& path);
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace meshfeat
