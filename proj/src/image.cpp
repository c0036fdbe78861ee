#include "meshfeat/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "meshfeat/binary_io.hpp"
#include "meshfeat/errors.hpp"

namespace meshfeat {

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  Image img(int(png.width), int(png.height));
  for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0f;
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  std::vector<uint8_t> buf(img.data.size());
  for (size_t i = 0; i < buf.size(); ++i) {
    const float c = std::clamp(img.data[i], 0.0f, 1.0f);
    buf[i] = static_cast<uint8_t>(std::lround(c * 255.0f));
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();  // single whitespace byte before the raster
  if (!in || magic != "PF") throw DataError(path.string() + ": not a colour PFM");
  if (w <= 0 || h <= 0) throw DataError(path.string() + ": bad PFM dimensions");
  if (scale >= 0) throw DataError(path.string() + ": big-endian PFM not supported");
  Image img(w, h);
  std::vector<float> row(size_t(w) * 3);
  for (int y = h - 1; y >= 0; --y) {
    io::read_array<float>(in, row);
    std::copy(row.begin(), row.end(), img.data.begin() + size_t(y) * w * 3);
  }
  return img;
}

void write_pfm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y) {
    io::write_array<float>(out, std::span<const float>(img.data.data() + size_t(y) * img.width * 3,
                                                       size_t(img.width) * 3));
  }
  if (!out) throw DataError("cannot write " + path.string());
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pfm") return read_pfm(path);
  throw DataError("unsupported image format: " + path.string());
}

void write_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return write_png(img, path);
  if (ext == ".pfm") return write_pfm(img, path);
  throw DataError("unsupported image format: " + path.string());
}

}  // namespace meshfeat
