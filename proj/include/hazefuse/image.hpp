#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hazefuse {

/// 8-bit RGB raster, row-major, origin at the top-left corner.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

  bool valid() const {
    return width >= 1 && height >= 1 &&
           pixels.size() == static_cast<std::size_t>(3) * width * height;
  }

  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  std::uint8_t* at(int x, int y) {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

/// Binary per-pixel flags with the dimensions of some source image.
struct SkyMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> flags;  // 0 or 1

  bool get(int x, int y) const { return flags[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) {
    flags[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
  double fraction() const;
};

/// 8-bit single-channel raster.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t get(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Luma conversion 0.299 R + 0.587 G + 0.114 B, rounded half up. Fixed
/// coefficients so results are bit-reproducible.
GrayImage to_gray(const RasterImage& img);

/// Binary PPM (P6), maxval 255. Comments in the header are accepted.
RasterImage load_ppm(const std::filesystem::path& path);
void save_ppm(const RasterImage& img, const std::filesystem::path& path);

/// Binary PBM (P4); set mask pixels are written black.
void save_pbm(const SkyMask& mask, const std::filesystem::path& path);

}  // namespace hazefuse
