#include "support/fixtures.hpp"

#include <cmath>
#include <cstdlib>

namespace testsupport {

SkyFixture render_sky_fixture(double target_rg) {
  // Pick the green level whose rounded red channel best reproduces the
  // ratio; keeps the quantization error around 1e-4.
  int best_g = 120, best_r = 120;
  double best_err = 1e9;
  for (int g = 120; g <= 255; ++g) {
    const int r = static_cast<int>(std::floor(target_rg * g + 0.5));
    if (r < 1 || r > 235) continue;
    const double err = std::fabs(static_cast<double>(r) / g - target_rg);
    if (err < best_err) {
      best_err = err;
      best_g = g;
      best_r = r;
    }
  }
  const int sky_r = best_r;
  const int sky_g = best_g;
  const int sky_b = std::min(255, std::max(sky_r, sky_g) + 20);

  SkyFixture fx;
  fx.achieved_rg = static_cast<double>(sky_r) / sky_g;
  hazefuse::RasterImage& img = fx.image;
  img.width = 64;
  img.height = 48;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const int horizon = 29;  // rows [0, horizon) are sky
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::size_t at = (static_cast<std::size_t>(y) * img.width + x) * 3;
      if (y < horizon) {
        img.pixels[at] = static_cast<std::uint8_t>(sky_r);
        img.pixels[at + 1] = static_cast<std::uint8_t>(sky_g);
        img.pixels[at + 2] = static_cast<std::uint8_t>(sky_b);
      } else {
        img.pixels[at] = 120;
        img.pixels[at + 1] = 80;
        img.pixels[at + 2] = 50;
      }
    }
  return fx;
}

hazefuse::GrayImage render_filter_scene(int width, int height,
                                        const std::vector<std::array<double, 3>>& disks) {
  hazefuse::GrayImage img;
  img.width = width;
  img.height = height;
  img.values.assign(static_cast<std::size_t>(width) * height, 220);
  for (const auto& d : disks) {
    const double cx = d[0], cy = d[1], r = d[2];
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r * r)
          img.values[static_cast<std::size_t>(y) * width + x] = 30;
      }
  }
  return img;
}

}  // namespace testsupport
