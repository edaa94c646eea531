#pragma once

// Deterministic synthetic inputs for the image pipelines.

#include <array>
#include <vector>

#include "hazefuse/image.hpp"

namespace testsupport {

struct SkyFixture {
  hazefuse::RasterImage image;
  double achieved_rg;  // exact R/G of the painted sky after 8-bit rounding
};

// 64x48 photo: uniform sky over the top 60% of rows painted as close to
// `target_rg` as 8-bit channels allow (green channel searched for the best
// quantization), warm dark ground below. Valid targets roughly [0.5, 1.8].
SkyFixture render_sky_fixture(double target_rg);

// Light ground (intensity 220) with dark disks (intensity 30). A pixel is
// inside a disk when (x-cx)^2 + (y-cy)^2 <= r^2. Disks are {cx, cy, r}.
hazefuse::GrayImage render_filter_scene(int width, int height,
                                        const std::vector<std::array<double, 3>>& disks);

}  // namespace testsupport
