#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "hazefuse/image.hpp"

namespace hazefuse {

/// Per-cell color statistics over a g x g grid: mean R, mean G, mean B,
/// R/G ratio of the cell means, and mean brightness, cells in row-major
/// order (5 g^2 values). Remainder pixels go to the last row/column of
/// cells.
struct ColorFeatures {
  int grid = 0;
  std::vector<double> values;
};

ColorFeatures extract_color_features(const RasterImage& img, int grid);

/// Logistic regression over color features. Weights act on raw feature
/// values; any training-time normalization is folded into them.
struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  bool trained = false;

  double predict(const std::vector<double>& features) const;
};

/// Full-batch gradient descent: learning rate 0.1, 500 epochs, zero
/// initialization, features standardized internally. Deterministic.
/// `loss_curve`, when given, receives the per-epoch training loss.
/// Throws DegenerateData when only one label is present.
LogisticModel train_sky_classifier(const std::vector<std::pair<ColorFeatures, bool>>& samples,
                                   std::vector<double>* loss_curve = nullptr);

/// Probability that the image contains a usable sky region; 0.5 is the
/// boolean decision threshold. Throws UntrainedModel / LengthMismatch.
double classify_usable_sky(const LogisticModel& model, const RasterImage& img);

/// Plain text: bias on the first line, then one weight per line.
void save_model(const LogisticModel& model, const std::filesystem::path& path);
LogisticModel load_model(const std::filesystem::path& path);

struct SkyParams {
  double top_band_fraction = 0.10;  // seed band height as a fraction of rows
  double color_tolerance = 30.0;    // Euclidean RGB distance to the seed mean
  double min_brightness = 50.0;     // seed brightness floor, (R+G+B)/3
  double min_fraction = 0.15;       // usable-sky area threshold
};

/// Region growing seeded from the top band. Seeds are top-band pixels with
/// B >= R, B >= 0.9 G and brightness above the floor; growth is
/// 4-connected while the color distance to the seed mean stays within
/// tolerance. The seed mean is fixed once, so the result is independent of
/// traversal order. May return an empty mask.
SkyMask detect_sky(const RasterImage& img, const SkyParams& params = {});

struct SkyStats {
  double sky_fraction = 0.0;
  double mean_rg = 0.0;  // mean over masked pixels of R / max(G, 1)
  bool usable = false;
  bool suspect = false;  // more than 1% of masked pixels had G == 0
};

/// Throws DimensionMismatch when mask and image disagree.
SkyStats sky_stats(const RasterImage& img, const SkyMask& mask, double min_fraction);

}  // namespace hazefuse
