#include "hazefuse/sky.hpp"

#include <cmath>
#include <deque>
#include <fstream>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

ColorFeatures extract_color_features(const RasterImage& img, int grid) {
  if (!img.valid()) raise(ErrorCode::DomainError, "invalid image");
  if (grid < 1 || grid > std::min(img.width, img.height)) {
    raise(ErrorCode::DomainError, "feature grid " + std::to_string(grid) +
                                      " does not fit a " + std::to_string(img.width) + "x" +
                                      std::to_string(img.height) + " image");
  }
  ColorFeatures out;
  out.grid = grid;
  out.values.reserve(static_cast<std::size_t>(5) * grid * grid);
  const int cell_w = img.width / grid;
  const int cell_h = img.height / grid;
  for (int cy = 0; cy < grid; ++cy) {
    const int y0 = cy * cell_h;
    const int y1 = (cy == grid - 1) ? img.height : (cy + 1) * cell_h;
    for (int cx = 0; cx < grid; ++cx) {
      const int x0 = cx * cell_w;
      const int x1 = (cx == grid - 1) ? img.width : (cx + 1) * cell_w;
      double sum_r = 0, sum_g = 0, sum_b = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const std::uint8_t* p = img.at(x, y);
          sum_r += p[0];
          sum_g += p[1];
          sum_b += p[2];
        }
      }
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      const double mean_r = sum_r / n;
      const double mean_g = sum_g / n;
      const double mean_b = sum_b / n;
      out.values.push_back(mean_r);
      out.values.push_back(mean_g);
      out.values.push_back(mean_b);
      out.values.push_back(mean_r / std::max(mean_g, 1.0));
      out.values.push_back((mean_r + mean_g + mean_b) / 3.0);
    }
  }
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double LogisticModel::predict(const std::vector<double>& features) const {
  if (!trained) raise(ErrorCode::UntrainedModel, "model has not been trained");
  if (features.size() != weights.size()) {
    raise(ErrorCode::LengthMismatch, "feature length " + std::to_string(features.size()) +
                                         " != weight length " + std::to_string(weights.size()));
  }
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
  return sigmoid(z);
}

LogisticModel train_sky_classifier(const std::vector<std::pair<ColorFeatures, bool>>& samples,
                                   std::vector<double>* loss_curve) {
  if (samples.empty()) raise(ErrorCode::DegenerateData, "no training samples");
  const std::size_t dim = samples.front().first.values.size();
  bool any_pos = false, any_neg = false;
  for (const auto& [features, label] : samples) {
    if (features.values.size() != dim) {
      raise(ErrorCode::LengthMismatch, "training vectors have mixed lengths");
    }
    (label ? any_pos : any_neg) = true;
  }
  if (!any_pos || !any_neg) {
    raise(ErrorCode::DegenerateData, "training set contains a single class");
  }

  const std::size_t n = samples.size();

  // Standardize each dimension and shrink by sqrt(dim); keeps the fixed
  // learning rate well inside the stable region for full-batch descent.
  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (const auto& [features, label] : samples) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += features.values[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& [features, label] : samples) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = features.values[j] - mean[j];
      scale[j] += d * d;
    }
  }
  const double dim_shrink = std::sqrt(static_cast<double>(dim));
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;  // constant feature, standardized value is 0 anyway
    s *= dim_shrink;
  }

  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      x[i][j] = (samples[i].first.values[j] - mean[j]) / scale[j];
    }
    y[i] = samples[i].second ? 1.0 : 0.0;
  }

  constexpr double kLearningRate = 0.1;
  constexpr int kEpochs = 500;
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> grad(dim);
  if (loss_curve) loss_curve->clear();

  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t j = 0; j < dim; ++j) z += w[j] * x[i][j];
      loss += softplus(z) - y[i] * z;  // cross-entropy
      const double err = sigmoid(z) - y[i];
      for (std::size_t j = 0; j < dim; ++j) grad[j] += err * x[i][j];
      grad_b += err;
    }
    if (loss_curve) loss_curve->push_back(loss / static_cast<double>(n));
    for (std::size_t j = 0; j < dim; ++j) {
      w[j] -= kLearningRate * grad[j] / static_cast<double>(n);
    }
    b -= kLearningRate * grad_b / static_cast<double>(n);
  }

  // Fold the standardization back so prediction is a plain dot product on
  // raw features.
  LogisticModel model;
  model.weights.resize(dim);
  model.bias = b;
  for (std::size_t j = 0; j < dim; ++j) {
    model.weights[j] = w[j] / scale[j];
    model.bias -= w[j] * mean[j] / scale[j];
  }
  model.trained = true;
  return model;
}

double classify_usable_sky(const LogisticModel& model, const RasterImage& img) {
  if (!model.trained) raise(ErrorCode::UntrainedModel, "model has not been trained");
  const double cells = static_cast<double>(model.weights.size()) / 5.0;
  const int grid = static_cast<int>(std::lround(std::sqrt(cells)));
  if (grid < 1 || static_cast<std::size_t>(5) * grid * grid != model.weights.size()) {
    raise(ErrorCode::LengthMismatch, "weight vector length is not 5*g^2");
  }
  return model.predict(extract_color_features(img, grid).values);
}

void save_model(const LogisticModel& model, const std::filesystem::path& path) {
  if (!model.trained) raise(ErrorCode::UntrainedModel, "refusing to save an untrained model");
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << format_double(model.bias) << '\n';
  for (double w : model.weights) out << format_double(w) << '\n';
  if (!out) raise(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

LogisticModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  LogisticModel model;
  std::string line;
  bool have_bias = false;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    double v;
    if (!parse_double(line, v)) {
      raise(ErrorCode::MalformedRecord,
            "line " + std::to_string(line_number) + ": bad number '" + line + "'");
    }
    if (!have_bias) {
      model.bias = v;
      have_bias = true;
    } else {
      model.weights.push_back(v);
    }
  }
  if (!have_bias || model.weights.empty()) {
    raise(ErrorCode::MalformedRecord, "model file '" + path.string() + "' is incomplete");
  }
  model.trained = true;
  return model;
}

SkyMask detect_sky(const RasterImage& img, const SkyParams& params) {
  if (!img.valid()) raise(ErrorCode::DomainError, "invalid image");
  SkyMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.flags.assign(static_cast<std::size_t>(img.width) * img.height, 0);

  const int band_rows =
      std::max(1, static_cast<int>(std::floor(img.height * params.top_band_fraction + 1e-9)));

  const auto is_seed = [&](int x, int y) {
    const std::uint8_t* p = img.at(x, y);
    const double r = p[0], g = p[1], b = p[2];
    return b >= r && b >= 0.9 * g && (r + g + b) / 3.0 >= params.min_brightness;
  };

  std::deque<std::pair<int, int>> frontier;
  double mean_r = 0, mean_g = 0, mean_b = 0;
  std::size_t n_seeds = 0;
  for (int y = 0; y < band_rows; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!is_seed(x, y)) continue;
      const std::uint8_t* p = img.at(x, y);
      mean_r += p[0];
      mean_g += p[1];
      mean_b += p[2];
      ++n_seeds;
      mask.set(x, y, true);
      frontier.emplace_back(x, y);
    }
  }
  if (n_seeds == 0) return mask;
  mean_r /= static_cast<double>(n_seeds);
  mean_g /= static_cast<double>(n_seeds);
  mean_b /= static_cast<double>(n_seeds);

  const double tol2 = params.color_tolerance * params.color_tolerance;
  const auto close_to_mean = [&](int x, int y) {
    const std::uint8_t* p = img.at(x, y);
    const double dr = p[0] - mean_r, dg = p[1] - mean_g, db = p[2] - mean_b;
    return dr * dr + dg * dg + db * db <= tol2;
  };

  static constexpr int dx[4] = {1, -1, 0, 0};
  static constexpr int dy[4] = {0, 0, 1, -1};
  while (!frontier.empty()) {
    const auto [x, y] = frontier.front();
    frontier.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k];
      const int ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
      if (mask.get(nx, ny)) continue;
      if (!close_to_mean(nx, ny)) continue;
      mask.set(nx, ny, true);
      frontier.emplace_back(nx, ny);
    }
  }
  return mask;
}

SkyStats sky_stats(const RasterImage& img, const SkyMask& mask, double min_fraction) {
  if (img.width != mask.width || img.height != mask.height) {
    raise(ErrorCode::DimensionMismatch, "mask dimensions do not match image");
  }
  SkyStats stats;
  std::size_t n = 0;
  std::size_t zero_green = 0;
  double sum_rg = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.get(x, y)) continue;
      const std::uint8_t* p = img.at(x, y);
      if (p[1] == 0) ++zero_green;
      sum_rg += static_cast<double>(p[0]) / std::max<int>(p[1], 1);
      ++n;
    }
  }
  stats.sky_fraction = mask.fraction();
  if (n > 0) {
    stats.mean_rg = sum_rg / static_cast<double>(n);
    stats.suspect = zero_green > 0.01 * static_cast<double>(n);
    stats.usable = stats.sky_fraction >= min_fraction;
  }
  return stats;
}

}  // namespace hazefuse
