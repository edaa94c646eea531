#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hazefuse/geo.hpp"
#include "hazefuse/observation.hpp"

namespace hazefuse {

/// Regular lat/lon grid. Row 0 is the southernmost row; cell (i, j) covers
/// [origin.lat + i*dlat, +dlat) x [origin.lon + j*dlon, +dlon).
struct GridSpec {
  GeoPoint origin;  // SW corner of the extent
  double dlat = 0.0;
  double dlon = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  void check() const;
  GeoPoint cell_center(std::size_t i, std::size_t j) const;
  double lat_max() const { return origin.lat + dlat * static_cast<double>(rows); }
  double lon_max() const { return origin.lon + dlon * static_cast<double>(cols); }
};

struct BaseMap {
  GridSpec grid;
  std::vector<double> values;  // row-major [row][col]

  double at(std::size_t i, std::size_t j) const { return values[i * grid.cols + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * grid.cols + j]; }
  void check() const;
};

/// Bilinear interpolation over cell centers, exact at centers; between the
/// extent edge and the outermost centers the value is held constant.
/// Throws OutOfExtent for points outside the grid extent.
double sample_basemap(const BaseMap& map, const GeoPoint& p);

struct ResidualPoint {
  GeoPoint location;
  double value;
};

struct ResidualSet {
  std::vector<ResidualPoint> points;
  std::vector<std::string> warnings;  // one per dropped observation
};

/// residual = observation - basemap at its location. Observations outside
/// the extent are dropped with a warning. Throws MixedPhenomena when the
/// input mixes phenomena.
ResidualSet compute_residuals(const std::vector<Observation>& obs, const BaseMap& map);

struct VariogramBin {
  double lag = 0.0;  // mean pair distance in the bin, degrees
  double gamma = 0.0;
  long pairs = 0;
};

/// Classic semivariogram estimate: every unordered pair within max_lag
/// contributes 0.5*(v_i - v_j)^2 to the bin of its distance (equirectangular,
/// degrees). Bin width is max_lag/n_bins; a pair exactly at max_lag lands in
/// the last bin; empty bins are omitted.
std::vector<VariogramBin> empirical_semivariogram(const std::vector<ResidualPoint>& points,
                                                  std::size_t n_bins, double max_lag);

enum class VariogramKind { Exponential, Spherical };

/// gamma(0) = 0 exactly; the nugget applies for any h > 0, so the model
/// approaches nugget from above as h -> 0.
struct VariogramModel {
  VariogramKind kind = VariogramKind::Exponential;
  double nugget = 0.0;
  double sill = 0.0;   // >= nugget
  double range = 1.0;  // > 0, degrees

  double operator()(double h) const;
  void check() const;
};

/// Weighted least squares (weights = pair counts): coarse 10x10x10 grid
/// search over data-driven bounds, then deterministic coordinate descent.
/// Throws InsufficientBins with fewer than 3 bins.
VariogramModel fit_variogram(const std::vector<VariogramBin>& bins,
                             VariogramKind kind = VariogramKind::Exponential);

/// Ordinary kriging with one shared factorization of the (n+1) system
/// matrix; only the right-hand side changes per prediction point.
/// Duplicate locations are averaged on construction.
class KrigingSystem {
 public:
  /// Throws TooFewPoints (empty input) or SingularSystem (with a condition
  /// number diagnostic).
  KrigingSystem(const std::vector<ResidualPoint>& points, const VariogramModel& model);
  ~KrigingSystem();
  KrigingSystem(KrigingSystem&&) noexcept;
  KrigingSystem& operator=(KrigingSystem&&) noexcept;

  struct Prediction {
    double value = 0.0;
    double variance = 0.0;
    double weight_sum = 0.0;  // 1 up to solver round-off
  };

  Prediction predict(const GeoPoint& p) const;

  std::size_t size() const;  // distinct locations

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct KrigedField {
  std::vector<double> values;
  std::vector<double> variance;
};

KrigedField ordinary_kriging(const std::vector<ResidualPoint>& points, const VariogramModel& model,
                             const GridSpec& grid);

struct FusedMap {
  GridSpec grid;
  std::vector<double> values;
  std::vector<double> variance;  // >= 0 after the -1e-9 numerical floor

  double at(std::size_t i, std::size_t j) const { return values[i * grid.cols + j]; }
};

/// fused = basemap + kriged residuals. Without a model one is fitted from
/// the residuals (12 bins, max lag = half the largest pair distance).
/// Degenerate inputs shortcut analytically: no usable observations leaves
/// the base map untouched (variance = sill of the given model, else 0);
/// identical residuals shift the whole map by that constant with variance 0
/// when no model was given.
FusedMap residual_kriging_fuse(const std::vector<Observation>& obs, const BaseMap& basemap,
                               const std::optional<VariogramModel>& model = std::nullopt,
                               std::vector<std::string>* warnings = nullptr);

/// Map file: `# grid lat0=<> lon0=<> dlat=<> dlon=<> rows=<> cols=<>`,
/// then one line of space-separated values per row. Values round-trip
/// bit-exactly.
BaseMap load_basemap(const std::filesystem::path& path);
void save_map(const GridSpec& grid, const std::vector<double>& values,
              const std::filesystem::path& path);

/// GeoJSON FeatureCollection of cell-center points with `value` and
/// `variance` properties, row-major order, coordinates as [lon, lat].
void export_geojson(const FusedMap& map, const std::filesystem::path& path);

/// CSV `lat,lon,value,variance`, row-major order.
void export_csv(const FusedMap& map, const std::filesystem::path& path);

}  // namespace hazefuse
