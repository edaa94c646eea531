#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hazefuse/image.hpp"
#include "hazefuse/observation.hpp"
#include "hazefuse/sky.hpp"
#include "hazefuse/solar.hpp"

namespace hazefuse {

/// Lookup relating sky R/G ratio, solar zenith angle and aerosol optical
/// depth. Generated offline by a radiative transfer model (or the synthetic
/// generator below) and immutable after load.
///
/// Invariants enforced at load: both axes strictly ascending, AOD axis
/// non-negative, every R/G entry positive, and each SZA row strictly
/// monotone in AOD with one direction shared by all rows.
struct RgTable {
  std::vector<double> sza_axis;  // degrees
  std::vector<double> aod_axis;  // dimensionless
  std::vector<double> rg;        // row-major [sza][aod]
  std::pair<double, double> wavelengths_nm{550.0, 700.0};
  std::string provenance;
  bool increasing = true;  // R/G direction along the AOD axis

  double at(std::size_t i, std::size_t j) const { return rg[i * aod_axis.size() + j]; }
};

/// CSV layout: `# rg_table wl=<a>,<b> provenance=<s>`, then the AOD axis
/// row, then one row per SZA node: `sza,rg_1,...,rg_n`.
RgTable load_rg_table(const std::filesystem::path& path);
void save_rg_table(const RgTable& table, const std::filesystem::path& path);

/// Bilinear interpolation of R/G; exact at nodes. Throws OutOfRange.
double eval_rg(const RgTable& table, double sza, double aod);

struct AodEstimate {
  double aod = 0.0;
  QualityFlag flag = QualityFlag::Ok;
  // provenance
  std::string image_id;
  double sza_used = 0.0;
  double rg_used = 0.0;
};

/// Inverts the R/G profile at the given SZA: the two bracketing SZA rows
/// are blended first, then the monotone piecewise-linear profile is
/// inverted. R/G outside the profile range clamps to the nearest AOD axis
/// endpoint with flag Clamped. Throws OutOfRange only for SZA outside the
/// axis.
AodEstimate invert_aod(const RgTable& table, double sza, double rg);

/// Affine stand-in for the radiative transfer output:
/// rg = (b0 + b1 sza) + (s0 + s1 sza) * aod, strictly increasing in AOD.
struct SyntheticRgParams {
  double b0 = 0.55;
  double b1 = 0.002;  // per degree
  double s0 = 0.30;
  double s1 = 0.001;  // per degree
};

/// Throws DomainError when the slope is not positive somewhere on the axis.
RgTable generate_synthetic_table(std::vector<double> sza_axis, std::vector<double> aod_axis,
                                 const SyntheticRgParams& params = {});

struct AodPipelineParams {
  SkyParams sky{};
  double sza_gate_deg = 85.0;        // reject near-horizon sun
  double city_halfwidth_deg = 1.0;   // area of interest around the table's city
  std::string image_id;
};

/// Outcome of the image pipeline. `estimate` is empty when the image is
/// unusable (no sky, sky fraction too small, or sun below the gate);
/// `reason` then says why.
struct AodPipelineResult {
  std::optional<AodEstimate> estimate;
  SkyStats stats;
  double sza = 0.0;
  std::string reason;

  bool usable() const { return estimate.has_value(); }
};

/// detect_sky -> sky_stats -> lookup_sza -> invert_aod. Throws OutOfArea
/// when the image location is outside the city window and TableRangeError
/// when the looked-up SZA is below the gate but outside the RG table.
AodPipelineResult estimate_aod_from_image(const RasterImage& img, const GeoPoint& geo,
                                          const TimeStamp& time, const SzaTable& sza_table,
                                          const RgTable& rg_table,
                                          const AodPipelineParams& params = {});

}  // namespace hazefuse
