#pragma once

#include <filesystem>
#include <vector>

#include "hazefuse/geo.hpp"

namespace hazefuse {

/// Inputs for one solar-position evaluation. Times are UTC hours.
struct SolarContext {
  GeoPoint location;
  int doy = 1;           // day of year, 1..366
  double tod_utc = 0.0;  // hours in [0, 24)
};

/// Solar declination in radians from the Spencer Fourier series on the day
/// angle. |delta| <= 23.46 deg (the series peaks a few millidegrees past the
/// nominal 23.45 obliquity). Throws DomainError outside doy 1..366.
double solar_declination(int doy);

/// Equation of time in minutes (apparent minus mean solar time), Spencer
/// series. Throws DomainError outside doy 1..366.
double equation_of_time_minutes(int doy);

/// Solar zenith angle in degrees, clamped to [0, 180]. Values above 90 mean
/// the sun is below the horizon. True solar time is
/// UTC + lon/15 + EoT/60 hours; refraction is ignored.
double solar_zenith_angle(const SolarContext& ctx);

/// Per-city zenith-angle lookup grid over (day of year, UTC time of day).
/// Immutable after construction; safe for concurrent reads.
struct SzaTable {
  GeoPoint city;
  std::vector<int> doy_axis;     // strictly ascending, within 1..366
  std::vector<double> tod_axis;  // strictly ascending, within [0, 24)
  std::vector<double> sza;       // row-major [doy][tod], degrees

  double at(std::size_t i, std::size_t j) const { return sza[i * tod_axis.size() + j]; }
};

/// Samples solar_zenith_angle on a full-year grid: doy 1,1+step,..<=366 and
/// tod 0,step,..<24. Each axis needs at least two nodes.
SzaTable build_sza_table(const GeoPoint& city, int doy_step, double tod_step);

/// Bilinear interpolation over the table. Exact at grid nodes. With `wrap`
/// (the default) both axes are treated as cyclic -- day of year with period
/// 366 when the axis starts at 1, time of day with period 24 when the axis
/// starts at 0. Throws OutOfRange when the query is outside a non-wrapping
/// axis.
double lookup_sza(const SzaTable& table, double doy, double tod, bool wrap = true);

/// CSV layout: `# sza_table lat=<v> lon=<v>`, then the ToD axis row, then
/// one row per DoY node: `doy,sza_1,...,sza_n` with 4 decimals.
void save_sza_table(const SzaTable& table, const std::filesystem::path& path);
SzaTable load_sza_table(const std::filesystem::path& path);

}  // namespace hazefuse
