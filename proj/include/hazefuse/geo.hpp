#pragma once

#include <cmath>

#include "hazefuse/error.hpp"

namespace hazefuse {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// WGS-style geographic coordinate, degrees north / east.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }

  void check() const {
    if (!valid()) {
      raise(ErrorCode::InvariantViolation,
            "coordinates out of range: lat=" + std::to_string(lat) + " lon=" + std::to_string(lon));
    }
  }
};

/// Axis-aligned lat/lon rectangle, inclusive on all edges.
struct GeoRect {
  double lat_min = 0.0;
  double lon_min = 0.0;
  double lat_max = 0.0;
  double lon_max = 0.0;

  bool well_formed() const { return lat_min <= lat_max && lon_min <= lon_max; }

  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }

  GeoPoint centroid() const { return {(lat_min + lat_max) / 2.0, (lon_min + lon_max) / 2.0}; }
};

/// Equirectangular distance in degrees: dlat and dlon with dlon scaled by the
/// cosine of the pair's mean latitude. Adequate at city scale; used
/// consistently by the semivariogram and the kriging solver.
inline double local_distance_deg(const GeoPoint& a, const GeoPoint& b) {
  const double mean_lat = deg2rad((a.lat + b.lat) / 2.0);
  const double dlat = a.lat - b.lat;
  const double dlon = (a.lon - b.lon) * std::cos(mean_lat);
  return std::sqrt(dlat * dlat + dlon * dlon);
}

}  // namespace hazefuse
