#pragma once

#include <array>
#include <string>

#include "hazefuse/geo.hpp"
#include "hazefuse/timeutil.hpp"

namespace hazefuse {

/// Where a measurement came from. Every observation carries exactly one.
enum class SourceKind {
  WebService,
  WebSite,
  SocialImage,
  AppImage,
  WebcamFrame,
  SensorDevice,
  FilterPhoto,
};

/// What was measured. Units are fixed per variant: PM in ug/m3, AOD
/// dimensionless, AirQualityClass an ordinal index.
enum class PhenomenonKind {
  PM10,
  PM2_5,
  AOD,
  AirQualityClass,
};

/// Coarse ordered air-quality index.
enum class AirQualityClass { Low = 0, Medium = 1, High = 2, VeryHigh = 3 };

enum class QualityFlag { Ok, Clamped, Suspect };

const char* to_string(SourceKind kind);
const char* to_string(PhenomenonKind kind);
const char* to_string(AirQualityClass cls);
const char* to_string(QualityFlag flag);

SourceKind parse_source_kind(const std::string& text);
PhenomenonKind parse_phenomenon_kind(const std::string& text);
QualityFlag parse_quality_flag(const std::string& text);

/// One timestamped, geolocated measurement with provenance. For the
/// AirQualityClass phenomenon, `value` holds the class ordinal.
struct Observation {
  std::string id;
  SourceKind source = SourceKind::WebService;
  PhenomenonKind phenomenon = PhenomenonKind::PM10;
  double value = 0.0;
  GeoPoint location;
  TimeStamp time;
  QualityFlag quality = QualityFlag::Ok;

  /// Throws InvariantViolation on out-of-range coordinates or a negative
  /// PM/AOD value.
  void check() const;
};

bool operator==(const Observation& a, const Observation& b);

/// Maps a measured value to a class using three strictly increasing
/// thresholds. Values exactly at a threshold round up to the higher class.
/// Throws UnsupportedPhenomenon for AirQualityClass input and DomainError
/// for non-increasing thresholds.
AirQualityClass classify_aq(double value, PhenomenonKind phenomenon,
                            const std::array<double, 3>& thresholds);

}  // namespace hazefuse
