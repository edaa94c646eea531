#include "hazefuse/observation.hpp"

#include <cmath>

#include "hazefuse/error.hpp"

namespace hazefuse {

const char* to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::WebService: return "WebService";
    case SourceKind::WebSite: return "WebSite";
    case SourceKind::SocialImage: return "SocialImage";
    case SourceKind::AppImage: return "AppImage";
    case SourceKind::WebcamFrame: return "WebcamFrame";
    case SourceKind::SensorDevice: return "SensorDevice";
    case SourceKind::FilterPhoto: return "FilterPhoto";
  }
  return "?";
}

const char* to_string(PhenomenonKind kind) {
  switch (kind) {
    case PhenomenonKind::PM10: return "PM10";
    case PhenomenonKind::PM2_5: return "PM2_5";
    case PhenomenonKind::AOD: return "AOD";
    case PhenomenonKind::AirQualityClass: return "AirQualityClass";
  }
  return "?";
}

const char* to_string(AirQualityClass cls) {
  switch (cls) {
    case AirQualityClass::Low: return "Low";
    case AirQualityClass::Medium: return "Medium";
    case AirQualityClass::High: return "High";
    case AirQualityClass::VeryHigh: return "VeryHigh";
  }
  return "?";
}

const char* to_string(QualityFlag flag) {
  switch (flag) {
    case QualityFlag::Ok: return "Ok";
    case QualityFlag::Clamped: return "Clamped";
    case QualityFlag::Suspect: return "Suspect";
  }
  return "?";
}

SourceKind parse_source_kind(const std::string& text) {
  for (SourceKind k : {SourceKind::WebService, SourceKind::WebSite, SourceKind::SocialImage,
                       SourceKind::AppImage, SourceKind::WebcamFrame, SourceKind::SensorDevice,
                       SourceKind::FilterPhoto}) {
    if (text == to_string(k)) return k;
  }
  raise(ErrorCode::MalformedRecord, "unknown source kind '" + text + "'");
}

PhenomenonKind parse_phenomenon_kind(const std::string& text) {
  for (PhenomenonKind k : {PhenomenonKind::PM10, PhenomenonKind::PM2_5, PhenomenonKind::AOD,
                           PhenomenonKind::AirQualityClass}) {
    if (text == to_string(k)) return k;
  }
  raise(ErrorCode::MalformedRecord, "unknown phenomenon '" + text + "'");
}

QualityFlag parse_quality_flag(const std::string& text) {
  for (QualityFlag f : {QualityFlag::Ok, QualityFlag::Clamped, QualityFlag::Suspect}) {
    if (text == to_string(f)) return f;
  }
  raise(ErrorCode::MalformedRecord, "unknown quality flag '" + text + "'");
}

void Observation::check() const {
  location.check();
  if (!std::isfinite(value)) {
    raise(ErrorCode::InvariantViolation, "non-finite value in observation '" + id + "'");
  }
  if (phenomenon != PhenomenonKind::AirQualityClass && value < 0.0) {
    raise(ErrorCode::InvariantViolation, "negative " + std::string(to_string(phenomenon)) +
                                             " value in observation '" + id + "'");
  }
}

bool operator==(const Observation& a, const Observation& b) {
  return a.id == b.id && a.source == b.source && a.phenomenon == b.phenomenon &&
         a.value == b.value && a.location.lat == b.location.lat &&
         a.location.lon == b.location.lon && a.time == b.time && a.quality == b.quality;
}

AirQualityClass classify_aq(double value, PhenomenonKind phenomenon,
                            const std::array<double, 3>& thresholds) {
  if (phenomenon == PhenomenonKind::AirQualityClass) {
    raise(ErrorCode::UnsupportedPhenomenon, "cannot classify an already-classified value");
  }
  if (!(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2])) {
    raise(ErrorCode::DomainError, "thresholds must be strictly increasing");
  }
  if (value >= thresholds[2]) return AirQualityClass::VeryHigh;
  if (value >= thresholds[1]) return AirQualityClass::High;
  if (value >= thresholds[0]) return AirQualityClass::Medium;
  return AirQualityClass::Low;
}

}  // namespace hazefuse
