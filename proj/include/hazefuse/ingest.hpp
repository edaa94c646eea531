#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/regex.hpp>

#include "hazefuse/geo.hpp"
#include "hazefuse/observation.hpp"
#include "hazefuse/timeutil.hpp"

namespace hazefuse {

enum class PayloadFormat { Json, Xml };

/// A registered external source: a station (point) or an area source
/// (rectangle). Observations it produces are stamped with the point, or
/// the rectangle's centroid.
struct SourceDescriptor {
  std::string id;
  SourceKind kind = SourceKind::WebService;
  std::variant<GeoPoint, GeoRect> location;
  PayloadFormat format = PayloadFormat::Json;

  GeoPoint location_point() const;
};

/// Regex rule for semi-structured pages. The pattern must contain a
/// `(?<value>...)` group; an optional `(?<unit>...)` group overrides the
/// configured scale when it matches a known unit.
struct ExtractionRule {
  std::string name;
  PhenomenonKind phenomenon = PhenomenonKind::PM10;
  double scale = 1.0;  // multiplier to canonical ug/m3
  std::string pattern;
};

struct CompiledRule {
  ExtractionRule rule;
  boost::regex re;
};

/// Throws RuleCompileError for unparseable patterns or a missing value
/// group. Extraction itself never raises compile errors.
std::vector<CompiledRule> compile_rules(const std::vector<ExtractionRule>& rules);

/// One rule per line: `name|phenomenon|scale|pattern`. The pattern is the
/// rest of the line after the third bar, so patterns may contain `|`.
std::vector<ExtractionRule> load_rules(const std::filesystem::path& path);

struct PayloadField {
  std::string path;  // dotted key path; integer segments index arrays
  PhenomenonKind phenomenon = PhenomenonKind::PM10;
  double scale = 1.0;
};

struct PayloadMapping {
  std::vector<PayloadField> fields;
  std::string time_path;  // optional; empty means stamp with ingestion time
};

/// Mapping file: `path|phenomenon|scale` per line, plus an optional
/// `@time|path` line naming the timestamp field.
PayloadMapping load_mapping(const std::filesystem::path& path);

struct IngestResult {
  std::vector<Observation> observations;
  std::vector<std::string> warnings;
};

/// Pulls mapped key paths out of a JSON or XML payload (per descriptor
/// format). Missing paths and unusable values are skipped with a warning.
/// Records without a payload timestamp get the ingestion time and flag
/// Suspect. Throws MalformedDocument when the text does not parse at all.
IngestResult parse_structured_payload(const std::string& text, const PayloadMapping& mapping,
                                      const SourceDescriptor& descriptor,
                                      const TimeStamp& ingestion_time);

/// Applies every rule to the raw page text (no DOM). Matches are emitted
/// in document order per rule and deduplicated by (rule, offset, value).
/// The page timestamp is the first parseable ISO 8601 string anywhere in
/// the text; absent that, observations get the ingestion time and flag
/// Suspect.
IngestResult extract_from_html(const std::string& html, const std::vector<CompiledRule>& rules,
                               const SourceDescriptor& descriptor, const TimeStamp& ingestion_time);

struct ImageMeta {
  std::string id;
  std::string path;
  std::optional<GeoPoint> location;
  TimeStamp time;
  SourceKind source = SourceKind::SocialImage;
  std::vector<std::string> tags;
};

/// Sidecar line per image: `image_id|path|lat|lon|iso8601|tags,comma,separated`
/// with `-` for missing lat/lon. Social images without coordinates must
/// carry at least one tag. Throws CatalogUnreadable when the file cannot
/// be opened and MalformedRecord (with line number) for bad lines.
std::vector<ImageMeta> load_catalog(const std::filesystem::path& path,
                                    SourceKind kind = SourceKind::SocialImage);

/// Geotagged entries inside the window and time range, inclusive on all
/// bounds; entries without coordinates never match.
std::vector<ImageMeta> query_geotagged_images(const std::vector<ImageMeta>& catalog,
                                              const GeoRect& window, const TimeStamp& from,
                                              const TimeStamp& to);

/// Case-insensitive tag match, union over tags, deduplicated by image id,
/// restricted to the time range. Requires at least one tag.
std::vector<ImageMeta> query_tagged_images(const std::vector<ImageMeta>& catalog,
                                           const std::vector<std::string>& tags,
                                           const TimeStamp& from, const TimeStamp& to);

/// Greedy frame selection: the first frame always, then the earliest
/// frame at least 1/rate hours after the previously selected one.
/// Timestamps must be ascending; rate is frames per hour.
std::vector<std::size_t> sample_frames(const std::vector<TimeStamp>& frames, double rate);

}  // namespace hazefuse
