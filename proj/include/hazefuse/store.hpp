#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hazefuse/observation.hpp"

namespace hazefuse {

/// In-memory observation repository with line-delimited persistence.
///
/// File format, one record per line:
///   id|source|phenomenon|value|lat|lon|iso8601_utc|quality_flag
/// lat/lon with 6 decimals, value with shortest round-trip precision.
///
/// Concurrency contract: any number of concurrent readers, writes serialized
/// by the caller (single writer). The store does no internal locking.
class ObservationStore {
 public:
  /// Inserts after validating invariants. An empty id gets a generated
  /// `<prefix>-<counter>` id derived from the source kind. Returns the
  /// stored id. Throws DuplicateId or InvariantViolation.
  std::string insert(Observation obs);

  const Observation* find(const std::string& id) const;

  /// Inclusive bbox and time-range filter, optional phenomenon filter,
  /// sorted by time then id. Throws MalformedQuery on a degenerate bbox or
  /// reversed time range.
  std::vector<Observation> query(const GeoRect& bbox, TimeStamp from, TimeStamp to,
                                 std::optional<PhenomenonKind> phenomenon = std::nullopt) const;

  const std::vector<Observation>& all() const { return observations_; }
  std::size_t size() const { return observations_.size(); }

  void save(const std::filesystem::path& path) const;
  static ObservationStore load(const std::filesystem::path& path);

  /// Loads `path` if it exists, otherwise returns an empty store.
  static ObservationStore load_or_empty(const std::filesystem::path& path);

 private:
  std::string next_id(SourceKind kind);

  std::vector<Observation> observations_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<int, int> counters_;
};

std::string format_observation_line(const Observation& obs);
Observation parse_observation_line(const std::string& line, std::size_t line_number);

}  // namespace hazefuse
