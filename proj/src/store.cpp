#include "hazefuse/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

namespace {

const char* id_prefix(SourceKind kind) {
  switch (kind) {
    case SourceKind::WebService: return "ws";
    case SourceKind::WebSite: return "web";
    case SourceKind::SocialImage: return "soc";
    case SourceKind::AppImage: return "app";
    case SourceKind::WebcamFrame: return "cam";
    case SourceKind::SensorDevice: return "dev";
    case SourceKind::FilterPhoto: return "flt";
  }
  return "obs";
}

}  // namespace

std::string ObservationStore::next_id(SourceKind kind) {
  int& counter = counters_[static_cast<int>(kind)];
  while (true) {
    ++counter;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%04d", id_prefix(kind), counter);
    if (index_.find(buf) == index_.end()) return buf;
  }
}

std::string ObservationStore::insert(Observation obs) {
  if (obs.id.empty()) obs.id = next_id(obs.source);
  obs.check();
  if (index_.count(obs.id)) {
    raise(ErrorCode::DuplicateId, "observation id '" + obs.id + "' already stored");
  }
  index_.emplace(obs.id, observations_.size());
  observations_.push_back(std::move(obs));
  return observations_.back().id;
}

const Observation* ObservationStore::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &observations_[it->second];
}

std::vector<Observation> ObservationStore::query(const GeoRect& bbox, TimeStamp from, TimeStamp to,
                                                 std::optional<PhenomenonKind> phenomenon) const {
  if (!bbox.well_formed()) raise(ErrorCode::MalformedQuery, "bbox min exceeds max");
  if (from > to) raise(ErrorCode::MalformedQuery, "time range start exceeds end");
  std::vector<Observation> out;
  for (const Observation& obs : observations_) {
    if (!bbox.contains(obs.location)) continue;
    if (obs.time < from || obs.time > to) continue;
    if (phenomenon && obs.phenomenon != *phenomenon) continue;
    out.push_back(obs);
  }
  std::sort(out.begin(), out.end(), [](const Observation& a, const Observation& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.id < b.id;
  });
  return out;
}

std::string format_observation_line(const Observation& obs) {
  std::string line;
  line += obs.id;
  line += '|';
  line += to_string(obs.source);
  line += '|';
  line += to_string(obs.phenomenon);
  line += '|';
  line += format_double(obs.value);
  line += '|';
  line += format_fixed(obs.location.lat, 6);
  line += '|';
  line += format_fixed(obs.location.lon, 6);
  line += '|';
  line += obs.time.to_iso8601();
  line += '|';
  line += to_string(obs.quality);
  return line;
}

Observation parse_observation_line(const std::string& line, std::size_t line_number) {
  const auto fail = [&](const std::string& why) -> void {
    raise(ErrorCode::MalformedRecord, "line " + std::to_string(line_number) + ": " + why);
  };
  const std::vector<std::string> fields = split(line, '|');
  if (fields.size() != 8) fail("expected 8 fields, got " + std::to_string(fields.size()));
  Observation obs;
  obs.id = fields[0];
  if (obs.id.empty()) fail("empty id");
  try {
    obs.source = parse_source_kind(fields[1]);
    obs.phenomenon = parse_phenomenon_kind(fields[2]);
    obs.time = TimeStamp::parse_iso8601(fields[6]);
    obs.quality = parse_quality_flag(fields[7]);
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!parse_double(fields[3], obs.value)) fail("bad value '" + fields[3] + "'");
  if (!parse_double(fields[4], obs.location.lat)) fail("bad lat '" + fields[4] + "'");
  if (!parse_double(fields[5], obs.location.lon)) fail("bad lon '" + fields[5] + "'");
  return obs;
}

void ObservationStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  for (const Observation& obs : observations_) {
    out << format_observation_line(obs) << '\n';
  }
  if (!out) raise(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

ObservationStore ObservationStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  ObservationStore store;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    Observation obs = parse_observation_line(line, line_number);
    try {
      store.insert(std::move(obs));
    } catch (const Error& e) {
      raise(ErrorCode::MalformedRecord, "line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return store;
}

ObservationStore ObservationStore::load_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return load(path);
}

}  // namespace hazefuse
