#include "hazefuse/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

GeoPoint SourceDescriptor::location_point() const {
  if (const GeoPoint* p = std::get_if<GeoPoint>(&location)) return *p;
  return std::get<GeoRect>(location).centroid();
}

std::vector<CompiledRule> compile_rules(const std::vector<ExtractionRule>& rules) {
  std::vector<CompiledRule> out;
  out.reserve(rules.size());
  for (const ExtractionRule& r : rules) {
    if (r.pattern.find("(?<value>") == std::string::npos)
      raise(ErrorCode::RuleCompileError, "rule '" + r.name + "' lacks a (?<value>...) group");
    try {
      out.push_back({r, boost::regex(r.pattern)});
    } catch (const boost::regex_error& e) {
      raise(ErrorCode::RuleCompileError, "rule '" + r.name + "': " + e.what());
    }
  }
  return out;
}

std::vector<ExtractionRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open rules file " + path.string());
  std::vector<ExtractionRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    // name|phenomenon|scale|pattern, pattern may itself contain bars
    const std::size_t a = t.find('|');
    const std::size_t b = a == std::string::npos ? a : t.find('|', a + 1);
    const std::size_t c = b == std::string::npos ? b : t.find('|', b + 1);
    if (c == std::string::npos)
      raise(ErrorCode::MalformedRecord, "rules line " + std::to_string(line_no) + " needs 4 fields");
    ExtractionRule r;
    r.name = trim(t.substr(0, a));
    r.phenomenon = parse_phenomenon_kind(trim(t.substr(a + 1, b - a - 1)));
    if (!parse_double(trim(t.substr(b + 1, c - b - 1)), r.scale))
      raise(ErrorCode::MalformedRecord, "bad scale on rules line " + std::to_string(line_no));
    r.pattern = t.substr(c + 1);
    rules.push_back(std::move(r));
  }
  return rules;
}

PayloadMapping load_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open mapping file " + path.string());
  PayloadMapping m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> cells = split(t, '|');
    if (cells.size() == 2 && trim(cells[0]) == "@time") {
      m.time_path = trim(cells[1]);
      continue;
    }
    if (cells.size() != 3)
      raise(ErrorCode::MalformedRecord, "mapping line " + std::to_string(line_no) + " needs 3 fields");
    PayloadField f;
    f.path = trim(cells[0]);
    f.phenomenon = parse_phenomenon_kind(trim(cells[1]));
    if (!parse_double(trim(cells[2]), f.scale))
      raise(ErrorCode::MalformedRecord, "bad scale on mapping line " + std::to_string(line_no));
    m.fields.push_back(std::move(f));
  }
  return m;
}

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Walks a dotted path; integer segments index arrays. Null when absent.
const nlohmann::json* resolve_json(const nlohmann::json& root, const std::string& path) {
  const nlohmann::json* cur = &root;
  for (const std::string& seg : split(path, '.')) {
    if (cur->is_array() && all_digits(seg)) {
      const std::size_t idx = static_cast<std::size_t>(std::stoul(seg));
      if (idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(seg);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else {
      return nullptr;
    }
  }
  return cur;
}

bool json_to_number(const nlohmann::json& node, double& out) {
  if (node.is_number()) {
    out = node.get<double>();
    return true;
  }
  if (node.is_string()) return parse_double(trim(node.get<std::string>()), out);
  return false;
}

// Integer segments pick the n-th element child regardless of name.
const boost::property_tree::ptree* resolve_xml(const boost::property_tree::ptree& root,
                                               const std::string& path) {
  const boost::property_tree::ptree* cur = &root;
  for (const std::string& seg : split(path, '.')) {
    if (all_digits(seg)) {
      std::size_t idx = static_cast<std::size_t>(std::stoul(seg));
      const boost::property_tree::ptree* next = nullptr;
      for (const auto& child : *cur) {
        if (child.first == "<xmlattr>") continue;
        if (idx == 0) {
          next = &child.second;
          break;
        }
        --idx;
      }
      if (!next) return nullptr;
      cur = next;
    } else {
      auto it = cur->find(seg);
      if (it == cur->not_found()) return nullptr;
      cur = &it->second;
    }
  }
  return cur;
}

struct ResolvedDoc {
  PayloadFormat format;
  nlohmann::json json;
  boost::property_tree::ptree xml;

  // Returns the raw text at the path, or false when the path is absent.
  bool lookup(const std::string& path, std::string& out) const {
    if (format == PayloadFormat::Json) {
      const nlohmann::json* node = resolve_json(json, path);
      if (!node) return false;
      if (node->is_string())
        out = node->get<std::string>();
      else
        out = node->dump();
      return true;
    }
    const boost::property_tree::ptree* node = resolve_xml(xml, path);
    if (!node) return false;
    out = trim(node->get_value<std::string>());
    return true;
  }
};

ResolvedDoc parse_document(const std::string& text, PayloadFormat format) {
  ResolvedDoc doc;
  doc.format = format;
  if (format == PayloadFormat::Json) {
    doc.json = nlohmann::json::parse(text, nullptr, false);
    if (doc.json.is_discarded()) raise(ErrorCode::MalformedDocument, "payload is not valid JSON");
  } else {
    std::istringstream stream(text);
    try {
      boost::property_tree::read_xml(stream, doc.xml);
    } catch (const boost::property_tree::xml_parser_error& e) {
      raise(ErrorCode::MalformedDocument, std::string("payload is not valid XML: ") + e.what());
    }
  }
  return doc;
}

// ug/m3 spellings map to 1, mg/m3 to 1000. Lowercases ASCII only so the
// UTF-8 micro signs survive.
bool unit_factor(const std::string& raw, double& out) {
  const std::string u = to_lower(trim(raw));
  static const std::set<std::string> micro = {"µg/m³", "μg/m³", "µg/m3", "ug/m3", "ug/m³", "ug/m^3"};
  static const std::set<std::string> milli = {"mg/m³", "mg/m3", "mg/m^3"};
  if (micro.count(u)) {
    out = 1.0;
    return true;
  }
  if (milli.count(u)) {
    out = 1000.0;
    return true;
  }
  return false;
}

bool usable_value(PhenomenonKind phenomenon, double v) {
  if (!std::isfinite(v)) return false;
  if (phenomenon == PhenomenonKind::AirQualityClass) return v >= 0.0 && v <= 3.0;
  return v >= 0.0;
}

}  // namespace

IngestResult parse_structured_payload(const std::string& text, const PayloadMapping& mapping,
                                      const SourceDescriptor& descriptor,
                                      const TimeStamp& ingestion_time) {
  const ResolvedDoc doc = parse_document(text, descriptor.format);
  IngestResult result;

  TimeStamp stamp = ingestion_time;
  QualityFlag flag = QualityFlag::Suspect;
  if (!mapping.time_path.empty()) {
    std::string raw;
    if (doc.lookup(mapping.time_path, raw)) {
      try {
        stamp = TimeStamp::parse_iso8601(raw);
        flag = QualityFlag::Ok;
      } catch (const Error&) {
        result.warnings.push_back("unparseable timestamp '" + raw + "', using ingestion time");
      }
    } else {
      result.warnings.push_back("time path '" + mapping.time_path + "' not found");
    }
  }

  for (const PayloadField& field : mapping.fields) {
    std::string raw;
    if (!doc.lookup(field.path, raw)) {
      result.warnings.push_back("path '" + field.path + "' not found");
      continue;
    }
    double v = 0.0;
    bool ok;
    if (descriptor.format == PayloadFormat::Json) {
      const nlohmann::json* node = resolve_json(doc.json, field.path);
      ok = node && json_to_number(*node, v);
    } else {
      ok = parse_double(raw, v);
    }
    if (!ok) {
      result.warnings.push_back("value at '" + field.path + "' is not numeric: " + raw);
      continue;
    }
    v *= field.scale;
    if (!usable_value(field.phenomenon, v)) {
      result.warnings.push_back("value at '" + field.path + "' out of domain: " + format_double(v));
      continue;
    }
    Observation obs;
    obs.source = descriptor.kind;
    obs.phenomenon = field.phenomenon;
    obs.value = v;
    obs.location = descriptor.location_point();
    obs.time = stamp;
    obs.quality = flag;
    obs.check();
    result.observations.push_back(std::move(obs));
  }
  return result;
}

IngestResult extract_from_html(const std::string& html, const std::vector<CompiledRule>& rules,
                               const SourceDescriptor& descriptor, const TimeStamp& ingestion_time) {
  IngestResult result;

  // Page timestamp: first ISO 8601 string that actually parses.
  TimeStamp stamp = ingestion_time;
  QualityFlag flag = QualityFlag::Suspect;
  static const boost::regex iso_re(R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}Z?)");
  for (boost::sregex_iterator it(html.begin(), html.end(), iso_re), end; it != end; ++it) {
    try {
      stamp = TimeStamp::parse_iso8601(it->str());
      flag = QualityFlag::Ok;
      break;
    } catch (const Error&) {
      continue;
    }
  }

  std::set<std::tuple<std::size_t, std::ptrdiff_t, std::string>> seen;
  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    const CompiledRule& cr = rules[ri];
    for (boost::sregex_iterator it(html.begin(), html.end(), cr.re), end; it != end; ++it) {
      const boost::smatch& m = *it;
      const auto& value_group = m["value"];
      if (!value_group.matched) continue;
      const std::string raw = value_group.str();
      if (!seen.insert(std::make_tuple(ri, static_cast<std::ptrdiff_t>(m.position()), raw)).second)
        continue;

      double v = 0.0;
      if (!parse_double(raw, v)) {
        result.warnings.push_back("rule '" + cr.rule.name + "' matched non-numeric value: " + raw);
        continue;
      }
      double factor = cr.rule.scale;
      const auto& unit_group = m["unit"];
      if (unit_group.matched && !unit_factor(unit_group.str(), factor)) {
        factor = cr.rule.scale;
        result.warnings.push_back("rule '" + cr.rule.name + "' matched unknown unit: " +
                                  unit_group.str());
      }
      v *= factor;
      if (!usable_value(cr.rule.phenomenon, v)) {
        result.warnings.push_back("rule '" + cr.rule.name + "' value out of domain: " +
                                  format_double(v));
        continue;
      }
      Observation obs;
      obs.source = descriptor.kind;
      obs.phenomenon = cr.rule.phenomenon;
      obs.value = v;
      obs.location = descriptor.location_point();
      obs.time = stamp;
      obs.quality = flag;
      obs.check();
      result.observations.push_back(std::move(obs));
    }
  }
  return result;
}

std::vector<ImageMeta> load_catalog(const std::filesystem::path& path, SourceKind kind) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::CatalogUnreadable, "cannot open catalog " + path.string());

  std::vector<ImageMeta> catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> cells = split(t, '|');
    if (cells.size() != 6)
      raise(ErrorCode::MalformedRecord,
            "catalog line " + std::to_string(line_no) + " needs 6 fields, has " +
                std::to_string(cells.size()));

    ImageMeta meta;
    meta.id = trim(cells[0]);
    meta.path = trim(cells[1]);
    meta.source = kind;
    if (meta.id.empty())
      raise(ErrorCode::MalformedRecord, "catalog line " + std::to_string(line_no) + ": empty id");

    const std::string lat = trim(cells[2]);
    const std::string lon = trim(cells[3]);
    if (lat == "-" && lon == "-") {
      meta.location.reset();
    } else {
      GeoPoint p;
      if (!parse_double(lat, p.lat) || !parse_double(lon, p.lon))
        raise(ErrorCode::MalformedRecord,
              "catalog line " + std::to_string(line_no) + ": bad coordinates");
      if (!p.valid())
        raise(ErrorCode::MalformedRecord,
              "catalog line " + std::to_string(line_no) + ": coordinates out of range");
      meta.location = p;
    }

    try {
      meta.time = TimeStamp::parse_iso8601(trim(cells[4]));
    } catch (const Error& e) {
      raise(ErrorCode::MalformedRecord,
            "catalog line " + std::to_string(line_no) + ": " + e.what());
    }

    const std::string tag_cell = trim(cells[5]);
    if (!tag_cell.empty() && tag_cell != "-") {
      for (const std::string& tag : split(tag_cell, ',')) {
        const std::string cleaned = trim(tag);
        if (!cleaned.empty()) meta.tags.push_back(cleaned);
      }
    }

    if (kind == SourceKind::SocialImage && !meta.location && meta.tags.empty())
      raise(ErrorCode::MalformedRecord, "catalog line " + std::to_string(line_no) +
                                            ": social image without coordinates needs a tag");
    catalog.push_back(std::move(meta));
  }
  return catalog;
}

std::vector<ImageMeta> query_geotagged_images(const std::vector<ImageMeta>& catalog,
                                              const GeoRect& window, const TimeStamp& from,
                                              const TimeStamp& to) {
  if (!window.well_formed()) raise(ErrorCode::MalformedQuery, "window mins exceed maxes");
  if (from > to) raise(ErrorCode::MalformedQuery, "time range is reversed");
  std::vector<ImageMeta> out;
  for (const ImageMeta& meta : catalog) {
    if (!meta.location) continue;
    if (!window.contains(*meta.location)) continue;
    if (meta.time < from || meta.time > to) continue;
    out.push_back(meta);
  }
  return out;
}

std::vector<ImageMeta> query_tagged_images(const std::vector<ImageMeta>& catalog,
                                           const std::vector<std::string>& tags,
                                           const TimeStamp& from, const TimeStamp& to) {
  if (tags.empty()) raise(ErrorCode::MalformedQuery, "tag query needs at least one tag");
  if (from > to) raise(ErrorCode::MalformedQuery, "time range is reversed");
  std::vector<std::string> wanted;
  wanted.reserve(tags.size());
  for (const std::string& t : tags) wanted.push_back(to_lower(trim(t)));

  std::vector<ImageMeta> out;
  std::set<std::string> seen;
  for (const ImageMeta& meta : catalog) {
    if (meta.time < from || meta.time > to) continue;
    bool hit = false;
    for (const std::string& tag : meta.tags) {
      const std::string lowered = to_lower(tag);
      if (std::find(wanted.begin(), wanted.end(), lowered) != wanted.end()) {
        hit = true;
        break;
      }
    }
    if (hit && seen.insert(meta.id).second) out.push_back(meta);
  }
  return out;
}

std::vector<std::size_t> sample_frames(const std::vector<TimeStamp>& frames, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) raise(ErrorCode::DomainError, "rate must be positive");
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i] < frames[i - 1]) raise(ErrorCode::DomainError, "frame timestamps not ascending");

  std::vector<std::size_t> selected;
  if (frames.empty()) return selected;
  const double min_gap_s = 3600.0 / rate;
  selected.push_back(0);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const double gap =
        static_cast<double>(frames[i].unix_seconds() - frames[selected.back()].unix_seconds());
    if (gap >= min_gap_s) selected.push_back(i);
  }
  return selected;
}

}  // namespace hazefuse
