#include "hazefuse/rg_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

namespace {

void validate_table(RgTable& t) {
  const std::size_t rows = t.sza_axis.size();
  const std::size_t cols = t.aod_axis.size();
  if (rows < 2 || cols < 2) raise(ErrorCode::MalformedTable, "rg table needs at least a 2x2 grid");
  for (std::size_t i = 1; i < rows; ++i)
    if (!(t.sza_axis[i] > t.sza_axis[i - 1]))
      raise(ErrorCode::MalformedTable, "sza axis not strictly ascending at index " + std::to_string(i));
  for (std::size_t j = 1; j < cols; ++j)
    if (!(t.aod_axis[j] > t.aod_axis[j - 1]))
      raise(ErrorCode::MalformedTable, "aod axis not strictly ascending at index " + std::to_string(j));
  if (t.aod_axis.front() < 0.0) raise(ErrorCode::MalformedTable, "aod axis must be non-negative");
  if (t.rg.size() != rows * cols) raise(ErrorCode::MalformedTable, "rg matrix size does not match axes");
  for (std::size_t k = 0; k < t.rg.size(); ++k)
    if (!(std::isfinite(t.rg[k]) && t.rg[k] > 0.0))
      raise(ErrorCode::MalformedTable, "non-positive rg entry at row " + std::to_string(k / cols) +
                                           " col " + std::to_string(k % cols));
  // Every row must run the same way; direction comes from the first row.
  const bool up = t.at(0, 1) > t.at(0, 0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 1; j < cols; ++j) {
      const double prev = t.at(i, j - 1);
      const double cur = t.at(i, j);
      if (up ? !(cur > prev) : !(cur < prev))
        raise(ErrorCode::NonMonotoneRow, "rg row at sza " + format_double(t.sza_axis[i]) +
                                             " is not strictly monotone");
    }
  t.increasing = up;
}

// Interval containing q on an ascending axis; t in [0,1] within it.
struct Segment {
  std::size_t lo;
  double t;
};

Segment segment_of(const std::vector<double>& axis, double q, const char* what) {
  if (q < axis.front() || q > axis.back())
    raise(ErrorCode::OutOfRange, std::string(what) + " " + format_double(q) + " outside table range [" +
                                     format_double(axis.front()) + ", " + format_double(axis.back()) + "]");
  auto it = std::upper_bound(axis.begin(), axis.end(), q);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  if (hi == axis.size()) hi = axis.size() - 1;
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  return {lo, (q - axis[lo]) / (axis[hi] - axis[lo])};
}

std::vector<double> parse_number_row(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  for (const std::string& cell : split(line, ',')) {
    double v = 0.0;
    if (!parse_double(trim(cell), v))
      raise(ErrorCode::MalformedTable, "bad number on line " + std::to_string(line_no));
    out.push_back(v);
  }
  return out;
}

}  // namespace

RgTable load_rg_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open rg table " + path.string());

  std::string header;
  if (!std::getline(in, header)) raise(ErrorCode::MalformedTable, "empty rg table file");
  const std::string prefix = "# rg_table wl=";
  if (header.rfind(prefix, 0) != 0)
    raise(ErrorCode::MalformedTable, "missing rg_table header");
  const std::string rest = header.substr(prefix.size());
  const std::size_t prov_at = rest.find(" provenance=");
  if (prov_at == std::string::npos)
    raise(ErrorCode::MalformedTable, "header lacks provenance field");

  RgTable t;
  t.provenance = rest.substr(prov_at + 12);
  const std::vector<std::string> wl = split(rest.substr(0, prov_at), ',');
  if (wl.size() != 2) raise(ErrorCode::MalformedTable, "header needs two wavelengths");
  if (!parse_double(trim(wl[0]), t.wavelengths_nm.first) ||
      !parse_double(trim(wl[1]), t.wavelengths_nm.second))
    raise(ErrorCode::MalformedTable, "bad wavelength in header");

  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::MalformedTable, "missing aod axis row");
  t.aod_axis = parse_number_row(line, 2);

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row = parse_number_row(line, line_no);
    if (row.size() != t.aod_axis.size() + 1)
      raise(ErrorCode::MalformedTable, "line " + std::to_string(line_no) + " has " +
                                           std::to_string(row.size()) + " cells, expected " +
                                           std::to_string(t.aod_axis.size() + 1));
    t.sza_axis.push_back(row[0]);
    t.rg.insert(t.rg.end(), row.begin() + 1, row.end());
  }
  validate_table(t);
  return t;
}

void save_rg_table(const RgTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write rg table " + path.string());
  out << "# rg_table wl=" << format_double(table.wavelengths_nm.first) << ','
      << format_double(table.wavelengths_nm.second) << " provenance=" << table.provenance << '\n';
  for (std::size_t j = 0; j < table.aod_axis.size(); ++j)
    out << (j ? "," : "") << format_double(table.aod_axis[j]);
  out << '\n';
  for (std::size_t i = 0; i < table.sza_axis.size(); ++i) {
    out << format_double(table.sza_axis[i]);
    for (std::size_t j = 0; j < table.aod_axis.size(); ++j) out << ',' << format_double(table.at(i, j));
    out << '\n';
  }
  if (!out) raise(ErrorCode::IoFailure, "failed writing rg table " + path.string());
}

double eval_rg(const RgTable& table, double sza, double aod) {
  const Segment si = segment_of(table.sza_axis, sza, "sza");
  const Segment sj = segment_of(table.aod_axis, aod, "aod");
  const double r0 = table.at(si.lo, sj.lo) * (1.0 - sj.t) + table.at(si.lo, sj.lo + 1) * sj.t;
  const double r1 = table.at(si.lo + 1, sj.lo) * (1.0 - sj.t) + table.at(si.lo + 1, sj.lo + 1) * sj.t;
  return r0 * (1.0 - si.t) + r1 * si.t;
}

AodEstimate invert_aod(const RgTable& table, double sza, double rg) {
  const Segment si = segment_of(table.sza_axis, sza, "sza");
  const std::size_t cols = table.aod_axis.size();

  // Profile at this SZA: blend of the bracketing rows, still strictly
  // monotone because both rows run the same way.
  std::vector<double> profile(cols);
  for (std::size_t j = 0; j < cols; ++j)
    profile[j] = table.at(si.lo, j) * (1.0 - si.t) + table.at(si.lo + 1, j) * si.t;

  AodEstimate est;
  est.sza_used = sza;
  est.rg_used = rg;

  const double first = profile.front();
  const double last = profile.back();
  const double lo_rg = table.increasing ? first : last;
  const double hi_rg = table.increasing ? last : first;
  if (rg < lo_rg) {
    est.aod = table.increasing ? table.aod_axis.front() : table.aod_axis.back();
    est.flag = QualityFlag::Clamped;
    return est;
  }
  if (rg > hi_rg) {
    est.aod = table.increasing ? table.aod_axis.back() : table.aod_axis.front();
    est.flag = QualityFlag::Clamped;
    return est;
  }

  for (std::size_t j = 0; j + 1 < cols; ++j) {
    const double a = profile[j];
    const double b = profile[j + 1];
    const bool inside = table.increasing ? (rg >= a && rg <= b) : (rg <= a && rg >= b);
    if (!inside) continue;
    const double t = (rg - a) / (b - a);
    est.aod = table.aod_axis[j] + t * (table.aod_axis[j + 1] - table.aod_axis[j]);
    return est;
  }
  // Unreachable for a validated table; keep a hard failure over silent junk.
  raise(ErrorCode::InvariantViolation, "rg profile inversion found no bracket");
}

RgTable generate_synthetic_table(std::vector<double> sza_axis, std::vector<double> aod_axis,
                                 const SyntheticRgParams& params) {
  RgTable t;
  t.sza_axis = std::move(sza_axis);
  t.aod_axis = std::move(aod_axis);
  t.provenance = "synthetic";
  t.rg.reserve(t.sza_axis.size() * t.aod_axis.size());
  for (double sza : t.sza_axis) {
    const double base = params.b0 + params.b1 * sza;
    const double slope = params.s0 + params.s1 * sza;
    if (!(slope > 0.0))
      raise(ErrorCode::DomainError, "synthetic rg slope not positive at sza " + format_double(sza));
    for (double aod : t.aod_axis) {
      const double rg = base + slope * aod;
      if (!(rg > 0.0))
        raise(ErrorCode::DomainError, "synthetic rg not positive at sza " + format_double(sza));
      t.rg.push_back(rg);
    }
  }
  validate_table(t);
  return t;
}

AodPipelineResult estimate_aod_from_image(const RasterImage& img, const GeoPoint& geo,
                                          const TimeStamp& time, const SzaTable& sza_table,
                                          const RgTable& rg_table, const AodPipelineParams& params) {
  geo.check();
  if (std::abs(geo.lat - sza_table.city.lat) > params.city_halfwidth_deg ||
      std::abs(geo.lon - sza_table.city.lon) > params.city_halfwidth_deg)
    raise(ErrorCode::OutOfArea,
          "image at " + format_fixed(geo.lat, 6) + "," + format_fixed(geo.lon, 6) +
              " lies outside the table's city window");

  AodPipelineResult result;
  result.sza = lookup_sza(sza_table, time.day_of_year(), time.time_of_day());

  const SkyMask mask = detect_sky(img, params.sky);
  result.stats = sky_stats(img, mask, params.sky.min_fraction);
  if (!result.stats.usable) {
    result.reason = mask.count() == 0
                        ? "no sky detected"
                        : "sky fraction " + format_fixed(result.stats.sky_fraction, 4) +
                              " below minimum " + format_fixed(params.sky.min_fraction, 4);
    return result;
  }
  if (result.sza > params.sza_gate_deg) {
    result.reason = "sun too low: sza " + format_fixed(result.sza, 2) + " exceeds gate " +
                    format_fixed(params.sza_gate_deg, 2);
    return result;
  }
  if (result.sza < rg_table.sza_axis.front() || result.sza > rg_table.sza_axis.back())
    raise(ErrorCode::TableRangeError, "sza " + format_fixed(result.sza, 2) +
                                          " not covered by the rg table [" +
                                          format_double(rg_table.sza_axis.front()) + ", " +
                                          format_double(rg_table.sza_axis.back()) + "]");

  AodEstimate est = invert_aod(rg_table, result.sza, result.stats.mean_rg);
  est.image_id = params.image_id;
  if (est.flag == QualityFlag::Ok && result.stats.suspect) est.flag = QualityFlag::Suspect;
  result.estimate = est;
  return result;
}

}  // namespace hazefuse
