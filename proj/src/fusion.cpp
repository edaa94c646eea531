#include "hazefuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

void GridSpec::check() const {
  origin.check();
  if (!(dlat > 0.0) || !(dlon > 0.0) || !std::isfinite(dlat) || !std::isfinite(dlon))
    raise(ErrorCode::InvariantViolation, "grid cell sizes must be positive");
  if (rows == 0 || cols == 0) raise(ErrorCode::InvariantViolation, "grid needs at least one cell");
}

GeoPoint GridSpec::cell_center(std::size_t i, std::size_t j) const {
  return {origin.lat + (static_cast<double>(i) + 0.5) * dlat,
          origin.lon + (static_cast<double>(j) + 0.5) * dlon};
}

void BaseMap::check() const {
  grid.check();
  if (values.size() != grid.rows * grid.cols)
    raise(ErrorCode::DimensionMismatch, "basemap has " + std::to_string(values.size()) +
                                            " values for a " + std::to_string(grid.rows) + "x" +
                                            std::to_string(grid.cols) + " grid");
  for (double v : values)
    if (!std::isfinite(v)) raise(ErrorCode::InvariantViolation, "basemap contains non-finite values");
}

double sample_basemap(const BaseMap& map, const GeoPoint& p) {
  const GridSpec& g = map.grid;
  if (p.lat < g.origin.lat || p.lat > g.lat_max() || p.lon < g.origin.lon || p.lon > g.lon_max())
    raise(ErrorCode::OutOfExtent, "point " + format_fixed(p.lat, 6) + "," + format_fixed(p.lon, 6) +
                                      " outside grid extent");

  // Coordinates in units of cells, measured from the first cell center,
  // clamped so the border half-cell extrapolates constantly.
  auto axis_pos = [](double q, double q0, double step, std::size_t n, std::size_t& lo, double& t) {
    double u = (q - q0) / step - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    if (n == 1) {
      lo = 0;
      t = 0.0;
      return;
    }
    lo = std::min(static_cast<std::size_t>(u), n - 2);
    t = u - static_cast<double>(lo);
  };

  std::size_t i0 = 0, j0 = 0;
  double ti = 0.0, tj = 0.0;
  axis_pos(p.lat, g.origin.lat, g.dlat, g.rows, i0, ti);
  axis_pos(p.lon, g.origin.lon, g.dlon, g.cols, j0, tj);
  const std::size_t i1 = g.rows == 1 ? i0 : i0 + 1;
  const std::size_t j1 = g.cols == 1 ? j0 : j0 + 1;

  const double a = map.at(i0, j0) * (1.0 - tj) + map.at(i0, j1) * tj;
  const double b = map.at(i1, j0) * (1.0 - tj) + map.at(i1, j1) * tj;
  return a * (1.0 - ti) + b * ti;
}

ResidualSet compute_residuals(const std::vector<Observation>& obs, const BaseMap& map) {
  map.check();
  ResidualSet out;
  if (obs.empty()) return out;
  const PhenomenonKind phenomenon = obs.front().phenomenon;
  const GridSpec& g = map.grid;
  for (const Observation& o : obs) {
    if (o.phenomenon != phenomenon)
      raise(ErrorCode::MixedPhenomena, "cannot fuse " + std::string(to_string(phenomenon)) +
                                           " with " + to_string(o.phenomenon));
    o.check();
    if (o.location.lat < g.origin.lat || o.location.lat > g.lat_max() ||
        o.location.lon < g.origin.lon || o.location.lon > g.lon_max()) {
      out.warnings.push_back("observation " + (o.id.empty() ? "<unnamed>" : o.id) +
                             " outside grid extent, dropped");
      continue;
    }
    out.points.push_back({o.location, o.value - sample_basemap(map, o.location)});
  }
  return out;
}

std::vector<VariogramBin> empirical_semivariogram(const std::vector<ResidualPoint>& points,
                                                  std::size_t n_bins, double max_lag) {
  if (points.size() < 2) raise(ErrorCode::TooFewPoints, "semivariogram needs at least 2 points");
  if (!(max_lag > 0.0) || !std::isfinite(max_lag))
    raise(ErrorCode::DomainError, "max_lag must be positive");
  if (n_bins == 0) raise(ErrorCode::DomainError, "n_bins must be positive");

  std::vector<double> sum_gamma(n_bins, 0.0), sum_lag(n_bins, 0.0);
  std::vector<long> count(n_bins, 0);
  const double width = max_lag / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = local_distance_deg(points[i].location, points[j].location);
      if (d > max_lag) continue;
      const std::size_t bin = std::min(static_cast<std::size_t>(d / width), n_bins - 1);
      const double dv = points[i].value - points[j].value;
      sum_gamma[bin] += 0.5 * dv * dv;
      sum_lag[bin] += d;
      count[bin] += 1;
    }

  std::vector<VariogramBin> bins;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    bins.push_back({sum_lag[b] / static_cast<double>(count[b]),
                    sum_gamma[b] / static_cast<double>(count[b]), count[b]});
  }
  return bins;
}

double VariogramModel::operator()(double h) const {
  if (h <= 0.0) return 0.0;
  const double partial = sill - nugget;
  double shape;
  if (kind == VariogramKind::Exponential) {
    shape = 1.0 - std::exp(-3.0 * h / range);
  } else {
    const double r = h / range;
    shape = r >= 1.0 ? 1.0 : 1.5 * r - 0.5 * r * r * r;
  }
  return nugget + partial * shape;
}

void VariogramModel::check() const {
  if (!(nugget >= 0.0) || !(sill >= nugget) || !(range > 0.0) || !std::isfinite(sill) ||
      !std::isfinite(range))
    raise(ErrorCode::DomainError, "variogram needs 0 <= nugget <= sill and range > 0");
}

namespace {

double wls_cost(const std::vector<VariogramBin>& bins, VariogramKind kind, double nugget,
                double partial, double range) {
  const VariogramModel m{kind, nugget, nugget + partial, range};
  double cost = 0.0;
  for (const VariogramBin& b : bins) {
    const double r = m(b.lag) - b.gamma;
    cost += static_cast<double>(b.pairs) * r * r;
  }
  return cost;
}

}  // namespace

VariogramModel fit_variogram(const std::vector<VariogramBin>& bins, VariogramKind kind) {
  if (bins.size() < 3)
    raise(ErrorCode::InsufficientBins, "variogram fit needs 3 bins, got " +
                                           std::to_string(bins.size()));

  double gmax = 0.0, dmax = 0.0;
  for (const VariogramBin& b : bins) {
    gmax = std::max(gmax, b.gamma);
    dmax = std::max(dmax, b.lag);
  }
  if (gmax == 0.0) return {kind, 0.0, 0.0, std::max(dmax, 1e-6)};

  const double lo[3] = {0.0, 0.0, std::max(dmax / 50.0, 1e-9)};
  const double hi[3] = {gmax, 1.5 * gmax, 2.0 * dmax};

  // Coarse grid to find promising basins, then pattern search from the best
  // few cells. The window shrinks only when a sweep stalls, so the search
  // can ride the long nugget/range valley without starving.
  struct Seed {
    double cost;
    double p[3];
  };
  Seed seeds[3] = {{std::numeric_limits<double>::infinity(), {lo[0], lo[1], lo[2]}},
                   {std::numeric_limits<double>::infinity(), {lo[0], lo[1], lo[2]}},
                   {std::numeric_limits<double>::infinity(), {lo[0], lo[1], lo[2]}}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const double n = lo[0] + (hi[0] - lo[0]) * i / 9.0;
        const double p = lo[1] + (hi[1] - lo[1]) * j / 9.0;
        const double r = lo[2] + (hi[2] - lo[2]) * k / 9.0;
        const double c = wls_cost(bins, kind, n, p, r);
        if (c < seeds[2].cost) {
          seeds[2] = {c, {n, p, r}};
          if (seeds[2].cost < seeds[1].cost) std::swap(seeds[1], seeds[2]);
          if (seeds[1].cost < seeds[0].cost) std::swap(seeds[0], seeds[1]);
        }
      }

  double best[3] = {seeds[0].p[0], seeds[0].p[1], seeds[0].p[2]};
  double best_cost = seeds[0].cost;
  for (const Seed& seed : seeds) {
    if (!std::isfinite(seed.cost)) continue;
    double cur[3] = {seed.p[0], seed.p[1], seed.p[2]};
    double cur_cost = seed.cost;
    double window[3] = {(hi[0] - lo[0]) / 9.0, (hi[1] - lo[1]) / 9.0, (hi[2] - lo[2]) / 9.0};
    for (int sweep = 0; sweep < 400; ++sweep) {
      bool moved = false;
      for (int axis = 0; axis < 3; ++axis) {
        const double a = std::max(lo[axis], cur[axis] - window[axis]);
        const double b = std::min(hi[axis], cur[axis] + window[axis]);
        for (int s = 0; s <= 32; ++s) {
          double trial[3] = {cur[0], cur[1], cur[2]};
          trial[axis] = a + (b - a) * s / 32.0;
          const double c = wls_cost(bins, kind, trial[0], trial[1], trial[2]);
          if (c < cur_cost) {
            cur_cost = c;
            cur[axis] = trial[axis];
            moved = true;
          }
        }
      }
      if (!moved) {
        double relative = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
          window[axis] *= 0.5;
          relative = std::max(relative, window[axis] / std::max(hi[axis] - lo[axis], 1e-300));
        }
        if (relative < 1e-14) break;
      }
    }
    if (cur_cost < best_cost) {
      best_cost = cur_cost;
      best[0] = cur[0];
      best[1] = cur[1];
      best[2] = cur[2];
    }
  }

  VariogramModel m{kind, best[0], best[0] + best[1], best[2]};
  m.check();
  return m;
}

struct KrigingSystem::Impl {
  std::vector<GeoPoint> pts;
  Eigen::VectorXd vals;
  VariogramModel model;
  Eigen::MatrixXd A;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

KrigingSystem::KrigingSystem(const std::vector<ResidualPoint>& points, const VariogramModel& model)
    : impl_(std::make_unique<Impl>()) {
  if (points.empty()) raise(ErrorCode::TooFewPoints, "kriging needs at least one point");
  model.check();
  impl_->model = model;

  // Duplicate locations are averaged; order of first appearance is kept.
  std::map<std::pair<double, double>, std::size_t> slot;
  std::vector<double> sums;
  std::vector<long> counts;
  for (const ResidualPoint& p : points) {
    const auto key = std::make_pair(p.location.lat, p.location.lon);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, impl_->pts.size());
      impl_->pts.push_back(p.location);
      sums.push_back(p.value);
      counts.push_back(1);
    } else {
      sums[it->second] += p.value;
      counts[it->second] += 1;
    }
  }

  const std::size_t n = impl_->pts.size();
  impl_->vals.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) impl_->vals(static_cast<Eigen::Index>(i)) = sums[i] / counts[i];

  Eigen::MatrixXd& A = impl_->A;
  A.resize(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = model(local_distance_deg(impl_->pts[i], impl_->pts[j]));
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g;
      A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = g;
    }
    A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = 1.0;
    A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;
  }
  A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = 0.0;

  impl_->lu.compute(A);
  const double rc = impl_->lu.rcond();
  if (!std::isfinite(rc) || rc < 1e-14)
    raise(ErrorCode::SingularSystem,
          "kriging system is numerically singular (rcond = " + format_double(rc) + ")");
}

KrigingSystem::~KrigingSystem() = default;
KrigingSystem::KrigingSystem(KrigingSystem&&) noexcept = default;
KrigingSystem& KrigingSystem::operator=(KrigingSystem&&) noexcept = default;

std::size_t KrigingSystem::size() const { return impl_->pts.size(); }

KrigingSystem::Prediction KrigingSystem::predict(const GeoPoint& p) const {
  const std::size_t n = impl_->pts.size();
  Eigen::VectorXd b(static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i < n; ++i)
    b(static_cast<Eigen::Index>(i)) = impl_->model(local_distance_deg(impl_->pts[i], p));
  b(static_cast<Eigen::Index>(n)) = 1.0;

  Eigen::VectorXd x = impl_->lu.solve(b);
  x += impl_->lu.solve(b - impl_->A * x);  // one refinement step tightens sum(w) to ~1e-15

  const auto w = x.head(static_cast<Eigen::Index>(n));
  Prediction out;
  out.value = w.dot(impl_->vals);
  out.variance = w.dot(b.head(static_cast<Eigen::Index>(n))) + x(static_cast<Eigen::Index>(n));
  out.weight_sum = w.sum();
  return out;
}

KrigedField ordinary_kriging(const std::vector<ResidualPoint>& points, const VariogramModel& model,
                             const GridSpec& grid) {
  grid.check();
  const KrigingSystem system(points, model);
  KrigedField field;
  field.values.reserve(grid.rows * grid.cols);
  field.variance.reserve(grid.rows * grid.cols);
  for (std::size_t i = 0; i < grid.rows; ++i)
    for (std::size_t j = 0; j < grid.cols; ++j) {
      const KrigingSystem::Prediction pred = system.predict(grid.cell_center(i, j));
      field.values.push_back(pred.value);
      field.variance.push_back(pred.variance);
    }
  return field;
}

FusedMap residual_kriging_fuse(const std::vector<Observation>& obs, const BaseMap& basemap,
                               const std::optional<VariogramModel>& model,
                               std::vector<std::string>* warnings) {
  basemap.check();
  FusedMap fused;
  fused.grid = basemap.grid;
  fused.values = basemap.values;
  fused.variance.assign(basemap.values.size(), model ? model->sill : 0.0);

  ResidualSet rs = compute_residuals(obs, basemap);
  if (warnings) warnings->insert(warnings->end(), rs.warnings.begin(), rs.warnings.end());
  if (rs.points.empty()) return fused;

  VariogramModel m;
  if (model) {
    m = *model;
  } else {
    // Degenerate residual sets have an exact analytic answer; a variogram
    // cannot be fitted from them anyway.
    const bool all_equal =
        std::all_of(rs.points.begin(), rs.points.end(),
                    [&](const ResidualPoint& p) { return p.value == rs.points.front().value; });
    double dmax = 0.0;
    for (std::size_t i = 0; i < rs.points.size(); ++i)
      for (std::size_t j = i + 1; j < rs.points.size(); ++j)
        dmax = std::max(dmax, local_distance_deg(rs.points[i].location, rs.points[j].location));
    if (all_equal || dmax == 0.0) {
      double c = 0.0;
      for (const ResidualPoint& p : rs.points) c += p.value;
      c /= static_cast<double>(rs.points.size());
      for (double& v : fused.values) v += c;
      std::fill(fused.variance.begin(), fused.variance.end(), 0.0);
      if (warnings && !all_equal)
        warnings->push_back("all observations share one location; fused map shifted by their mean");
      return fused;
    }
    m = fit_variogram(empirical_semivariogram(rs.points, 12, 0.5 * dmax));
  }

  const KrigedField field = ordinary_kriging(rs.points, m, basemap.grid);
  for (std::size_t k = 0; k < fused.values.size(); ++k) {
    fused.values[k] = basemap.values[k] + field.values[k];
    double var = field.variance[k];
    if (var < 0.0 && var >= -1e-9) var = 0.0;  // numerical floor
    fused.variance[k] = var;
  }
  return fused;
}

BaseMap load_basemap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open map " + path.string());

  std::string header;
  if (!std::getline(in, header)) raise(ErrorCode::MalformedRecord, "empty map file");
  const std::string prefix = "# grid ";
  if (header.rfind(prefix, 0) != 0) raise(ErrorCode::MalformedRecord, "missing grid header");

  BaseMap map;
  long rows = -1, cols = -1;
  for (const std::string& token : split(header.substr(prefix.size()), ' ')) {
    if (token.empty()) continue;
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos) raise(ErrorCode::MalformedRecord, "bad grid header token " + token);
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    double d = 0.0;
    int iv = 0;
    if (key == "lat0" && parse_double(val, d))
      map.grid.origin.lat = d;
    else if (key == "lon0" && parse_double(val, d))
      map.grid.origin.lon = d;
    else if (key == "dlat" && parse_double(val, d))
      map.grid.dlat = d;
    else if (key == "dlon" && parse_double(val, d))
      map.grid.dlon = d;
    else if (key == "rows" && parse_int(val, iv))
      rows = iv;
    else if (key == "cols" && parse_int(val, iv))
      cols = iv;
    else
      raise(ErrorCode::MalformedRecord, "bad grid header token " + token);
  }
  if (rows < 1 || cols < 1) raise(ErrorCode::MalformedRecord, "grid header needs rows and cols");
  map.grid.rows = static_cast<std::size_t>(rows);
  map.grid.cols = static_cast<std::size_t>(cols);

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t before = map.values.size();
    for (const std::string& cell : split(trim(line), ' ')) {
      if (cell.empty()) continue;
      double v = 0.0;
      if (!parse_double(cell, v))
        raise(ErrorCode::MalformedRecord, "bad value on map line " + std::to_string(line_no));
      map.values.push_back(v);
    }
    if (map.values.size() - before != map.grid.cols)
      raise(ErrorCode::MalformedRecord, "map line " + std::to_string(line_no) + " has " +
                                            std::to_string(map.values.size() - before) +
                                            " cells, expected " + std::to_string(map.grid.cols));
  }
  map.check();
  return map;
}

void save_map(const GridSpec& grid, const std::vector<double>& values,
              const std::filesystem::path& path) {
  grid.check();
  if (values.size() != grid.rows * grid.cols)
    raise(ErrorCode::DimensionMismatch, "value count does not match grid");
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write map " + path.string());
  out << "# grid lat0=" << format_double(grid.origin.lat) << " lon0=" << format_double(grid.origin.lon)
      << " dlat=" << format_double(grid.dlat) << " dlon=" << format_double(grid.dlon)
      << " rows=" << grid.rows << " cols=" << grid.cols << '\n';
  for (std::size_t i = 0; i < grid.rows; ++i) {
    for (std::size_t j = 0; j < grid.cols; ++j)
      out << (j ? " " : "") << format_double(values[i * grid.cols + j]);
    out << '\n';
  }
  if (!out) raise(ErrorCode::IoFailure, "failed writing map " + path.string());
}

void export_geojson(const FusedMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write geojson " + path.string());
  out << "{\"type\":\"FeatureCollection\",\"features\":[\n";
  bool first = true;
  for (std::size_t i = 0; i < map.grid.rows; ++i)
    for (std::size_t j = 0; j < map.grid.cols; ++j) {
      const GeoPoint c = map.grid.cell_center(i, j);
      const std::size_t k = i * map.grid.cols + j;
      if (!first) out << ",\n";
      first = false;
      out << "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Point\",\"coordinates\":["
          << format_fixed(c.lon, 6) << ',' << format_fixed(c.lat, 6)
          << "]},\"properties\":{\"value\":" << format_fixed(map.values[k], 6)
          << ",\"variance\":" << format_fixed(map.variance[k], 6) << "}}";
    }
  out << "\n]}\n";
  if (!out) raise(ErrorCode::IoFailure, "failed writing geojson " + path.string());
}

void export_csv(const FusedMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write csv " + path.string());
  out << "lat,lon,value,variance\n";
  for (std::size_t i = 0; i < map.grid.rows; ++i)
    for (std::size_t j = 0; j < map.grid.cols; ++j) {
      const GeoPoint c = map.grid.cell_center(i, j);
      const std::size_t k = i * map.grid.cols + j;
      out << format_fixed(c.lat, 6) << ',' << format_fixed(c.lon, 6) << ','
          << format_fixed(map.values[k], 6) << ',' << format_fixed(map.variance[k], 6) << '\n';
    }
  if (!out) raise(ErrorCode::IoFailure, "failed writing csv " + path.string());
}

}  // namespace hazefuse
