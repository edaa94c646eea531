#include "hazefuse/blob.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>

#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"

namespace hazefuse {

void BlobParams::check() const {
  if (threshold < 0 || threshold > 255) raise(ErrorCode::DomainError, "threshold must be in [0,255]");
  if (min_area < 1) raise(ErrorCode::DomainError, "min_area must be at least 1");
  if (merge_distance < 0.0 || !std::isfinite(merge_distance))
    raise(ErrorCode::DomainError, "merge_distance must be finite and non-negative");
  if (connectivity != 4 && connectivity != 8) raise(ErrorCode::DomainError, "connectivity must be 4 or 8");
}

BinaryImage threshold_image(const GrayImage& img, const BlobParams& params) {
  params.check();
  BinaryImage out;
  out.width = img.width;
  out.height = img.height;
  out.set.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const int v = img.values[i];
    const bool on = params.polarity == BlobPolarity::DarkBlobs ? v <= params.threshold
                                                               : v >= params.threshold;
    out.set[i] = on ? 1 : 0;
  }
  return out;
}

namespace {

struct Accum {
  long area = 0;
  double sx = 0.0;
  double sy = 0.0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

Blob finish(const Accum& a) {
  Blob b;
  b.area = a.area;
  b.cx = a.sx / static_cast<double>(a.area);
  b.cy = a.sy / static_cast<double>(a.area);
  b.radius = std::sqrt(static_cast<double>(a.area) / kPi);
  b.x0 = a.x0;
  b.y0 = a.y0;
  b.x1 = a.x1;
  b.y1 = a.y1;
  return b;
}

void sort_blobs(std::vector<Blob>& blobs) {
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.cy != b.cy) return a.cy < b.cy;
    return a.cx < b.cx;
  });
}

// Index-based union-find, path halving.
struct UnionFind {
  std::vector<std::size_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Blob> group_blobs(const BinaryImage& binary, int connectivity, int min_area) {
  if (connectivity != 4 && connectivity != 8) raise(ErrorCode::DomainError, "connectivity must be 4 or 8");
  if (min_area < 1) raise(ErrorCode::DomainError, "min_area must be at least 1");

  const int w = binary.width;
  const int h = binary.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<Blob> blobs;

  static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int ndirs = connectivity == 8 ? 8 : 4;

  std::queue<std::pair<int, int>> frontier;
  int next_label = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t at = static_cast<std::size_t>(y) * w + x;
      if (!binary.set[at] || label[at] >= 0) continue;

      Accum acc;
      acc.x0 = acc.x1 = x;
      acc.y0 = acc.y1 = y;
      label[at] = next_label;
      frontier.emplace(x, y);
      while (!frontier.empty()) {
        const auto [px, py] = frontier.front();
        frontier.pop();
        acc.area += 1;
        acc.sx += px;
        acc.sy += py;
        acc.x0 = std::min(acc.x0, px);
        acc.x1 = std::max(acc.x1, px);
        acc.y0 = std::min(acc.y0, py);
        acc.y1 = std::max(acc.y1, py);
        for (int d = 0; d < ndirs; ++d) {
          const int nx = px + dx8[d];
          const int ny = py + dy8[d];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const std::size_t nat = static_cast<std::size_t>(ny) * w + nx;
          if (!binary.set[nat] || label[nat] >= 0) continue;
          label[nat] = next_label;
          frontier.emplace(nx, ny);
        }
      }
      ++next_label;
      if (acc.area >= min_area) blobs.push_back(finish(acc));
    }
  }
  sort_blobs(blobs);
  return blobs;
}

std::vector<Blob> merge_blobs(const std::vector<Blob>& blobs, double merge_distance) {
  if (merge_distance < 0.0 || !std::isfinite(merge_distance))
    raise(ErrorCode::DomainError, "merge_distance must be finite and non-negative");

  UnionFind uf(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i)
    for (std::size_t j = i + 1; j < blobs.size(); ++j) {
      const double d = std::hypot(blobs[i].cx - blobs[j].cx, blobs[i].cy - blobs[j].cy);
      if (d <= merge_distance) uf.unite(i, j);
    }

  std::vector<Blob> merged;
  std::vector<std::size_t> root_slot(blobs.size(), SIZE_MAX);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const std::size_t r = uf.find(i);
    if (root_slot[r] == SIZE_MAX) {
      root_slot[r] = merged.size();
      Blob b = blobs[i];
      b.cx *= static_cast<double>(b.area);  // hold area-weighted sums until done
      b.cy *= static_cast<double>(b.area);
      merged.push_back(b);
    } else {
      Blob& b = merged[root_slot[r]];
      b.cx += blobs[i].cx * static_cast<double>(blobs[i].area);
      b.cy += blobs[i].cy * static_cast<double>(blobs[i].area);
      b.area += blobs[i].area;
      b.x0 = std::min(b.x0, blobs[i].x0);
      b.y0 = std::min(b.y0, blobs[i].y0);
      b.x1 = std::max(b.x1, blobs[i].x1);
      b.y1 = std::max(b.y1, blobs[i].y1);
    }
  }
  for (Blob& b : merged) {
    b.cx /= static_cast<double>(b.area);
    b.cy /= static_cast<double>(b.area);
    b.radius = std::sqrt(static_cast<double>(b.area) / kPi);
  }
  sort_blobs(merged);
  return merged;
}

std::vector<Blob> detect_blobs(const GrayImage& img, const BlobParams& params) {
  params.check();
  const BinaryImage binary = threshold_image(img, params);
  std::vector<Blob> blobs = group_blobs(binary, params.connectivity, params.min_area);
  return merge_blobs(blobs, params.merge_distance);
}

CalibrationCurve fit_calibration(const std::vector<CalibrationSample>& samples) {
  if (samples.size() < 2) raise(ErrorCode::DegenerateFit, "calibration needs at least 2 samples");
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    mx += s.blob_count;
    my += s.pm;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    sxx += (s.blob_count - mx) * (s.blob_count - mx);
    sxy += (s.blob_count - mx) * (s.pm - my);
  }
  if (sxx == 0.0) raise(ErrorCode::DegenerateFit, "all blob counts are equal");

  CalibrationCurve c;
  c.slope = sxy / sxx;
  c.intercept = my - c.slope * mx;
  c.samples = static_cast<long>(samples.size());
  double ss = 0.0;
  for (const auto& s : samples) {
    const double r = s.pm - (c.slope * s.blob_count + c.intercept);
    ss += r * r;
  }
  c.rms = std::sqrt(ss / n);
  return c;
}

Observation estimate_pm(const CalibrationCurve& curve, const GrayImage& img, const BlobParams& params,
                        const GeoPoint& where, const TimeStamp& when, PhenomenonKind phenomenon) {
  if (!curve.trained()) raise(ErrorCode::UntrainedCurve, "calibration curve is untrained");
  if (phenomenon != PhenomenonKind::PM10 && phenomenon != PhenomenonKind::PM2_5)
    raise(ErrorCode::UnsupportedPhenomenon, "filter photos estimate PM only");

  const std::vector<Blob> blobs = detect_blobs(img, params);
  const double raw = curve.slope * static_cast<double>(blobs.size()) + curve.intercept;

  Observation obs;
  obs.source = SourceKind::FilterPhoto;
  obs.phenomenon = phenomenon;
  obs.location = where;
  obs.time = when;
  if (raw < 0.0) {
    obs.value = 0.0;
    obs.quality = QualityFlag::Clamped;
  } else {
    obs.value = raw;
    obs.quality = QualityFlag::Ok;
  }
  obs.check();
  return obs;
}

void save_calibration(const CalibrationCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write calibration " + path.string());
  out << format_double(curve.slope) << ' ' << format_double(curve.intercept) << ' '
      << format_double(curve.rms) << ' ' << curve.samples << '\n';
  if (!out) raise(ErrorCode::IoFailure, "failed writing calibration " + path.string());
}

CalibrationCurve load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open calibration " + path.string());
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::MalformedRecord, "empty calibration file");
  const std::vector<std::string> cells = split(trim(line), ' ');
  if (cells.size() != 4) raise(ErrorCode::MalformedRecord, "calibration line needs 4 fields");
  CalibrationCurve c;
  int n = 0;
  if (!parse_double(cells[0], c.slope) || !parse_double(cells[1], c.intercept) ||
      !parse_double(cells[2], c.rms) || !parse_int(cells[3], n))
    raise(ErrorCode::MalformedRecord, "bad number in calibration file");
  c.samples = n;
  if (!std::isfinite(c.slope) || !std::isfinite(c.intercept) || c.samples < 2)
    raise(ErrorCode::MalformedRecord, "calibration file fails curve invariants");
  return c;
}

void write_blob_report(const std::vector<Blob>& blobs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write blob report " + path.string());
  out << "id,cx,cy,area,radius\n";
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const Blob& b = blobs[i];
    out << (i + 1) << ',' << format_double(b.cx) << ',' << format_double(b.cy) << ',' << b.area << ','
        << format_double(b.radius) << '\n';
  }
  if (!out) raise(ErrorCode::IoFailure, "failed writing blob report " + path.string());
}

}  // namespace hazefuse
