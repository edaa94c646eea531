#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hazefuse/geo.hpp"
#include "hazefuse/image.hpp"
#include "hazefuse/observation.hpp"
#include "hazefuse/timeutil.hpp"

namespace hazefuse {

enum class BlobPolarity { DarkBlobs, LightBlobs };

struct BlobParams {
  int threshold = 128;  // [0,255]
  BlobPolarity polarity = BlobPolarity::DarkBlobs;
  int min_area = 4;            // pixels; suppresses sensor noise
  double merge_distance = 0.0; // centroid distance, pixels
  int connectivity = 8;        // 4 or 8

  void check() const;
};

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> set;  // 0/1, row-major

  bool get(int x, int y) const { return set[static_cast<std::size_t>(y) * width + x] != 0; }
};

struct Blob {
  double cx = 0.0;
  double cy = 0.0;
  long area = 0;
  double radius = 0.0;  // sqrt(area/pi)
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
};

/// DarkBlobs keeps intensity <= threshold, LightBlobs keeps >= threshold.
BinaryImage threshold_image(const GrayImage& img, const BlobParams& params);

/// Connected-component labeling. Components smaller than min_area are
/// dropped; centroids are arithmetic pixel means; output sorted by
/// centroid y then x.
std::vector<Blob> group_blobs(const BinaryImage& binary, int connectivity, int min_area);

/// Transitive closure: blobs whose centroid distance is <= merge_distance
/// end up in one cluster. Merged area is the sum, centroid the
/// area-weighted mean, radius recomputed, bounding box the union.
std::vector<Blob> merge_blobs(const std::vector<Blob>& blobs, double merge_distance);

/// threshold -> group -> merge.
std::vector<Blob> detect_blobs(const GrayImage& img, const BlobParams& params = {});

struct CalibrationSample {
  double blob_count = 0.0;
  double pm = 0.0;  // ug/m3
};

struct CalibrationCurve {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;  // fit residual RMS
  long samples = 0;

  bool trained() const { return samples >= 2; }
};

/// Ordinary least squares of PM against blob count. Throws DegenerateFit
/// when there are fewer than two samples or all counts are equal.
CalibrationCurve fit_calibration(const std::vector<CalibrationSample>& samples);

/// Counts blobs on the filter photo and maps the count through the curve.
/// Negative predictions clamp to 0 with flag Clamped. The location, time
/// and phenomenon describe the exposure, not the photo pipeline.
Observation estimate_pm(const CalibrationCurve& curve, const GrayImage& img, const BlobParams& params,
                        const GeoPoint& where, const TimeStamp& when,
                        PhenomenonKind phenomenon = PhenomenonKind::PM10);

/// One line: `slope intercept rms n`.
void save_calibration(const CalibrationCurve& curve, const std::filesystem::path& path);
CalibrationCurve load_calibration(const std::filesystem::path& path);

/// CSV `id,cx,cy,area,radius` with ids numbered from 1 in output order.
void write_blob_report(const std::vector<Blob>& blobs, const std::filesystem::path& path);

}  // namespace hazefuse
