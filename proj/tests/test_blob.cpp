#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "hazefuse/blob.hpp"
#include "support/checks.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace hazefuse;
using testsupport::check_raises;
using testsupport::TempDir;

namespace {

GrayImage gray(int w, int h, std::uint8_t fill) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.values.assign(std::size_t(w) * h, fill);
  return img;
}

void put(GrayImage& img, int x, int y, std::uint8_t v) {
  img.values[std::size_t(y) * img.width + x] = v;
}

BlobParams params(int threshold, BlobPolarity pol, int min_area = 1, double merge = 0.0,
                  int conn = 8) {
  BlobParams p;
  p.threshold = threshold;
  p.polarity = pol;
  p.min_area = min_area;
  p.merge_distance = merge;
  p.connectivity = conn;
  return p;
}

// Partition equality against the oracle: same label sets regardless of
// label numbering.
bool same_partition(const BinaryImage& binary, int connectivity,
                    const std::vector<Blob>& blobs, int min_area) {
  const std::vector<int> labels = testsupport::floodfill_labels(
      binary.set, binary.width, binary.height, connectivity);
  const std::vector<testsupport::OracleBlob> oracle =
      testsupport::label_summaries(labels, binary.width, binary.height, min_area);
  if (oracle.size() != blobs.size()) return false;
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (blobs[i].area != oracle[i].area) return false;
    if (std::fabs(blobs[i].cx - oracle[i].cx) > 1e-9) return false;
    if (std::fabs(blobs[i].cy - oracle[i].cy) > 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("thresholding follows polarity with inclusive boundaries") {
  GrayImage img = gray(4, 1, 200);
  put(img, 1, 0, 100);  // exactly at threshold
  put(img, 2, 0, 99);
  const BinaryImage dark = threshold_image(img, params(100, BlobPolarity::DarkBlobs));
  CHECK_FALSE(dark.get(0, 0));
  CHECK(dark.get(1, 0));  // boundary is set
  CHECK(dark.get(2, 0));

  const BinaryImage uniform =
      threshold_image(gray(8, 8, 200), params(100, BlobPolarity::DarkBlobs));
  CHECK(std::count(uniform.set.begin(), uniform.set.end(), 1) == 0);

  const BinaryImage light = threshold_image(img, params(100, BlobPolarity::LightBlobs));
  CHECK(light.get(0, 0));
  CHECK(light.get(1, 0));  // boundary set for light polarity too
  CHECK_FALSE(light.get(2, 0));
}

TEST_CASE("inverting intensities and mirroring the polarity leaves the binary unchanged") {
  std::mt19937 rng(31);
  GrayImage img = gray(24, 16, 0);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& v : img.values) v = std::uint8_t(byte(rng));

  GrayImage inverted = img;
  for (auto& v : inverted.values) v = std::uint8_t(255 - v);

  const int t = 90;
  const BinaryImage a = threshold_image(img, params(t, BlobPolarity::DarkBlobs));
  const BinaryImage b = threshold_image(inverted, params(255 - t, BlobPolarity::LightBlobs));
  CHECK(a.set == b.set);
}

TEST_CASE("two disjoint squares group into two blobs") {
  GrayImage img = gray(20, 10, 220);
  for (int y = 2; y < 5; ++y) {
    for (int x = 2; x < 5; ++x) put(img, x, y, 30);
  }
  for (int y = 5; y < 8; ++y) {
    for (int x = 12; x < 15; ++x) put(img, x, y, 30);
  }
  const BinaryImage binary = threshold_image(img, params(128, BlobPolarity::DarkBlobs));
  const std::vector<Blob> blobs = group_blobs(binary, 8, 1);
  REQUIRE(blobs.size() == 2);
  CHECK(blobs[0].area == 9);
  CHECK(blobs[0].cx == doctest::Approx(3.0));
  CHECK(blobs[0].cy == doctest::Approx(3.0));
  CHECK(blobs[1].area == 9);
  CHECK(blobs[1].cx == doctest::Approx(13.0));
  CHECK(blobs[1].cy == doctest::Approx(6.0));
  CHECK(blobs[0].radius == doctest::Approx(std::sqrt(9.0 / kPi)));
  // bounding boxes cover the squares
  CHECK(blobs[0].x0 == 2);
  CHECK(blobs[0].y0 == 2);
  CHECK(blobs[0].x1 == 4);
  CHECK(blobs[0].y1 == 4);
}

TEST_CASE("diagonal contact depends on connectivity") {
  BinaryImage binary;
  binary.width = 4;
  binary.height = 4;
  binary.set.assign(16, 0);
  binary.set[0 * 4 + 0] = 1;
  binary.set[1 * 4 + 1] = 1;
  CHECK(group_blobs(binary, 8, 1).size() == 1);
  CHECK(group_blobs(binary, 4, 1).size() == 2);
}

TEST_CASE("min_area filters small components") {
  BinaryImage binary;
  binary.width = 6;
  binary.height = 3;
  binary.set.assign(18, 0);
  binary.set[0] = 1;  // lone pixel
  for (int x = 2; x < 6; ++x) binary.set[6 + x] = 1;
  const std::vector<Blob> blobs = group_blobs(binary, 8, 2);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].area == 4);
}

TEST_CASE("random binaries match the flood-fill oracle under both connectivities") {
  std::mt19937 rng(47);
  std::uniform_int_distribution<int> dim(1, 24);
  std::uniform_real_distribution<double> fill(0.2, 0.7);
  for (int trial = 0; trial < 100; ++trial) {
    BinaryImage binary;
    binary.width = dim(rng);
    binary.height = dim(rng);
    binary.set.assign(std::size_t(binary.width) * binary.height, 0);
    std::bernoulli_distribution bit(fill(rng));
    for (auto& v : binary.set) v = bit(rng) ? 1 : 0;

    for (const int conn : {4, 8}) {
      const std::vector<Blob> blobs = group_blobs(binary, conn, 1);
      CHECK_MESSAGE(same_partition(binary, conn, blobs, 1),
                    "trial " << trial << " connectivity " << conn);
      // set pixels are partitioned: total area equals set count
      long total = 0;
      for (const Blob& b : blobs) total += b.area;
      CHECK(total == long(std::count(binary.set.begin(), binary.set.end(), 1)));
    }
  }
}

TEST_CASE("merge at distance zero is the identity") {
  GrayImage img = gray(30, 10, 220);
  put(img, 3, 3, 30);
  for (int x = 10; x < 13; ++x) put(img, x, 5, 30);
  const BinaryImage binary = threshold_image(img, params(128, BlobPolarity::DarkBlobs));
  const std::vector<Blob> blobs = group_blobs(binary, 8, 1);
  const std::vector<Blob> merged = merge_blobs(blobs, 0.0);
  REQUIRE(merged.size() == blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    CHECK(merged[i].cx == blobs[i].cx);
    CHECK(merged[i].cy == blobs[i].cy);
    CHECK(merged[i].area == blobs[i].area);
  }
}

TEST_CASE("two blobs five pixels apart merge within distance six") {
  std::vector<Blob> blobs(2);
  blobs[0].cx = 10.0;
  blobs[0].cy = 5.0;
  blobs[0].area = 9;
  blobs[0].x0 = 9;
  blobs[0].y0 = 4;
  blobs[0].x1 = 11;
  blobs[0].y1 = 6;
  blobs[1] = blobs[0];
  blobs[1].cx = 15.0;
  blobs[1].x0 = 14;
  blobs[1].x1 = 16;
  blobs[1].area = 3;

  const std::vector<Blob> merged = merge_blobs(blobs, 6.0);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].area == 12);
  // area-weighted centroid
  CHECK(merged[0].cx == doctest::Approx((10.0 * 9 + 15.0 * 3) / 12.0));
  CHECK(merged[0].cy == doctest::Approx(5.0));
  CHECK(merged[0].radius == doctest::Approx(std::sqrt(12.0 / kPi)));
  CHECK(merged[0].x0 == 9);
  CHECK(merged[0].x1 == 16);

  CHECK(merge_blobs(blobs, 4.9).size() == 2);
}

TEST_CASE("merging is transitive along a chain") {
  std::vector<Blob> blobs(3);
  for (int i = 0; i < 3; ++i) {
    blobs[i].cx = 10.0 + 5.0 * i;  // 10, 15, 20: |AC| = 10
    blobs[i].cy = 4.0;
    blobs[i].area = 4;
    blobs[i].x0 = int(blobs[i].cx) - 1;
    blobs[i].x1 = int(blobs[i].cx) + 1;
    blobs[i].y0 = 3;
    blobs[i].y1 = 5;
  }
  const std::vector<Blob> merged = merge_blobs(blobs, 6.0);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].area == 12);
  CHECK(merged[0].cx == doctest::Approx(15.0));
}

TEST_CASE("merge conserves total area on random inputs") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> pos(0.0, 60.0);
  std::uniform_int_distribution<long> area(1, 50);
  std::vector<Blob> blobs(25);
  for (auto& b : blobs) {
    b.cx = pos(rng);
    b.cy = pos(rng);
    b.area = area(rng);
    b.x0 = int(b.cx);
    b.x1 = int(b.cx);
    b.y0 = int(b.cy);
    b.y1 = int(b.cy);
  }
  long before = 0;
  for (const Blob& b : blobs) before += b.area;
  for (const double d : {0.0, 3.0, 10.0, 100.0}) {
    long after = 0;
    for (const Blob& b : merge_blobs(blobs, d)) after += b.area;
    CHECK(after == before);
  }
  CHECK(merge_blobs(blobs, 1e9).size() == 1);
}

TEST_CASE("five far-apart disks detect with radius near ten") {
  std::vector<std::array<double, 3>> disks;
  for (int i = 0; i < 5; ++i) {
    disks.push_back({40.0 + 60.0 * (i % 3), 40.0 + 60.0 * (i / 3), 10.0});
  }
  const GrayImage scene = testsupport::render_filter_scene(220, 140, disks);
  const std::vector<Blob> blobs = detect_blobs(scene, params(128, BlobPolarity::DarkBlobs, 4));
  REQUIRE(blobs.size() == 5);
  for (const Blob& b : blobs) {
    CHECK(b.radius >= 9.5);
    CHECK(b.radius <= 10.5);
  }
}

TEST_CASE("a blank filter yields no blobs") {
  CHECK(detect_blobs(gray(64, 64, 220), params(128, BlobPolarity::DarkBlobs, 4)).empty());
}

TEST_CASE("detection is translation equivariant") {
  const std::vector<std::array<double, 3>> base{{30.0, 25.0, 6.0}, {55.0, 40.0, 4.0}};
  std::vector<std::array<double, 3>> shifted = base;
  const double dx = 17.0, dy = 9.0;
  for (auto& d : shifted) {
    d[0] += dx;
    d[1] += dy;
  }
  const GrayImage a = testsupport::render_filter_scene(100, 80, base);
  const GrayImage b = testsupport::render_filter_scene(100, 80, shifted);
  const BlobParams p = params(128, BlobPolarity::DarkBlobs, 4);
  const std::vector<Blob> ba = detect_blobs(a, p);
  const std::vector<Blob> bb = detect_blobs(b, p);
  REQUIRE(ba.size() == bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) {
    CHECK(bb[i].cx == doctest::Approx(ba[i].cx + dx).epsilon(1e-12));
    CHECK(bb[i].cy == doctest::Approx(ba[i].cy + dy).epsilon(1e-12));
    CHECK(bb[i].area == ba[i].area);
  }
}

TEST_CASE("intensity inversion with mirrored polarity detects the same blobs") {
  const GrayImage scene = testsupport::render_filter_scene(
      100, 80, {{30.0, 25.0, 6.0}, {60.0, 50.0, 8.0}});
  GrayImage inverted = scene;
  for (auto& v : inverted.values) v = std::uint8_t(255 - v);
  const std::vector<Blob> dark = detect_blobs(scene, params(128, BlobPolarity::DarkBlobs, 4));
  const std::vector<Blob> light =
      detect_blobs(inverted, params(127, BlobPolarity::LightBlobs, 4));
  REQUIRE(dark.size() == light.size());
  for (std::size_t i = 0; i < dark.size(); ++i) {
    CHECK(dark[i].cx == light[i].cx);
    CHECK(dark[i].cy == light[i].cy);
    CHECK(dark[i].area == light[i].area);
  }
}

TEST_CASE("blob parameters are validated") {
  GrayImage img = gray(4, 4, 0);
  check_raises(ErrorCode::DomainError,
               [&] { detect_blobs(img, params(300, BlobPolarity::DarkBlobs)); });
  check_raises(ErrorCode::DomainError,
               [&] { detect_blobs(img, params(128, BlobPolarity::DarkBlobs, 0)); });
  check_raises(ErrorCode::DomainError,
               [&] { detect_blobs(img, params(128, BlobPolarity::DarkBlobs, 1, -1.0)); });
  check_raises(ErrorCode::DomainError,
               [&] { detect_blobs(img, params(128, BlobPolarity::DarkBlobs, 1, 0.0, 6)); });
}

TEST_CASE("calibration recovers an exact line") {
  std::vector<CalibrationSample> samples;
  for (int c = 1; c <= 6; ++c) samples.push_back({double(c), 2.0 * c + 1.0});
  const CalibrationCurve curve = fit_calibration(samples);
  CHECK(curve.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(curve.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curve.rms == doctest::Approx(0.0));
  CHECK(curve.samples == 6);
  CHECK(curve.trained());
}

TEST_CASE("degenerate calibration inputs are rejected") {
  check_raises(ErrorCode::DegenerateFit, [] { fit_calibration({{3, 10.0}}); });
  check_raises(ErrorCode::DegenerateFit,
               [] { fit_calibration({{3, 10.0}, {3, 20.0}, {3, 30.0}}); });
}

TEST_CASE("noisy calibration matches the closed-form oracle") {
  std::mt19937 rng(61);
  std::normal_distribution<double> noise(0.0, 2.0);
  std::vector<CalibrationSample> samples;
  std::vector<double> xs, ys;
  for (int c = 0; c < 40; ++c) {
    const double pm = 3.5 * c + 12.0 + noise(rng);
    samples.push_back({double(c), pm});
    xs.push_back(double(c));
    ys.push_back(pm);
  }
  const CalibrationCurve curve = fit_calibration(samples);
  double slope, intercept, rms;
  testsupport::ols_line(xs, ys, slope, intercept, rms);
  CHECK(curve.slope == doctest::Approx(slope).epsilon(1e-9));
  CHECK(curve.intercept == doctest::Approx(intercept).epsilon(1e-9));
  CHECK(curve.rms == doctest::Approx(rms).epsilon(1e-9));
}

TEST_CASE("pm estimation applies the curve to the blob count") {
  CalibrationCurve curve;
  curve.slope = 2.0;
  curve.intercept = 1.0;
  curve.samples = 5;

  std::vector<std::array<double, 3>> disks;
  for (int i = 0; i < 5; ++i) disks.push_back({30.0 + 40.0 * i, 30.0, 8.0});
  const GrayImage scene = testsupport::render_filter_scene(220, 60, disks);

  const GeoPoint where{40.63, 22.95};
  const TimeStamp when = TimeStamp::from_utc(2017, 5, 1, 9, 0, 0);
  const Observation obs =
      estimate_pm(curve, scene, params(128, BlobPolarity::DarkBlobs, 4), where, when);
  CHECK(obs.value == doctest::Approx(11.0));
  CHECK(obs.phenomenon == PhenomenonKind::PM10);
  CHECK(obs.source == SourceKind::FilterPhoto);
  CHECK(obs.quality == QualityFlag::Ok);
  CHECK(obs.time == when);

  // blank filter: intercept only
  const Observation blank = estimate_pm(curve, gray(64, 64, 220),
                                        params(128, BlobPolarity::DarkBlobs, 4), where, when);
  CHECK(blank.value == doctest::Approx(1.0));
}

TEST_CASE("negative predictions clamp to zero") {
  CalibrationCurve curve;
  curve.slope = 2.0;
  curve.intercept = -5.0;
  curve.samples = 2;
  const Observation obs =
      estimate_pm(curve, gray(16, 16, 220), params(128, BlobPolarity::DarkBlobs, 4),
                  {40.63, 22.95}, TimeStamp(0));
  CHECK(obs.value == 0.0);
  CHECK(obs.quality == QualityFlag::Clamped);
}

TEST_CASE("estimation requires a trained curve and a PM phenomenon") {
  const CalibrationCurve untrained;
  check_raises(ErrorCode::UntrainedCurve, [&] {
    estimate_pm(untrained, gray(8, 8, 220), params(128, BlobPolarity::DarkBlobs), {0, 0},
                TimeStamp(0));
  });
  CalibrationCurve curve;
  curve.slope = 1.0;
  curve.intercept = 0.0;
  curve.samples = 2;
  check_raises(ErrorCode::UnsupportedPhenomenon, [&] {
    estimate_pm(curve, gray(8, 8, 220), params(128, BlobPolarity::DarkBlobs), {0, 0},
                TimeStamp(0), PhenomenonKind::AOD);
  });
  CHECK_NOTHROW(estimate_pm(curve, gray(8, 8, 220), params(128, BlobPolarity::DarkBlobs), {0, 0},
                            TimeStamp(0), PhenomenonKind::PM2_5));
}

TEST_CASE("calibration save/load round-trips") {
  TempDir dir("calib");
  CalibrationCurve curve;
  curve.slope = 3.25;
  curve.intercept = -1.125;
  curve.rms = 0.5;
  curve.samples = 17;
  const auto path = dir.file("curve.txt");
  save_calibration(curve, path);
  const CalibrationCurve back = load_calibration(path);
  CHECK(back.slope == curve.slope);
  CHECK(back.intercept == curve.intercept);
  CHECK(back.rms == curve.rms);
  CHECK(back.samples == curve.samples);

  check_raises(ErrorCode::IoFailure, [&] { load_calibration(dir.file("missing.txt")); });
  {
    std::ofstream out(dir.file("bad.txt"));
    out << "1.0 junk 0.0 3\n";
  }
  check_raises(ErrorCode::MalformedRecord, [&] { load_calibration(dir.file("bad.txt")); });
}

TEST_CASE("blob report lists blobs in deterministic order") {
  TempDir dir("report");
  const GrayImage scene = testsupport::render_filter_scene(
      100, 80, {{20.0, 20.0, 5.0}, {70.0, 55.0, 7.0}});
  const std::vector<Blob> blobs = detect_blobs(scene, params(128, BlobPolarity::DarkBlobs, 4));
  const auto path = dir.file("report.csv");
  write_blob_report(blobs, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "id,cx,cy,area,radius");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == int(blobs.size()));
}
