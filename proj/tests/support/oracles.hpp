#pragma once

// Brute-force reference implementations used to check library results.
// Each is written from the contract definitions with no shared code with
// the library: recursive flood fill instead of BFS labeling, naive
// Gaussian elimination instead of a factorized LU, closed-form normal
// equations instead of accumulated sums.

#include <cstdint>
#include <vector>

namespace testsupport {

// Connected components of a 0/1 image. Returns one label per pixel, -1 for
// background. Labels are normalized to the order in which components are
// first reached in row-major scan, starting at 0.
std::vector<int> floodfill_labels(const std::vector<std::uint8_t>& set, int width, int height,
                                  int connectivity);

struct OracleBlob {
  double cx;
  double cy;
  long area;
};

// Component summaries from a label image, min_area filtered, sorted by
// centroid (y, x).
std::vector<OracleBlob> label_summaries(const std::vector<int>& labels, int width, int height,
                                        int min_area);

struct OraclePoint {
  double lat;
  double lon;
  double value;
};

struct OracleVariogram {
  bool spherical = false;
  double nugget = 0.0;
  double sill = 0.0;
  double range = 1.0;
};

struct OraclePrediction {
  double value;
  double variance;
  double weight_sum;
};

// Ordinary kriging by building and solving the full augmented system per
// query with partial-pivot Gaussian elimination. Duplicate locations must
// have been removed by the caller.
OraclePrediction dense_kriging(const std::vector<OraclePoint>& points, const OracleVariogram& model,
                               double lat, double lon);

// Closed-form simple linear regression via normal equations.
void ols_line(const std::vector<double>& x, const std::vector<double>& y, double& slope,
              double& intercept, double& rms);

}  // namespace testsupport
