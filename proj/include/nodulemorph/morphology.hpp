#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nodulemorph/maskio.hpp"

namespace nodulemorph {

struct Pixel {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Maximal 8-connected foreground set. Pixels are stored in row-major
/// (raster) order, so pixels.front() is the lexicographically smallest.
struct Component {
  std::vector<Pixel> pixels;
  int row_min = 0, col_min = 0, row_max = 0, col_max = 0;

  std::size_t size() const noexcept { return pixels.size(); }
  Pixel first() const noexcept { return pixels.front(); }
};

/// Closed boundary path; consecutive points (and last-to-first) are
/// 8-neighbours. Points may repeat where the boundary is one pixel thick.
struct Contour {
  std::vector<Pixel> points;
};

/// Image moments over pixel centres, x = column and y = row.
/// Index [p][q] holds the moment of x^p y^q for p + q <= 3.
struct MomentSet {
  using Table = std::array<std::array<double, 4>, 4>;
  Table raw{};
  Table central{};
  Table normalized{};  // eta_pq = mu_pq / m00^(1 + (p+q)/2), p + q >= 2
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  /// Row/column covariance with +1/12 on the diagonal (unit-square pixels):
  /// {{var_row, cov}, {cov, var_col}}.
  std::array<std::array<double, 2>, 2> covariance{};

  double m00() const noexcept { return raw[0][0]; }
  /// Eigenvalues of the covariance, first >= second > 0.
  std::array<double, 2> principal_variances() const noexcept;
};

inline constexpr std::size_t kFeatureCount = 15;

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "area",         "perimeter", "convex_area", "filled_area", "solidity",
    "form_factor",  "eccentricity", "aspect_ratio", "hu1", "hu2",
    "hu3",          "hu4",       "hu5",         "hu6",         "hu7"};

struct FeatureVector {
  double area = 0;
  double perimeter = 0;
  double convex_area = 0;
  double filled_area = 0;
  double solidity = 0;
  double form_factor = 0;
  double eccentricity = 0;
  double aspect_ratio = 0;
  std::array<double, 7> hu{};

  /// Values in the interchange column order (kFeatureNames).
  std::array<double, kFeatureCount> values() const noexcept;
};

struct FeatureResult {
  FeatureVector features;
  /// Sizes of components other than the largest, which were ignored.
  std::vector<std::size_t> discarded_sizes;
};

/// Ordered by first pixel in raster order.
std::vector<Component> connected_components(const BinaryMask& mask);

/// Ties go to the component whose first pixel comes first in raster order.
Component largest_component(const BinaryMask& mask);

/// Moore-neighbour trace, clockwise, from the component's first pixel.
Contour trace_contour(const Component& component);

/// Chain length with sqrt(2) diagonals including the closing step; a
/// single-point contour has perimeter 4.
double perimeter(const Contour& contour);

/// Monotone-chain hull over pixel centres; collinear points are dropped.
/// Returned counter-clockwise in (col, row) coordinates.
std::vector<Pixel> convex_hull(const std::vector<Pixel>& points);

/// Number of pixel centres inside or on the hull polygon.
std::size_t convex_hull_area(const Component& component);

/// Pixel count after filling background regions that are not 4-connected
/// to the raster border.
std::size_t filled_area(const BinaryMask& mask);
std::size_t filled_area(const Component& component);

MomentSet moments(const Component& component);

/// The seven Hu invariants, unlogged. Second-order terms use the
/// unit-square pixel model (mu20 and mu02 gain m00/12), which is what
/// exact integration over the pixel squares gives; third-order central
/// moments and mu11 are unaffected by that integration.
std::array<double, 7> hu_moments(const MomentSet& m);

FeatureResult extract_features_detailed(const BinaryMask& mask);
FeatureVector extract_features(const BinaryMask& mask);

}  // namespace nodulemorph
