#include "nodulemorph/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>

#include "nodulemorph/error.hpp"

namespace nodulemorph {

namespace {

constexpr int kDirRow[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDirCol[8] = {1, 1, 0, -1, -1, -1, 0, 1};

int direction_index(int dr, int dc) {
  for (int d = 0; d < 8; ++d)
    if (kDirRow[d] == dr && kDirCol[d] == dc) return d;
  return -1;
}

// Component pixels on a raster covering its bounding box plus a one-pixel
// background margin.
class LocalRaster {
 public:
  explicit LocalRaster(const Component& c)
      : row0_(c.row_min - 1), col0_(c.col_min - 1),
        mask_(c.col_max - c.col_min + 3, c.row_max - c.row_min + 3) {
    for (const auto& p : c.pixels) mask_.set(p.row - row0_, p.col - col0_);
  }
  bool get(int row, int col) const { return mask_.get(row - row0_, col - col0_); }
  const BinaryMask& mask() const { return mask_; }

 private:
  int row0_, col0_;
  BinaryMask mask_;
};

std::int64_t cross(const Pixel& o, const Pixel& a, const Pixel& b) {
  // (col, row) treated as (x, y)
  return static_cast<std::int64_t>(a.col - o.col) * (b.row - o.row) -
         static_cast<std::int64_t>(a.row - o.row) * (b.col - o.col);
}

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t num, std::int64_t den) { return -floor_div(-num, den); }

}  // namespace

std::array<double, 2> MomentSet::principal_variances() const noexcept {
  const double a = covariance[0][0];
  const double b = covariance[0][1];
  const double c = covariance[1][1];
  const double half_diff = 0.5 * (a - c);
  const double l1 = 0.5 * (a + c) + std::sqrt(half_diff * half_diff + b * b);
  const double l2 = (a * c - b * b) / l1;
  return {l1, l2};
}

std::array<double, kFeatureCount> FeatureVector::values() const noexcept {
  return {area,         perimeter, convex_area, filled_area, solidity,
          form_factor,  eccentricity, aspect_ratio, hu[0], hu[1],
          hu[2],        hu[3],     hu[4],       hu[5],       hu[6]};
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<Component> out;
  std::vector<Pixel> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto idx = static_cast<std::size_t>(r) * w + c;
      if (!mask.at(r, c) || seen[idx]) continue;
      Component comp;
      comp.row_min = comp.row_max = r;
      comp.col_min = comp.col_max = c;
      seen[idx] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        Pixel p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        comp.row_min = std::min(comp.row_min, p.row);
        comp.row_max = std::max(comp.row_max, p.row);
        comp.col_min = std::min(comp.col_min, p.col);
        comp.col_max = std::max(comp.col_max, p.col);
        for (int d = 0; d < 8; ++d) {
          const int nr = p.row + kDirRow[d];
          const int nc = p.col + kDirCol[d];
          if (!mask.get(nr, nc)) continue;
          auto& s = seen[static_cast<std::size_t>(nr) * w + nc];
          if (s) continue;
          s = 1;
          stack.push_back({nr, nc});
        }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end());
      out.push_back(std::move(comp));
    }
  }
  return out;
}

Component largest_component(const BinaryMask& mask) {
  auto comps = connected_components(mask);
  if (comps.empty()) throw Error(ErrorKind::EmptyMask, "mask has no foreground pixels");
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (comps[i].size() > comps[best].size()) best = i;
  return std::move(comps[best]);
}

Contour trace_contour(const Component& component) {
  Contour contour;
  if (component.pixels.empty()) return contour;
  const LocalRaster raster(component);
  const Pixel start = component.first();
  contour.points.push_back(start);

  Pixel current = start;
  int backtrack = 4;  // west of the first pixel is background
  bool have_first_move = false;
  Pixel first_move{};
  const std::size_t limit = 4 * component.size() + 8;
  while (contour.points.size() <= limit) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (backtrack + k) % 8;
      if (raster.get(current.row + kDirRow[d], current.col + kDirCol[d])) {
        found = k;
        break;
      }
    }
    if (found < 0) return contour;  // isolated pixel
    const int d = (backtrack + found) % 8;
    const Pixel next{current.row + kDirRow[d], current.col + kDirCol[d]};
    const int prev = (backtrack + found - 1) % 8;
    const Pixel back{current.row + kDirRow[prev], current.col + kDirCol[prev]};
    if (!have_first_move) {
      have_first_move = true;
      first_move = next;
    } else if (current == start && next == first_move) {
      break;
    }
    contour.points.push_back(next);
    backtrack = direction_index(back.row - next.row, back.col - next.col);
    current = next;
  }
  if (contour.points.size() > 1 && contour.points.back() == start) contour.points.pop_back();
  return contour;
}

double perimeter(const Contour& contour) {
  const auto& pts = contour.points;
  if (pts.empty()) return 0.0;
  if (pts.size() == 1) return 4.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    const bool diagonal = a.row != b.row && a.col != b.col;
    total += diagonal ? std::numbers::sqrt2 : 1.0;
  }
  return total;
}

std::vector<Pixel> convex_hull(const std::vector<Pixel>& points) {
  std::vector<Pixel> pts = points;
  // Sort by x (col) then y (row).
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;

  std::vector<Pixel> hull;
  hull.reserve(2 * pts.size());
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
    hull.push_back(p);
  }
  const std::size_t lower = hull.size() + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), *it) <= 0) hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();
  return hull;
}

std::size_t convex_hull_area(const Component& component) {
  if (component.pixels.empty()) return 0;
  // The hull of the set equals the hull of each row's extreme pixels.
  std::vector<Pixel> extremes;
  for (std::size_t i = 0; i < component.pixels.size();) {
    std::size_t j = i;
    while (j + 1 < component.pixels.size() && component.pixels[j + 1].row == component.pixels[i].row) ++j;
    extremes.push_back(component.pixels[i]);
    if (j != i) extremes.push_back(component.pixels[j]);
    i = j + 1;
  }
  const auto hull = convex_hull(extremes);
  const std::size_t n = hull.size();
  std::size_t count = 0;
  for (int y = component.row_min; y <= component.row_max; ++y) {
    std::int64_t lo = INT64_MAX;
    std::int64_t hi = INT64_MIN;
    for (std::size_t i = 0; i < n; ++i) {
      const Pixel& a = hull[i];
      const Pixel& b = hull[(i + 1) % n];
      if (y < std::min(a.row, b.row) || y > std::max(a.row, b.row)) continue;
      if (a.row == b.row) {
        lo = std::min<std::int64_t>(lo, std::min(a.col, b.col));
        hi = std::max<std::int64_t>(hi, std::max(a.col, b.col));
        continue;
      }
      // x = a.col + (y - a.row)(b.col - a.col)/(b.row - a.row), exactly.
      std::int64_t den = b.row - a.row;
      std::int64_t num = static_cast<std::int64_t>(a.col) * den +
                         static_cast<std::int64_t>(y - a.row) * (b.col - a.col);
      if (den < 0) {
        den = -den;
        num = -num;
      }
      lo = std::min(lo, ceil_div(num, den));
      hi = std::max(hi, floor_div(num, den));
    }
    if (hi >= lo) count += static_cast<std::size_t>(hi - lo + 1);
  }
  return count;
}

std::size_t filled_area(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  std::deque<Pixel> queue;
  auto seed = [&](int r, int c) {
    auto idx = static_cast<std::size_t>(r) * w + c;
    if (!mask.at(r, c) && !outside[idx]) {
      outside[idx] = 1;
      queue.push_back({r, c});
    }
  };
  for (int c = 0; c < w; ++c) {
    seed(0, c);
    seed(h - 1, c);
  }
  for (int r = 0; r < h; ++r) {
    seed(r, 0);
    seed(r, w - 1);
  }
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  while (!queue.empty()) {
    Pixel p = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const int nr = p.row + dr[d];
      const int nc = p.col + dc[d];
      if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
      seed(nr, nc);
    }
  }
  return static_cast<std::size_t>(std::count(outside.begin(), outside.end(), std::uint8_t{0}));
}

std::size_t filled_area(const Component& component) {
  if (component.pixels.empty()) return 0;
  return filled_area(LocalRaster(component).mask());
}

MomentSet moments(const Component& component) {
  MomentSet m;
  for (const auto& px : component.pixels) {
    const double x = px.col;
    const double y = px.row;
    const double xp[4] = {1.0, x, x * x, x * x * x};
    const double yq[4] = {1.0, y, y * y, y * y * y};
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q) m.raw[p][q] += xp[p] * yq[q];
  }
  const double m00 = m.raw[0][0];
  m.centroid_col = m.raw[1][0] / m00;
  m.centroid_row = m.raw[0][1] / m00;
  for (const auto& px : component.pixels) {
    const double dx = px.col - m.centroid_col;
    const double dy = px.row - m.centroid_row;
    const double xp[4] = {1.0, dx, dx * dx, dx * dx * dx};
    const double yq[4] = {1.0, dy, dy * dy, dy * dy * dy};
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q) m.central[p][q] += xp[p] * yq[q];
  }
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q)
      if (p + q >= 2) m.normalized[p][q] = m.central[p][q] / std::pow(m00, 1.0 + (p + q) / 2.0);
  m.covariance[0][0] = m.central[0][2] / m00 + 1.0 / 12.0;
  m.covariance[1][1] = m.central[2][0] / m00 + 1.0 / 12.0;
  m.covariance[0][1] = m.covariance[1][0] = m.central[1][1] / m00;
  return m;
}

std::array<double, 7> hu_moments(const MomentSet& m) {
  const double m00 = m.m00();
  const double s2 = m00 * m00;
  const double s3 = std::pow(m00, 2.5);
  const double n20 = (m.central[2][0] + m00 / 12.0) / s2;
  const double n02 = (m.central[0][2] + m00 / 12.0) / s2;
  const double n11 = m.central[1][1] / s2;
  const double n30 = m.central[3][0] / s3;
  const double n03 = m.central[0][3] / s3;
  const double n21 = m.central[2][1] / s3;
  const double n12 = m.central[1][2] / s3;

  const double a = n30 + n12;
  const double b = n21 + n03;
  const double c = n30 - 3.0 * n12;
  const double d = 3.0 * n21 - n03;
  std::array<double, 7> hu{};
  hu[0] = n20 + n02;
  hu[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
  hu[2] = c * c + d * d;
  hu[3] = a * a + b * b;
  hu[4] = c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b);
  hu[5] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
  hu[6] = d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b);
  return hu;
}

FeatureResult extract_features_detailed(const BinaryMask& mask) {
  auto comps = connected_components(mask);
  if (comps.empty()) throw Error(ErrorKind::EmptyMask, "mask has no foreground pixels");
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (comps[i].size() > comps[best].size()) best = i;

  FeatureResult result;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (i != best) result.discarded_sizes.push_back(comps[i].size());

  const Component& comp = comps[best];
  FeatureVector& f = result.features;
  f.area = static_cast<double>(comp.size());
  f.perimeter = perimeter(trace_contour(comp));
  f.convex_area = static_cast<double>(convex_hull_area(comp));
  f.filled_area = static_cast<double>(filled_area(comp));
  f.solidity = f.area / f.convex_area;
  f.form_factor = 4.0 * std::numbers::pi * f.area / (f.perimeter * f.perimeter);
  const MomentSet m = moments(comp);
  const auto [major, minor] = m.principal_variances();
  f.eccentricity = std::sqrt(1.0 - minor / major);
  f.aspect_ratio = std::sqrt(major / minor);
  f.hu = hu_moments(m);
  return result;
}

FeatureVector extract_features(const BinaryMask& mask) { return extract_features_detailed(mask).features; }

}  // namespace nodulemorph
