#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "nodulemorph/maskio.hpp"

namespace nodulemorph::synthetic {

/// Pixels whose centre satisfies (r - row)^2 + (c - col)^2 <= radius^2.
BinaryMask disc(int width, int height, double center_row, double center_col, double radius);

/// Axis-aligned block of `rows` x `cols` pixels with top-left at (row, col).
BinaryMask rectangle(int width, int height, int row, int col, int rows, int cols);

/// Pixel centres inside a rotated ellipse (angle in radians, measured from
/// the column axis).
BinaryMask ellipse(int width, int height, double center_row, double center_col, double semi_major,
                   double semi_minor, double angle);

/// Even-odd rasterization of a polygon given as (col, row) vertices.
BinaryMask polygon(int width, int height, const std::vector<std::pair<double, double>>& vertices);

struct CohortOptions {
  std::size_t per_class = 30;
  int size = 128;
  std::uint64_t seed = 42;
};

/// Writes images/, masks/ and labels.csv under `dir`: smooth ellipses
/// labeled benign (TI-RADS 2/3) and spiculated star polygons labeled
/// malignant (TI-RADS 4a/4b/5).
void write_cohort(const std::filesystem::path& dir, const CohortOptions& options);

}  // namespace nodulemorph::synthetic
