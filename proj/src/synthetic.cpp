#include "nodulemorph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "nodulemorph/error.hpp"
#include "nodulemorph/rng.hpp"

namespace fs = std::filesystem;

namespace nodulemorph::synthetic {

BinaryMask disc(int width, int height, double center_row, double center_col, double radius) {
  BinaryMask m(width, height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double dr = r - center_row;
      const double dc = c - center_col;
      if (dr * dr + dc * dc <= radius * radius) m.set(r, c);
    }
  return m;
}

BinaryMask rectangle(int width, int height, int row, int col, int rows, int cols) {
  BinaryMask m(width, height);
  for (int r = row; r < row + rows; ++r)
    for (int c = col; c < col + cols; ++c) m.set(r, c);
  return m;
}

BinaryMask ellipse(int width, int height, double center_row, double center_col, double semi_major,
                   double semi_minor, double angle) {
  BinaryMask m(width, height);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double x = c - center_col, y = r - center_row;
      const double u = x * ca + y * sa;
      const double v = -x * sa + y * ca;
      if ((u * u) / (semi_major * semi_major) + (v * v) / (semi_minor * semi_minor) <= 1.0) m.set(r, c);
    }
  return m;
}

BinaryMask polygon(int width, int height, const std::vector<std::pair<double, double>>& vertices) {
  BinaryMask m(width, height);
  const std::size_t n = vertices.size();
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      bool inside = false;
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto [xi, yi] = vertices[i];
        const auto [xj, yj] = vertices[j];
        if ((yi > r) != (yj > r) && c < (xj - xi) * (r - yi) / (yj - yi) + xi) inside = !inside;
      }
      if (inside) m.set(r, c);
    }
  return m;
}

namespace {

GrayImage render_image(const BinaryMask& mask, Rng& rng, int inside_level) {
  GrayImage img(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) {
      const int base = mask.at(r, c) ? inside_level : 110;
      const int v = base + static_cast<int>(rng.below(31)) - 15;
      img.at(r, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  return img;
}

}  // namespace

void write_cohort(const fs::path& dir, const CohortOptions& options) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  std::ofstream labels(dir / "labels.csv");
  if (!labels) throw Error(ErrorKind::Io, "cannot write " + (dir / "labels.csv").string());
  labels << "sample_id,tirads\n";

  Rng rng(derive_seed(options.seed, "synthetic-cohort"));
  const int size = options.size;
  const double mid = (size - 1) / 2.0;
  const double max_r = size * 0.38;
  static const char* benign_codes[] = {"2", "3"};
  static const char* malignant_codes[] = {"4a", "4b", "5"};

  for (std::size_t i = 0; i < options.per_class; ++i) {
    // Benign: smooth ellipse.
    const double a = max_r * (0.6 + 0.4 * rng.uniform());
    const double b = a * (0.55 + 0.4 * rng.uniform());
    const double angle = std::numbers::pi * rng.uniform();
    const double dr = 4.0 * (rng.uniform() - 0.5), dc = 4.0 * (rng.uniform() - 0.5);
    BinaryMask m = ellipse(size, size, mid + dr, mid + dc, a, b, angle);
    char id[32];
    std::snprintf(id, sizeof id, "benign_%03zu", i);
    save_mask(m, dir / "masks" / (std::string(id) + ".png"));
    save_gray(render_image(m, rng, 90), dir / "images" / (std::string(id) + ".png"));
    labels << id << ',' << benign_codes[rng.below(2)] << '\n';
  }
  for (std::size_t i = 0; i < options.per_class; ++i) {
    // Malignant: star polygon with irregular spikes.
    const int spikes = 7 + static_cast<int>(rng.below(6));
    const double outer = max_r * (0.75 + 0.25 * rng.uniform());
    const double inner = outer * (0.4 + 0.15 * rng.uniform());
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    std::vector<std::pair<double, double>> verts;
    for (int s = 0; s < 2 * spikes; ++s) {
      const double t = phase + std::numbers::pi * s / spikes;
      const double radius = (s % 2 == 0 ? outer * (0.8 + 0.2 * rng.uniform()) : inner * (0.9 + 0.2 * rng.uniform()));
      verts.emplace_back(mid + radius * std::cos(t), mid + radius * std::sin(t));
    }
    BinaryMask m = polygon(size, size, verts);
    char id[32];
    std::snprintf(id, sizeof id, "malignant_%03zu", i);
    save_mask(m, dir / "masks" / (std::string(id) + ".png"));
    save_gray(render_image(m, rng, 70), dir / "images" / (std::string(id) + ".png"));
    labels << id << ',' << malignant_codes[rng.below(3)] << '\n';
  }
  if (!labels) throw Error(ErrorKind::Io, "cannot write " + (dir / "labels.csv").string());
}

}  // namespace nodulemorph::synthetic
