#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nodulemorph/maskio.hpp"
#include "nodulemorph/rng.hpp"

namespace fixtures {

using nodulemorph::BinaryMask;

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("nodulemorph_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Mask from rows of '#' (foreground) and '.' (background).
inline BinaryMask from_rows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (rows[r][c] == '#') m.set(r, c);
  return m;
}

/// Clockwise 90-degree raster rotation.
inline BinaryMask rotate90(const BinaryMask& m) {
  BinaryMask out(m.height(), m.width());
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at(r, c)) out.set(c, m.height() - 1 - r);
  return out;
}

/// Copies the mask into a larger raster at (dr, dc).
inline BinaryMask translate(const BinaryMask& m, int dr, int dc, int width, int height) {
  BinaryMask out(width, height);
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at(r, c)) out.set(r + dr, c + dc);
  return out;
}

/// Nearest-neighbour integer upscale.
inline BinaryMask upscale(const BinaryMask& m, int k) {
  BinaryMask out(m.width() * k, m.height() * k);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c)
      if (m.at(r / k, c / k)) out.set(r, c);
  return out;
}

/// Random 8-connected blob grown from the raster centre.
inline BinaryMask random_blob(std::uint64_t seed, int size, int pixels) {
  nodulemorph::Rng rng(seed);
  BinaryMask m(size, size);
  std::vector<std::pair<int, int>> frontier{{size / 2, size / 2}};
  m.set(size / 2, size / 2);
  int count = 1;
  while (count < pixels) {
    auto [r, c] = frontier[rng.below(frontier.size())];
    const int nr = r + static_cast<int>(rng.below(3)) - 1;
    const int nc = c + static_cast<int>(rng.below(3)) - 1;
    if (nr < 1 || nc < 1 || nr >= size - 1 || nc >= size - 1 || m.at(nr, nc)) continue;
    m.set(nr, nc);
    frontier.emplace_back(nr, nc);
    ++count;
  }
  return m;
}

/// Random mask with each pixel set with probability p.
inline BinaryMask random_noise(std::uint64_t seed, int width, int height, double p) {
  nodulemorph::Rng rng(seed);
  BinaryMask m(width, height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (rng.uniform() < p) m.set(r, c);
  return m;
}

}  // namespace fixtures
