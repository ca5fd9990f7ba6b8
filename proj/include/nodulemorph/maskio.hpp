#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nodulemorph {

/// Foreground/background raster, row-major, one byte (0 or 1) per pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty_raster() const noexcept { return width_ == 0 || height_ == 0; }

  bool at(int row, int col) const noexcept {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  /// Out-of-bounds reads return background.
  bool get(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_ && at(row, col);
  }
  void set(int row, int col, bool value = true) noexcept {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }

  std::size_t foreground_count() const noexcept;
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// 8-bit single-channel image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint8_t at(int row, int col) const noexcept {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::uint8_t& at(int row, int col) noexcept {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class ClassLabel : std::uint8_t { Benign = 0, Malignant = 1 };

const char* to_string(ClassLabel label) noexcept;

/// Reads a PNG or PGM/PPM raster; multi-channel rasters keep channel 0.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG (or binary PGM when the extension is .pgm).
void save_gray(const GrayImage& image, const std::filesystem::path& path);

/// Foreground iff intensity > threshold.
BinaryMask binarize(const GrayImage& image, int threshold = 127);
BinaryMask load_mask(const std::filesystem::path& path, int threshold = 127);

/// Writes foreground as 255 and background as 0.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// TI-RADS category to the binary label: 1-3 benign, 4-5 malignant.
/// Subcategory letters ("4a") follow their leading digit.
ClassLabel map_tirads(std::string_view category);

struct Sample {
  std::string sample_id;
  std::optional<GrayImage> image;
  BinaryMask mask;
  std::optional<ClassLabel> label;
  std::string tirads;  // raw category string when labeled
};

struct ClassHistogram {
  std::size_t benign = 0;
  std::size_t malignant = 0;
  std::size_t total() const noexcept { return benign + malignant; }
};

class DatasetCatalog {
 public:
  DatasetCatalog() = default;
  /// Throws Format if two samples share an id.
  explicit DatasetCatalog(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t labeled_count() const noexcept;
  ClassHistogram histogram() const noexcept;

  /// Non-fatal problems found while loading (unpaired rows, bad files).
  std::vector<std::string> warnings;
  /// Sample ids that had a label but no usable mask.
  std::vector<std::string> skipped;
  /// Free-form record of where the masks came from (ground truth, model).
  std::string mask_provenance = "unspecified";

  std::string summary_json(int indent = 2) const;

 private:
  std::vector<Sample> samples_;
};

struct CatalogOptions {
  std::optional<std::filesystem::path> image_dir;
  std::optional<std::filesystem::path> labels_csv;
  int threshold = 127;
  std::size_t threads = 1;
  std::string mask_provenance = "unspecified";
};

/// Pairs masks with images by case-insensitive filename stem and attaches
/// labels from a `sample_id,tirads` CSV.
DatasetCatalog load_catalog(const std::filesystem::path& mask_dir,
                            const CatalogOptions& options = {});

/// Raster files (.png, .pgm, .ppm, .pnm) in a directory keyed by lowercased
/// stem, sorted. Throws Format on duplicate stems.
std::map<std::string, std::filesystem::path> list_rasters(
    const std::filesystem::path& dir);

std::string lowercase(std::string_view s);

}  // namespace nodulemorph
