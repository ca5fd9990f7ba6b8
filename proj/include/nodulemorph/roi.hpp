#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "nodulemorph/maskio.hpp"

namespace nodulemorph {

/// Inclusive pixel bounds.
struct BoundingBox {
  int row_min = 0;
  int col_min = 0;
  int row_max = 0;
  int col_max = 0;

  int height() const noexcept { return row_max - row_min + 1; }
  int width() const noexcept { return col_max - col_min + 1; }
  bool contains(int row, int col) const noexcept {
    return row >= row_min && row <= row_max && col >= col_min && col <= col_max;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Float raster produced by resizing.
struct FloatRaster {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major

  float at(int row, int col) const noexcept {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

inline constexpr std::array<double, 3> kImageNetMean = {0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd = {0.229, 0.224, 0.225};

/// Channel-major (c, row, col) float tensor of shape 3 x size x size.
struct RoiTensor {
  int size = 224;
  std::vector<float> values;
  std::string sample_id;
  BoundingBox box;
  std::array<double, 3> mean = kImageNetMean;
  std::array<double, 3> stddev = kImageNetStd;

  float at(int channel, int row, int col) const noexcept {
    return values[(static_cast<std::size_t>(channel) * size + row) * size + col];
  }
};

/// Tight box around the largest component.
BoundingBox bounding_box(const BinaryMask& mask);

/// Moves every side outward by `padding`, then clamps to the image.
BoundingBox expand_and_clamp(const BoundingBox& box, int padding, int image_width, int image_height);

/// Grows the shorter side symmetrically so the box is square where the
/// image allows it, shifting inward at borders.
BoundingBox make_square(const BoundingBox& box, int image_width, int image_height);

/// Bilinear resize of the box region with corner-aligned sampling: output
/// sample i maps to source offset i * (in - 1) / (out - 1).
FloatRaster crop_resize(const GrayImage& image, const BoundingBox& box, int size = 224);

/// Replicates gray to three channels and applies per-channel
/// (gray / 255 - mean) / std.
RoiTensor normalize(const FloatRaster& gray);

/// Inverse of normalize for one channel value.
double denormalize(double value, int channel);

/// Writes one JSON header line then little-endian float32 payload in
/// channel-row-col order.
void export_tensor(const RoiTensor& tensor, const std::filesystem::path& path);
RoiTensor import_tensor(const std::filesystem::path& path);

struct RoiOptions {
  int padding = 10;
  int size = 224;
  bool square = false;
};

/// Full preprocessing for one image/mask pair.
RoiTensor extract_roi(const GrayImage& image, const BinaryMask& mask, const RoiOptions& options,
                      const std::string& sample_id = {});

}  // namespace nodulemorph
