#include "nodulemorph/roi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "nodulemorph/error.hpp"
#include "nodulemorph/morphology.hpp"

namespace nodulemorph {

BoundingBox bounding_box(const BinaryMask& mask) {
  const Component comp = largest_component(mask);
  return {comp.row_min, comp.col_min, comp.row_max, comp.col_max};
}

BoundingBox expand_and_clamp(const BoundingBox& box, int padding, int image_width, int image_height) {
  if (padding < 0) throw Error(ErrorKind::Config, "padding must be non-negative");
  return {std::max(0, box.row_min - padding), std::max(0, box.col_min - padding),
          std::min(image_height - 1, box.row_max + padding), std::min(image_width - 1, box.col_max + padding)};
}

BoundingBox make_square(const BoundingBox& box, int image_width, int image_height) {
  BoundingBox out = box;
  auto grow = [](int lo, int hi, int target, int limit) -> std::pair<int, int> {
    target = std::min(target, limit);
    int extra = target - (hi - lo + 1);
    if (extra <= 0) return {lo, hi};
    lo -= extra / 2;
    hi += extra - extra / 2;
    if (lo < 0) {
      hi -= lo;
      lo = 0;
    }
    if (hi > limit - 1) {
      lo -= hi - (limit - 1);
      hi = limit - 1;
    }
    return {std::max(lo, 0), hi};
  };
  const int side = std::max(box.width(), box.height());
  std::tie(out.row_min, out.row_max) = grow(box.row_min, box.row_max, side, image_height);
  std::tie(out.col_min, out.col_max) = grow(box.col_min, box.col_max, side, image_width);
  return out;
}

FloatRaster crop_resize(const GrayImage& image, const BoundingBox& box, int size) {
  if (size < 1) throw Error(ErrorKind::Config, "resize target must be positive");
  if (box.row_min < 0 || box.col_min < 0 || box.row_max >= image.height() || box.col_max >= image.width() ||
      box.row_min > box.row_max || box.col_min > box.col_max)
    throw Error(ErrorKind::Shape, "crop box outside image");
  const int in_h = box.height();
  const int in_w = box.width();
  FloatRaster out{size, size, std::vector<float>(static_cast<std::size_t>(size) * size)};

  auto source = [size](int i, int in) {
    return size == 1 ? 0.0 : static_cast<double>(i) * (in - 1) / (size - 1);
  };
  for (int r = 0; r < size; ++r) {
    const double sy = source(r, in_h);
    const int y0 = std::min(static_cast<int>(sy), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - y0;
    for (int c = 0; c < size; ++c) {
      const double sx = source(c, in_w);
      const int x0 = std::min(static_cast<int>(sx), in_w - 1);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double fx = sx - x0;
      const double p00 = image.at(box.row_min + y0, box.col_min + x0);
      const double p01 = image.at(box.row_min + y0, box.col_min + x1);
      const double p10 = image.at(box.row_min + y1, box.col_min + x0);
      const double p11 = image.at(box.row_min + y1, box.col_min + x1);
      // a + f(b - a) keeps constants exact and stays within [a, b].
      const double top = p00 + fx * (p01 - p00);
      const double bottom = p10 + fx * (p11 - p10);
      out.values[static_cast<std::size_t>(r) * size + c] = static_cast<float>(top + fy * (bottom - top));
    }
  }
  return out;
}

RoiTensor normalize(const FloatRaster& gray) {
  if (gray.width != gray.height) throw Error(ErrorKind::Shape, "normalize expects a square raster");
  RoiTensor t;
  t.size = gray.width;
  const std::size_t plane = static_cast<std::size_t>(t.size) * t.size;
  t.values.resize(3 * plane);
  for (int ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < plane; ++i)
      t.values[ch * plane + i] =
          static_cast<float>((gray.values[i] / 255.0 - t.mean[ch]) / t.stddev[ch]);
  return t;
}

double denormalize(double value, int channel) {
  return (value * kImageNetStd.at(channel) + kImageNetMean.at(channel)) * 255.0;
}

void export_tensor(const RoiTensor& tensor, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["shape"] = {3, tensor.size, tensor.size};
  header["dtype"] = "float32";
  header["byte_order"] = "little";
  header["layout"] = "CHW";
  header["sample_id"] = tensor.sample_id;
  header["box"] = {tensor.box.row_min, tensor.box.col_min, tensor.box.row_max, tensor.box.col_max};
  header["mean"] = tensor.mean;
  header["std"] = tensor.stddev;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  // Header padded with spaces to a multiple of 512 bytes so every tensor of
  // one size has the same file length and an aligned payload.
  std::string text = header.dump();
  constexpr std::size_t kAlign = 512;
  if (const std::size_t used = (text.size() + 1) % kAlign; used != 0) text.append(kAlign - used, ' ');
  out << text << '\n';
  std::vector<char> payload(tensor.values.size() * 4);
  for (std::size_t i = 0; i < tensor.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(tensor.values[i]);
    for (int b = 0; b < 4; ++b) payload[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

RoiTensor import_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, path.string() + ": missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": bad header: " + e.what());
  }
  RoiTensor t;
  const auto shape = header.at("shape").get<std::vector<int>>();
  if (shape.size() != 3 || shape[0] != 3 || shape[1] != shape[2] || shape[1] < 1)
    throw Error(ErrorKind::Format, path.string() + ": unsupported shape");
  t.size = shape[1];
  t.sample_id = header.value("sample_id", "");
  const auto box = header.at("box").get<std::vector<int>>();
  if (box.size() == 4) t.box = {box[0], box[1], box[2], box[3]};
  t.mean = header.at("mean").get<std::array<double, 3>>();
  t.stddev = header.at("std").get<std::array<double, 3>>();
  const std::size_t n = 3 * static_cast<std::size_t>(t.size) * t.size;
  std::vector<unsigned char> payload(n * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw Error(ErrorKind::Format, path.string() + ": truncated payload");
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[i * 4 + b]) << (8 * b);
    t.values[i] = std::bit_cast<float>(bits);
  }
  return t;
}

RoiTensor extract_roi(const GrayImage& image, const BinaryMask& mask, const RoiOptions& options,
                      const std::string& sample_id) {
  if (image.width() != mask.width() || image.height() != mask.height())
    throw Error(ErrorKind::Shape, "image and mask dimensions differ");
  BoundingBox box = expand_and_clamp(bounding_box(mask), options.padding, image.width(), image.height());
  if (options.square) box = make_square(box, image.width(), image.height());
  RoiTensor t = normalize(crop_resize(image, box, options.size));
  t.sample_id = sample_id;
  t.box = box;
  return t;
}

}  // namespace nodulemorph
