#include "nodulemorph/maskio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <json.hpp>
#include <set>
#include <sstream>

#include "nodulemorph/error.hpp"
#include "nodulemorph/parallel.hpp"

namespace fs = std::filesystem;

namespace nodulemorph {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorKind::Shape, "negative mask dimensions");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t BinaryMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorKind::Shape, "negative image dimensions");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

const char* to_string(ClassLabel label) noexcept {
  return label == ClassLabel::Benign ? "Benign" : "Malignant";
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return ss.str();
}

GrayImage decode_png(const std::string& bytes, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::Format, path.string() + ": " + image.message);
  }
  // Keep the native channel layout (8-bit, palette expanded) so that
  // channel 0 is read as stored rather than luminance-converted.
  image.format &= ~(PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP);
  const int channels = PNG_IMAGE_SAMPLE_CHANNELS(image.format);
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw Error(ErrorKind::Format, path.string() + ": zero-dimension image");
  }
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Format, path.string() + ": " + msg);
  }
  const int offset = (image.format & PNG_FORMAT_FLAG_AFIRST) ? 1 : 0;
  GrayImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c)
      out.at(r, c) = buffer[(static_cast<std::size_t>(r) * out.width() + c) * channels + offset];
  return out;
}

// PGM (P2/P5) and PPM (P3/P6) with maxval <= 255.
GrayImage decode_pnm(const std::string& bytes, const fs::path& path) {
  std::size_t pos = 2;
  auto fail = [&](const std::string& why) {
    return Error(ErrorKind::Format, path.string() + ": " + why);
  };
  auto next_int = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
      throw fail("truncated header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000) throw fail("header value too large");
      ++pos;
    }
    return v;
  };
  const char kind = bytes[1];
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;
  const bool binary = (kind == '5' || kind == '6');
  const long width = next_int();
  const long height = next_int();
  const long maxval = next_int();
  if (width == 0 || height == 0) throw fail("zero-dimension image");
  if (maxval < 1 || maxval > 255) throw fail("only 8-bit PNM is supported");
  GrayImage out(static_cast<int>(width), static_cast<int>(height));
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + n * channels) throw fail("truncated pixel data");
    for (std::size_t i = 0; i < n; ++i)
      out.at(static_cast<int>(i / width), static_cast<int>(i % width)) =
          static_cast<std::uint8_t>(bytes[pos + i * channels]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v = next_int();
      for (int ch = 1; ch < channels; ++ch) next_int();
      if (v > maxval) throw fail("sample exceeds maxval");
      out.at(static_cast<int>(i / width), static_cast<int>(i % width)) = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (int r = 0; r < out.height(); ++r)
      for (int c = 0; c < out.width(); ++c)
        out.at(r, c) = static_cast<std::uint8_t>((out.at(r, c) * 255 + maxval / 2) / maxval);
  }
  return out;
}

bool is_raster_extension(const fs::path& p) {
  const auto ext = lowercase(p.extension().string());
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

struct LabelRow {
  std::string sample_id;
  std::string tirads;
};

std::vector<LabelRow> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open labels file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, path.string() + ": empty labels file");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (lowercase(header[i]) == name) return i;
    throw Error(ErrorKind::Format, path.string() + ": missing column '" + name + "'");
  };
  const std::size_t id_col = find_col("sample_id");
  const std::size_t cat_col = find_col("tirads");
  std::vector<LabelRow> rows;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() <= std::max(id_col, cat_col))
      throw Error(ErrorKind::Format,
                  path.string() + ":" + std::to_string(line_no) + ": too few columns");
    LabelRow row{fields[id_col], fields[cat_col]};
    if (!seen.insert(lowercase(row.sample_id)).second)
      throw Error(ErrorKind::Format, path.string() + ": duplicate sample_id '" + row.sample_id + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

GrayImage load_gray(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::string bytes = read_file(path);
  if (bytes.size() >= 8 && static_cast<unsigned char>(bytes[0]) == 0x89 && bytes.compare(1, 3, "PNG") == 0)
    return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && std::string_view("2356").find(bytes[1]) != std::string_view::npos)
    return decode_pnm(bytes, path);
  throw Error(ErrorKind::Format, path.string() + ": not a PNG or PNM raster");
}

void save_gray(const GrayImage& image, const fs::path& path) {
  if (image.width() == 0 || image.height() == 0)
    throw Error(ErrorKind::Format, "refusing to write zero-dimension image " + path.string());
  if (lowercase(path.extension().string()) == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels().data()),
              static_cast<std::streamsize>(image.pixels().size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return;
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels().data(), 0, nullptr))
    throw Error(ErrorKind::Io, "cannot write " + path.string() + ": " + png.message);
}

BinaryMask binarize(const GrayImage& image, int threshold) {
  BinaryMask mask(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c)
      if (image.at(r, c) > threshold) mask.set(r, c);
  return mask;
}

BinaryMask load_mask(const fs::path& path, int threshold) {
  return binarize(load_gray(path), threshold);
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
  GrayImage image(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      image.at(r, c) = mask.at(r, c) ? 255 : 0;
  save_gray(image, path);
}

ClassLabel map_tirads(std::string_view category) {
  const std::string s = trim(category);
  auto fail = [&] {
    return Error(ErrorKind::Label, "unrecognized TI-RADS category '" + std::string(category) + "'");
  };
  if (s.empty() || s.size() > 2) throw fail();
  if (s.size() == 2 && !std::isalpha(static_cast<unsigned char>(s[1]))) throw fail();
  switch (s[0]) {
    case '1':
    case '2':
    case '3':
      return ClassLabel::Benign;
    case '4':
    case '5':
      return ClassLabel::Malignant;
    default:
      throw fail();
  }
}

DatasetCatalog::DatasetCatalog(std::vector<Sample> samples) : samples_(std::move(samples)) {
  std::set<std::string> ids;
  for (const auto& s : samples_)
    if (!ids.insert(s.sample_id).second)
      throw Error(ErrorKind::Format, "duplicate sample_id '" + s.sample_id + "'");
}

std::size_t DatasetCatalog::labeled_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [](const Sample& s) { return s.label.has_value(); }));
}

ClassHistogram DatasetCatalog::histogram() const noexcept {
  ClassHistogram h;
  for (const auto& s : samples_) {
    if (!s.label) continue;
    (*s.label == ClassLabel::Benign ? h.benign : h.malignant)++;
  }
  return h;
}

std::string DatasetCatalog::summary_json(int indent) const {
  const auto h = histogram();
  nlohmann::ordered_json j;
  j["samples"] = samples_.size();
  j["labeled"] = labeled_count();
  j["with_image"] = std::count_if(samples_.begin(), samples_.end(),
                                  [](const Sample& s) { return s.image.has_value(); });
  j["histogram"] = {{"Benign", h.benign}, {"Malignant", h.malignant}};
  j["mask_provenance"] = mask_provenance;
  j["skipped"] = skipped;
  j["warnings"] = warnings;
  return j.dump(indent);
}

std::map<std::string, fs::path> list_rasters(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_raster_extension(entry.path())) continue;
    auto key = lowercase(entry.path().stem().string());
    if (!out.emplace(key, entry.path()).second)
      throw Error(ErrorKind::Format, "duplicate sample_id '" + entry.path().stem().string() + "' in " +
                                         dir.string());
  }
  return out;
}

DatasetCatalog load_catalog(const fs::path& mask_dir, const CatalogOptions& options) {
  const auto masks = list_rasters(mask_dir);
  std::map<std::string, fs::path> images;
  if (options.image_dir) images = list_rasters(*options.image_dir);

  std::vector<std::string> warnings;
  std::vector<std::string> skipped;
  std::map<std::string, LabelRow> labels;
  if (options.labels_csv) {
    for (auto& row : read_labels(*options.labels_csv)) {
      auto key = lowercase(row.sample_id);
      if (!masks.count(key)) {
        warnings.push_back("label row '" + row.sample_id + "' has no mask file");
        skipped.push_back(row.sample_id);
        continue;
      }
      labels.emplace(std::move(key), std::move(row));
    }
  }
  if (masks.empty()) warnings.push_back("no mask files found in " + mask_dir.string());

  std::vector<std::pair<std::string, fs::path>> entries(masks.begin(), masks.end());
  std::vector<std::optional<Sample>> loaded(entries.size());
  std::vector<std::string> per_file_warning(entries.size());
  std::vector<bool> per_file_skipped(entries.size(), false);

  parallel_for(entries.size(), options.threads, [&](std::size_t i) {
    const auto& [key, path] = entries[i];
    Sample sample;
    sample.sample_id = path.stem().string();
    auto label_it = labels.find(key);
    try {
      sample.mask = load_mask(path, options.threshold);
    } catch (const Error& e) {
      per_file_warning[i] = std::string("skipping mask: ") + e.what();
      per_file_skipped[i] = label_it != labels.end();
      return;
    }
    if (label_it != labels.end()) {
      sample.label = map_tirads(label_it->second.tirads);
      sample.tirads = label_it->second.tirads;
    }
    if (auto img = images.find(key); img != images.end()) {
      try {
        auto image = load_gray(img->second);
        if (image.width() != sample.mask.width() || image.height() != sample.mask.height())
          per_file_warning[i] = "image " + img->second.string() + " does not match mask dimensions; ignored";
        else
          sample.image = std::move(image);
      } catch (const Error& e) {
        per_file_warning[i] = std::string("ignoring image: ") + e.what();
      }
    }
    loaded[i] = std::move(sample);
  });

  std::vector<Sample> samples;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!per_file_warning[i].empty()) warnings.push_back(per_file_warning[i]);
    if (per_file_skipped[i]) skipped.push_back(entries[i].second.stem().string());
    if (loaded[i]) samples.push_back(std::move(*loaded[i]));
  }
  DatasetCatalog catalog(std::move(samples));
  catalog.warnings = std::move(warnings);
  catalog.skipped = std::move(skipped);
  catalog.mask_provenance = options.mask_provenance;
  return catalog;
}

}  // namespace nodulemorph
