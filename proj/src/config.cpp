#include "nodulemorph/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nodulemorph/error.hpp"

namespace nodulemorph {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Error bad_value(std::string_view key, std::string_view value) {
  return Error(ErrorKind::Config, "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw bad_value(key, value);
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    throw bad_value(key, value);
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw bad_value(key, value);
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Config, what);
  };
  require(mask_threshold >= 0 && mask_threshold <= 254, "mask.threshold must be in [0, 254]");
  require(pipeline.k_folds >= 2 && pipeline.k_folds <= 100, "k_folds must be in [2, 100]");
  require(pipeline.smote_k >= 1, "smote.k_neighbors must be >= 1");
  require(pipeline.forest.n_trees >= 1 && pipeline.forest.n_trees <= 100000, "forest.n_trees must be in [1, 100000]");
  require(pipeline.forest.min_samples_leaf >= 1, "forest.min_samples_leaf must be >= 1");
  require(pipeline.forest.features_per_split <= 15, "forest.features_per_split must be in [0, 15]");
  require(pipeline.mlp.hidden >= 1 && pipeline.mlp.hidden <= 4096, "mlp.hidden must be in [1, 4096]");
  require(pipeline.mlp.batch >= 1, "mlp.batch must be >= 1");
  require(pipeline.mlp.learning_rate > 0.0 && pipeline.mlp.learning_rate <= 10.0, "mlp.lr must be in (0, 10]");
  require(pipeline.threads >= 1, "threads must be >= 1");
  require(roi.padding >= 0 && roi.padding <= 10000, "roi.padding must be in [0, 10000]");
  require(roi.size >= 1 && roi.size <= 4096, "roi.size must be in [1, 4096]");
}

void apply_setting(RunConfig& c, std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  auto& p = c.pipeline;
  if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "k_folds") p.k_folds = parse_integer<std::size_t>(key, value);
  else if (key == "threads") p.threads = parse_integer<std::size_t>(key, value);
  else if (key == "mask.threshold") c.mask_threshold = parse_integer<int>(key, value);
  else if (key == "mask.provenance") c.mask_provenance = value;
  else if (key == "smote.enabled") p.smote_rf = p.smote_mlp = parse_bool(key, value);
  else if (key == "smote.rf") p.smote_rf = parse_bool(key, value);
  else if (key == "smote.mlp") p.smote_mlp = parse_bool(key, value);
  else if (key == "smote.k_neighbors") p.smote_k = parse_integer<std::size_t>(key, value);
  else if (key == "forest.n_trees") p.forest.n_trees = parse_integer<std::size_t>(key, value);
  else if (key == "forest.max_depth") p.forest.max_depth = parse_integer<std::size_t>(key, value);
  else if (key == "forest.min_samples_leaf") p.forest.min_samples_leaf = parse_integer<std::size_t>(key, value);
  else if (key == "forest.features_per_split") p.forest.features_per_split = parse_integer<std::size_t>(key, value);
  else if (key == "forest.bootstrap") p.forest.bootstrap = parse_bool(key, value);
  else if (key == "mlp.hidden") p.mlp.hidden = parse_integer<std::size_t>(key, value);
  else if (key == "mlp.epochs") p.mlp.epochs = parse_integer<std::size_t>(key, value);
  else if (key == "mlp.batch") p.mlp.batch = parse_integer<std::size_t>(key, value);
  else if (key == "mlp.lr") p.mlp.learning_rate = parse_double(key, value);
  else if (key == "mlp.optimizer") {
    if (value == "adam") p.mlp.optimizer = Optimizer::Adam;
    else if (value == "sgd") p.mlp.optimizer = Optimizer::Sgd;
    else throw bad_value(key, value);
  }
  else if (key == "roi.padding") c.roi.padding = parse_integer<int>(key, value);
  else if (key == "roi.size") c.roi.size = parse_integer<int>(key, value);
  else if (key == "roi.square") c.roi.square = parse_bool(key, value);
  else throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(config, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string dump_config(const RunConfig& c) {
  const auto& p = c.pipeline;
  std::ostringstream out;
  out << "seed = " << c.seed << '\n'
      << "k_folds = " << p.k_folds << '\n'
      << "threads = " << p.threads << '\n'
      << "mask.threshold = " << c.mask_threshold << '\n'
      << "mask.provenance = " << c.mask_provenance << '\n'
      << "smote.rf = " << (p.smote_rf ? "true" : "false") << '\n'
      << "smote.mlp = " << (p.smote_mlp ? "true" : "false") << '\n'
      << "smote.k_neighbors = " << p.smote_k << '\n'
      << "forest.n_trees = " << p.forest.n_trees << '\n'
      << "forest.max_depth = " << p.forest.max_depth << '\n'
      << "forest.min_samples_leaf = " << p.forest.min_samples_leaf << '\n'
      << "forest.features_per_split = " << p.forest.features_per_split << '\n'
      << "forest.bootstrap = " << (p.forest.bootstrap ? "true" : "false") << '\n'
      << "mlp.hidden = " << p.mlp.hidden << '\n'
      << "mlp.epochs = " << p.mlp.epochs << '\n'
      << "mlp.batch = " << p.mlp.batch << '\n'
      << "mlp.lr = " << p.mlp.learning_rate << '\n'
      << "mlp.optimizer = " << (p.mlp.optimizer == Optimizer::Adam ? "adam" : "sgd") << '\n'
      << "roi.padding = " << c.roi.padding << '\n'
      << "roi.size = " << c.roi.size << '\n'
      << "roi.square = " << (c.roi.square ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace nodulemorph
