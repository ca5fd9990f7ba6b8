#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <numeric>

#include "nodulemorph/error.hpp"
#include "nodulemorph/learn.hpp"
#include "nodulemorph/parallel.hpp"
#include "nodulemorph/rng.hpp"

namespace nodulemorph {

namespace {

constexpr int kForestFormatVersion = 1;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child Gini numerator
};

double gini_weighted(double benign, double malignant) {
  const double n = benign + malignant;
  if (n == 0.0) return 0.0;
  // n * gini = n - (b^2 + m^2) / n
  return n - (benign * benign + malignant * malignant) / n;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& rows, std::span<const ClassLabel> labels, const ForestConfig& config,
              std::size_t features_per_split, Rng& rng)
      : rows_(rows), labels_(labels), config_(config), mtry_(features_per_split), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    tree_.nodes.clear();
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& sample, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::uint32_t benign = 0, malignant = 0;
    for (auto i : sample) (labels_[i] == ClassLabel::Benign ? benign : malignant)++;
    tree_.nodes[id].benign = benign;
    tree_.nodes[id].malignant = malignant;

    const bool pure = benign == 0 || malignant == 0;
    const bool depth_capped = config_.max_depth != 0 && depth >= config_.max_depth;
    if (pure || depth_capped || sample.size() < 2 * config_.min_samples_leaf) return id;

    const Split split = find_split(sample, benign, malignant);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : sample) (rows_(i, split.feature) <= split.threshold ? left : right).push_back(i);
    sample.clear();
    sample.shrink_to_fit();

    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const int l = grow(left, depth + 1);
    tree_.nodes[id].left = l;
    const int r = grow(right, depth + 1);
    tree_.nodes[id].right = r;
    return id;
  }

  // Draws features in random order and evaluates them until mtry features
  // that vary within the node have been searched.
  Split find_split(const std::vector<std::size_t>& sample, std::uint32_t benign, std::uint32_t malignant) {
    const std::size_t d = rows_.cols();
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order.begin(), order.end(), rng_);

    Split best;
    std::size_t searched = 0;
    std::vector<std::pair<double, ClassLabel>> values(sample.size());
    for (int f : order) {
      if (searched >= mtry_) break;
      for (std::size_t k = 0; k < sample.size(); ++k) values[k] = {rows_(sample[k], f), labels_[sample[k]]};
      std::sort(values.begin(), values.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (values.front().first == values.back().first) continue;
      ++searched;

      double left_b = 0, left_m = 0;
      const std::size_t n = values.size();
      for (std::size_t k = 0; k + 1 < n; ++k) {
        (values[k].second == ClassLabel::Benign ? left_b : left_m) += 1.0;
        if (values[k].first == values[k + 1].first) continue;
        const std::size_t n_left = k + 1;
        if (n_left < config_.min_samples_leaf || n - n_left < config_.min_samples_leaf) continue;
        const double impurity = gini_weighted(left_b, left_m) + gini_weighted(benign - left_b, malignant - left_m);
        if (best.feature < 0 || impurity < best.impurity) {
          double mid = values[k].first + (values[k + 1].first - values[k].first) / 2.0;
          if (mid >= values[k + 1].first) mid = values[k].first;
          best = {f, mid, impurity};
        }
      }
    }
    return best;
  }

  const Matrix& rows_;
  std::span<const ClassLabel> labels_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng& rng_;
  DecisionTree tree_;
};

nlohmann::ordered_json node_to_json(const DecisionTree& tree, int id) {
  const TreeNode& n = tree.nodes[id];
  nlohmann::ordered_json j;
  if (n.is_leaf()) {
    j["counts"] = {n.benign, n.malignant};
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["counts"] = {n.benign, n.malignant};
  j["left"] = node_to_json(tree, n.left);
  j["right"] = node_to_json(tree, n.right);
  return j;
}

int node_from_json(DecisionTree& tree, const nlohmann::json& j) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const auto counts = j.at("counts").get<std::vector<std::uint32_t>>();
  if (counts.size() != 2) throw Error(ErrorKind::Format, "tree node counts must have two entries");
  tree.nodes[id].benign = counts[0];
  tree.nodes[id].malignant = counts[1];
  if (j.contains("feature")) {
    tree.nodes[id].feature = j.at("feature").get<int>();
    tree.nodes[id].threshold = j.at("threshold").get<double>();
    const int l = node_from_json(tree, j.at("left"));
    tree.nodes[id].left = l;
    const int r = node_from_json(tree, j.at("right"));
    tree.nodes[id].right = r;
  } else if (counts[0] == 0 && counts[1] == 0) {
    throw Error(ErrorKind::Format, "leaf with no samples");
  }
  return id;
}

}  // namespace

ClassLabel DecisionTree::predict(std::span<const double> row) const {
  int id = 0;
  while (!nodes[id].is_leaf()) id = row[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
  return nodes[id].malignant >= nodes[id].benign ? ClassLabel::Malignant : ClassLabel::Benign;
}

std::size_t DecisionTree::depth() const {
  std::function<std::size_t(int)> walk = [&](int id) -> std::size_t {
    if (nodes[id].is_leaf()) return 0;
    return 1 + std::max(walk(nodes[id].left), walk(nodes[id].right));
  };
  return nodes.empty() ? 0 : walk(0);
}

ForestModel train_forest(const Matrix& rows, std::span<const ClassLabel> labels, const ForestConfig& config,
                         std::uint64_t seed, std::size_t threads) {
  if (rows.rows() != labels.size()) throw Error(ErrorKind::Shape, "row and label counts differ");
  if (rows.rows() < 2) throw Error(ErrorKind::Training, "forest needs at least 2 rows");
  const bool has_benign = std::find(labels.begin(), labels.end(), ClassLabel::Benign) != labels.end();
  const bool has_malignant = std::find(labels.begin(), labels.end(), ClassLabel::Malignant) != labels.end();
  if (!has_benign || !has_malignant) throw Error(ErrorKind::Training, "forest training data contains a single class");
  if (config.n_trees < 1) throw Error(ErrorKind::Config, "n_trees must be >= 1");
  if (config.min_samples_leaf < 1) throw Error(ErrorKind::Config, "min_samples_leaf must be >= 1");

  ForestModel model;
  model.config = config;
  model.seed = seed;
  model.n_features = rows.cols();
  const std::size_t d = rows.cols();
  std::size_t mtry = config.features_per_split;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  mtry = std::clamp<std::size_t>(mtry, 1, d);
  model.config.features_per_split = mtry;

  const std::size_t n = rows.rows();
  model.trees.resize(config.n_trees);
  std::vector<std::vector<std::uint8_t>> in_bag(config.n_trees);
  parallel_for(config.n_trees, threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, "tree", t));
    std::vector<std::size_t> sample(n);
    in_bag[t].assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sample[i] = config.bootstrap ? rng.below(n) : i;
      in_bag[t][sample[i]] = 1;
    }
    TreeBuilder builder(rows, labels, config, mtry, rng);
    model.trees[t] = builder.build(std::move(sample));
  });

  if (config.bootstrap) {
    std::size_t evaluated = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t votes = 0, malignant = 0;
      for (std::size_t t = 0; t < config.n_trees; ++t) {
        if (in_bag[t][i]) continue;
        ++votes;
        if (model.trees[t].predict(rows.row(i)) == ClassLabel::Malignant) ++malignant;
      }
      if (votes == 0) continue;
      ++evaluated;
      const ClassLabel vote = 2 * malignant >= votes ? ClassLabel::Malignant : ClassLabel::Benign;
      if (vote == labels[i]) ++correct;
    }
    if (evaluated > 0) model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(evaluated);
  }
  return model;
}

Prediction predict_forest(const ForestModel& model, std::span<const double> row) {
  if (row.size() != model.n_features)
    throw Error(ErrorKind::Shape, "forest expects " + std::to_string(model.n_features) + " features, got " +
                                      std::to_string(row.size()));
  std::size_t malignant = 0;
  for (const auto& tree : model.trees)
    if (tree.predict(row) == ClassLabel::Malignant) ++malignant;
  Prediction p;
  p.score = static_cast<double>(malignant) / static_cast<double>(model.trees.size());
  p.label = 2 * malignant >= model.trees.size() ? ClassLabel::Malignant : ClassLabel::Benign;
  return p;
}

std::string ForestModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "nodulemorph.forest";
  j["version"] = kForestFormatVersion;
  j["seed"] = seed;
  j["n_features"] = n_features;
  j["config"] = {{"n_trees", config.n_trees},
                 {"max_depth", config.max_depth},
                 {"min_samples_leaf", config.min_samples_leaf},
                 {"features_per_split", config.features_per_split},
                 {"bootstrap", config.bootstrap}};
  j["oob_accuracy"] = oob_accuracy ? nlohmann::ordered_json(*oob_accuracy) : nlohmann::ordered_json(nullptr);
  auto& trees_json = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& tree : trees) trees_json.push_back(node_to_json(tree, 0));
  return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "nodulemorph.forest" || j.at("version").get<int>() != kForestFormatVersion)
      throw Error(ErrorKind::Format, "not a version-1 forest document");
    ForestModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<std::size_t>();
    m.config.max_depth = c.at("max_depth").get<std::size_t>();
    m.config.min_samples_leaf = c.at("min_samples_leaf").get<std::size_t>();
    m.config.features_per_split = c.at("features_per_split").get<std::size_t>();
    m.config.bootstrap = c.at("bootstrap").get<bool>();
    if (!j.at("oob_accuracy").is_null()) m.oob_accuracy = j.at("oob_accuracy").get<double>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      node_from_json(tree, t);
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.empty()) throw Error(ErrorKind::Format, "forest has no trees");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad forest document: ") + e.what());
  }
}

}  // namespace nodulemorph
