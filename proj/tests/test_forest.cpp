#include <gtest/gtest.h>

#include <cmath>

#include "learn_fixtures.hpp"
#include "nodulemorph/error.hpp"
#include "nodulemorph/learn.hpp"

using namespace nodulemorph;

namespace {

ForestConfig small_forest(std::size_t trees = 25) {
  ForestConfig c;
  c.n_trees = trees;
  return c;
}

// Nearest-centroid classifier used as an independent oracle.
std::vector<ClassLabel> nearest_centroid(const Matrix& train, std::span<const ClassLabel> labels, const Matrix& query) {
  std::vector<double> cb(train.cols()), cm(train.cols());
  double nb = 0, nm = 0;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    auto& c = labels[r] == ClassLabel::Benign ? cb : cm;
    (labels[r] == ClassLabel::Benign ? nb : nm) += 1;
    for (std::size_t j = 0; j < train.cols(); ++j) c[j] += train(r, j);
  }
  for (std::size_t j = 0; j < train.cols(); ++j) {
    cb[j] /= nb;
    cm[j] /= nm;
  }
  std::vector<ClassLabel> out;
  for (std::size_t r = 0; r < query.rows(); ++r) {
    double db = 0, dm = 0;
    for (std::size_t j = 0; j < query.cols(); ++j) {
      db += (query(r, j) - cb[j]) * (query(r, j) - cb[j]);
      dm += (query(r, j) - cm[j]) * (query(r, j) - cm[j]);
    }
    out.push_back(dm <= db ? ClassLabel::Malignant : ClassLabel::Benign);
  }
  return out;
}

DecisionTree stump(ClassLabel label) {
  DecisionTree t;
  TreeNode leaf;
  (label == ClassLabel::Malignant ? leaf.malignant : leaf.benign) = 1;
  t.nodes.push_back(leaf);
  return t;
}

}  // namespace

TEST(Forest, RejectsSingleClass) {
  Matrix rows;
  std::vector<ClassLabel> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_row(std::vector<double>{static_cast<double>(i), 1.0});
    labels.push_back(ClassLabel::Malignant);
  }
  try {
    train_forest(rows, labels, small_forest(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Training);
  }

  rows.push_row(std::vector<double>{-50.0, -50.0});
  labels.push_back(ClassLabel::Benign);
  const ForestModel m = train_forest(rows, labels, small_forest(), 1);
  for (std::size_t r = 0; r + 1 < rows.rows(); ++r)
    for (const auto& tree : m.trees) EXPECT_EQ(tree.predict(rows.row(r)), ClassLabel::Malignant);
}

TEST(Forest, SeparableBlobsAgreeWithCentroidOracle) {
  const auto train = fixtures::gaussian_blobs(101, 100, 100, 2, 10.0);
  const auto test = fixtures::gaussian_blobs(202, 100, 100, 2, 10.0);
  // The oracle itself must separate the data for the comparison to mean anything.
  const auto oracle_train = nearest_centroid(train.rows, train.labels, train.rows);
  std::size_t oracle_ok = 0;
  for (std::size_t i = 0; i < oracle_train.size(); ++i) oracle_ok += oracle_train[i] == train.labels[i];
  ASSERT_GE(oracle_ok, 199u);

  const ForestModel m = train_forest(train.rows, train.labels, ForestConfig{}, 42);
  ASSERT_TRUE(m.oob_accuracy.has_value());
  EXPECT_GE(*m.oob_accuracy, 0.99);

  const auto oracle = nearest_centroid(train.rows, train.labels, test.rows);
  std::size_t agree = 0, train_ok = 0;
  for (std::size_t r = 0; r < test.rows.rows(); ++r) agree += predict_forest(m, test.rows.row(r)).label == oracle[r];
  for (std::size_t r = 0; r < train.rows.rows(); ++r)
    train_ok += predict_forest(m, train.rows.row(r)).label == train.labels[r];
  EXPECT_GE(agree, 198u);
  EXPECT_GE(train_ok, 198u);
}

TEST(Forest, IdenticalAcrossThreadCounts) {
  const auto data = fixtures::gaussian_blobs(7, 61, 288, 15, 1.0, 1.5);
  const std::string one = train_forest(data.rows, data.labels, ForestConfig{}, 99, 1).to_json();
  EXPECT_EQ(one, train_forest(data.rows, data.labels, ForestConfig{}, 99, 2).to_json());
  EXPECT_EQ(one, train_forest(data.rows, data.labels, ForestConfig{}, 99, 8).to_json());
  EXPECT_EQ(one, train_forest(data.rows, data.labels, ForestConfig{}, 99, 1).to_json());
  EXPECT_NE(one, train_forest(data.rows, data.labels, ForestConfig{}, 100, 1).to_json());
}

TEST(Forest, SingleTreeScoreIsBinary) {
  const auto data = fixtures::gaussian_blobs(8, 30, 30, 3, 1.0);
  const ForestModel m = train_forest(data.rows, data.labels, small_forest(1), 3);
  for (std::size_t r = 0; r < data.rows.rows(); ++r) {
    const double s = predict_forest(m, data.rows.row(r)).score;
    EXPECT_TRUE(s == 0.0 || s == 1.0);
  }
}

TEST(Forest, UnanimousAndTiedVotes) {
  ForestModel m;
  m.n_features = 2;
  for (int i = 0; i < 100; ++i) m.trees.push_back(stump(i < 50 ? ClassLabel::Malignant : ClassLabel::Benign));
  const std::vector<double> row{0.0, 0.0};
  const Prediction tie = predict_forest(m, row);
  EXPECT_EQ(tie.label, ClassLabel::Malignant);
  EXPECT_EQ(tie.score, 0.5);

  m.trees.assign(7, stump(ClassLabel::Benign));
  EXPECT_EQ(predict_forest(m, row).score, 0.0);
  m.trees.assign(7, stump(ClassLabel::Malignant));
  EXPECT_EQ(predict_forest(m, row).score, 1.0);

  // A leaf holding equal class counts also resolves to Malignant.
  DecisionTree even;
  TreeNode leaf;
  leaf.benign = 2;
  leaf.malignant = 2;
  even.nodes.push_back(leaf);
  EXPECT_EQ(even.predict(row), ClassLabel::Malignant);
}

TEST(Forest, InvariantUnderMonotoneTransform) {
  auto data = fixtures::gaussian_blobs(13, 40, 40, 4, 1.5);
  for (std::size_t r = 0; r < data.rows.rows(); ++r)
    for (auto& v : data.rows.row(r)) v += 10.0;  // positive features
  Matrix cubed(data.rows.rows(), data.rows.cols());
  for (std::size_t r = 0; r < cubed.rows(); ++r)
    for (std::size_t c = 0; c < cubed.cols(); ++c) cubed(r, c) = std::pow(data.rows(r, c), 3.0);

  // Every tree sees every row, so each row's routing is decided by order
  // alone. (A point strictly between two training values may route
  // differently: midpoint thresholds are not transform-invariant.)
  ForestConfig cfg = small_forest();
  cfg.bootstrap = false;
  const ForestModel a = train_forest(data.rows, data.labels, cfg, 5);
  const ForestModel b = train_forest(cubed, data.labels, cfg, 5);
  for (std::size_t r = 0; r < data.rows.rows(); ++r) {
    const Prediction pa = predict_forest(a, data.rows.row(r));
    const Prediction pb = predict_forest(b, cubed.row(r));
    EXPECT_EQ(pa.label, pb.label);
    EXPECT_EQ(pa.score, pb.score);
  }
  // Same structure: identical split features in every tree.
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n)
      EXPECT_EQ(a.trees[t].nodes[n].feature, b.trees[t].nodes[n].feature);
  }
}

TEST(Forest, ScalerChangesNoPrediction) {
  const auto data = fixtures::gaussian_blobs(17, 35, 50, 6, 1.0, 3.0);
  const Matrix scaled = apply_scaler(fit_scaler(data.rows), data.rows);
  const ForestModel a = train_forest(data.rows, data.labels, small_forest(), 8);
  const ForestModel b = train_forest(scaled, data.labels, small_forest(), 8);
  for (std::size_t r = 0; r < data.rows.rows(); ++r)
    EXPECT_EQ(predict_forest(a, data.rows.row(r)).score, predict_forest(b, scaled.row(r)).score);
}

TEST(Forest, NodeInvariants) {
  const auto data = fixtures::gaussian_blobs(19, 50, 70, 5, 0.5);
  ForestConfig cfg = small_forest(10);
  cfg.min_samples_leaf = 3;
  cfg.max_depth = 4;
  const ForestModel m = train_forest(data.rows, data.labels, cfg, 2);
  for (const auto& tree : m.trees) {
    EXPECT_LE(tree.depth(), 4u);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        EXPECT_GE(node.benign + node.malignant, 3u);
      } else {
        ASSERT_GE(node.left, 0);
        ASSERT_GE(node.right, 0);
        const auto& l = tree.nodes[node.left];
        const auto& r = tree.nodes[node.right];
        EXPECT_EQ(l.benign + r.benign, node.benign);
        EXPECT_EQ(l.malignant + r.malignant, node.malignant);
      }
    }
  }
}

TEST(Forest, JsonRoundTrip) {
  const auto data = fixtures::gaussian_blobs(23, 20, 30, 15, 1.0);
  const ForestModel m = train_forest(data.rows, data.labels, small_forest(), 11);
  const std::string text = m.to_json();
  const ForestModel back = ForestModel::from_json(text);
  EXPECT_EQ(back.to_json(), text);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(back.config.n_trees, 25u);
  for (std::size_t r = 0; r < data.rows.rows(); ++r)
    EXPECT_EQ(predict_forest(m, data.rows.row(r)).score, predict_forest(back, data.rows.row(r)).score);
  EXPECT_THROW(ForestModel::from_json("{\"format\": \"something else\"}"), Error);
}

TEST(Forest, DimensionMismatch) {
  const auto data = fixtures::gaussian_blobs(29, 10, 10, 3, 4.0);
  const ForestModel m = train_forest(data.rows, data.labels, small_forest(3), 1);
  const std::vector<double> short_row{1.0, 2.0};
  try {
    predict_forest(m, short_row);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}
