#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nodulemorph/maskio.hpp"

namespace nodulemorph {

/// Dense row-major matrix of feature rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  /// Appends a row; the first row on an empty 0x0 matrix fixes the width.
  void push_row(std::span<const double> values);
  /// Rows at the given indices, in that order.
  Matrix select(std::span<const std::size_t> indices) const;

  const std::vector<double>& data() const noexcept { return data_; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Prediction {
  ClassLabel label = ClassLabel::Benign;
  double score = 0.0;  // malignancy score in [0, 1]
};

// ---------------------------------------------------------------------------
// Standard scaler

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation, floored
};

inline constexpr double kScalerStdFloor = 1e-12;

ScalerParams fit_scaler(const Matrix& train);
Matrix apply_scaler(const ScalerParams& params, const Matrix& rows);
Matrix invert_scaler(const ScalerParams& params, const Matrix& rows);

// ---------------------------------------------------------------------------
// SMOTE

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// n_needed synthetic rows, each x + t (nn - x) for a uniformly drawn
/// minority row x, one of its k nearest minority neighbours nn (Euclidean,
/// ties by index) and t ~ U[0, 1]. k is capped at |minority| - 1.
Matrix smote(const Matrix& minority, std::size_t k, std::size_t n_needed, std::uint64_t seed);

struct Resampled {
  Matrix rows;
  std::vector<ClassLabel> labels;
  std::size_t synthetic_count = 0;
};

/// Appends minority synthetics until both classes have equal counts.
/// Original rows keep their positions.
Resampled balance_classes(const Matrix& rows, std::span<const ClassLabel> labels, const SmoteConfig& config);

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;           // 0: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(n_features))
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // row[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::uint32_t benign = 0;
  std::uint32_t malignant = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Majority class of the reached leaf; ties resolve to Malignant.
  ClassLabel predict(std::span<const double> row) const;
  std::size_t depth() const;
};

struct ForestModel {
  ForestConfig config;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;
  std::optional<double> oob_accuracy;

  std::string to_json() const;
  static ForestModel from_json(const std::string& text);
};

/// CART trees on bootstrap resamples with Gini splits. Tree t draws from
/// its own stream derive_seed(seed, "tree", t), so the forest does not
/// depend on `threads`.
ForestModel train_forest(const Matrix& rows, std::span<const ClassLabel> labels, const ForestConfig& config,
                         std::uint64_t seed, std::size_t threads = 1);

/// Score is the fraction of trees voting Malignant; 0.5 counts as Malignant.
Prediction predict_forest(const ForestModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// Multi-layer perceptron (one hidden ReLU layer, sigmoid output)

enum class Optimizer { Adam, Sgd };

struct MlpConfig {
  std::size_t hidden = 32;
  std::size_t epochs = 200;
  std::size_t batch = 16;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
};

struct MlpModel {
  std::size_t n_inputs = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x n_inputs, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  MlpConfig config;
  std::uint64_t seed = 0;

  /// All parameters flattened as w1, b1, w2, b2.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  std::size_t parameter_count() const noexcept { return hidden * n_inputs + 2 * hidden + 1; }

  /// Pre-sigmoid output.
  double logit(std::span<const double> row) const;

  std::string to_json() const;
  static MlpModel from_json(const std::string& text);
};

/// He-normal weights, zero biases.
MlpModel init_mlp(std::size_t n_inputs, const MlpConfig& config, std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;              // mean binary cross-entropy
  std::vector<double> gradient;   // same layout as MlpModel::parameters()
};

LossGradient mlp_loss_gradient(const MlpModel& model, const Matrix& rows, std::span<const ClassLabel> labels);

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

MlpTrainResult train_mlp(const Matrix& rows, std::span<const ClassLabel> labels, const MlpConfig& config,
                         std::uint64_t seed);

/// Label is Malignant iff score >= 0.5.
Prediction predict_mlp(const MlpModel& model, std::span<const double> row);

}  // namespace nodulemorph
