#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nodulemorph/learn.hpp"
#include "nodulemorph/maskio.hpp"

namespace nodulemorph {

// ---------------------------------------------------------------------------
// Classification metrics (positive class = Malignant)

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  void add(ClassLabel truth, ClassLabel predicted) noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double f1 = 0.0;
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  // Set when the metric's denominator was zero and it was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// Throws Evaluation on an empty matrix.
ClassMetrics class_metrics(const ConfusionMatrix& cm);

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall) noexcept;

// ---------------------------------------------------------------------------
// Segmentation metrics

struct SegMetrics {
  double dice = 0.0;
  double iou = 0.0;
  bool vacuous = false;  // both masks empty; reported as 1/1
};

SegMetrics dice_iou(const BinaryMask& a, const BinaryMask& b);

struct SegRow {
  std::string sample_id;
  SegMetrics metrics;
};

struct SegEvalResult {
  std::vector<SegRow> rows;
  double mean_dice = 0.0;
  double mean_iou = 0.0;
  std::vector<std::string> unpaired;  // file names present on one side only

  std::string to_csv() const;
  std::string to_json() const;
};

/// Pairs prediction and ground-truth masks by filename stem. Throws
/// Evaluation when no pair exists.
SegEvalResult seg_eval_batch(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             int threshold = 127);

// ---------------------------------------------------------------------------
// Stratified folds

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // per sample

  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::vector<std::size_t> validation_indices(std::size_t fold) const;
};

/// Each class is shuffled and dealt round-robin into k folds; the deal
/// continues across classes (benign first) so fold sizes differ by at most one.
FoldAssignment stratified_kfold(std::span<const ClassLabel> labels, std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Cross-validation

enum class ClassifierKind { RandomForest, Mlp };

const char* to_string(ClassifierKind kind) noexcept;

struct PipelineConfig {
  std::size_t k_folds = 5;
  bool smote_rf = true;
  bool smote_mlp = true;
  std::size_t smote_k = 5;
  ForestConfig forest;
  MlpConfig mlp;
  std::size_t threads = 1;
};

/// A binary classifier trained inside one fold.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual void fit(const Matrix& rows, std::span<const ClassLabel> labels) = 0;
  virtual Prediction predict(std::span<const double> row) const = 0;
  virtual std::vector<Prediction> predict_batch(const Matrix& rows) const;
  /// Serialized trained state, for reproducibility checks.
  virtual std::string to_json() const = 0;
};

struct FoldContext {
  std::size_t fold = 0;
  std::uint64_t seed = 0;  // learner substream for this fold
  std::span<const std::size_t> train_indices;
  std::span<const std::size_t> validation_indices;
};

using LearnerFactory = std::function<std::unique_ptr<Learner>(const FoldContext&)>;

LearnerFactory make_learner_factory(ClassifierKind kind, const PipelineConfig& config);

/// Labeled feature rows, one per sample.
struct FeatureTable {
  std::vector<std::string> sample_ids;
  Matrix rows;
  std::vector<ClassLabel> labels;
};

struct FeatureExtraction {
  FeatureTable table;
  std::vector<std::string> skipped;   // "<id>: <reason>"
  std::vector<std::string> warnings;  // e.g. discarded extra components
};

/// Features of every labeled sample; failures are skipped and logged.
FeatureExtraction extract_labeled_features(const DatasetCatalog& catalog, std::size_t threads = 1);

struct TrainedFold {
  ScalerParams scaler;
  std::unique_ptr<Learner> learner;
  std::size_t synthetic_count = 0;
  std::size_t train_count = 0;
};

/// Fits scaler, optional SMOTE and the learner on rows[train_indices] only.
TrainedFold train_fold(const Matrix& rows, std::span<const ClassLabel> labels,
                       std::span<const std::size_t> train_indices, const LearnerFactory& factory,
                       const FoldContext& context, bool use_smote, std::size_t smote_k, std::uint64_t smote_seed);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::size_t synthetic_count = 0;
  ConfusionMatrix cm;
  ClassMetrics metrics;
};

struct PredictionRecord {
  std::string sample_id;
  std::size_t fold = 0;
  ClassLabel truth = ClassLabel::Benign;
  ClassLabel predicted = ClassLabel::Benign;
  double score = 0.0;
};

struct Report {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string classifier;
  std::vector<FoldResult> per_fold;
  ConfusionMatrix pooled_cm;
  ClassMetrics pooled;
  ClassMetrics fold_mean;  // unweighted mean of per-fold metrics
  std::string config_json;  // serialized pipeline configuration
  std::vector<std::string> skipped;
  std::string mask_provenance = "unspecified";
  std::vector<PredictionRecord> predictions;  // ordered by sample index

  std::string to_json() const;
  std::string to_csv() const;
  std::string predictions_csv() const;
  static Report from_json(const std::string& text);
};

std::string pipeline_config_json(const PipelineConfig& config);

/// Cross-validates an arbitrary learner. Scaler and SMOTE are fitted on
/// each training portion only; validation rows never reach them.
Report run_cv(const FeatureTable& table, const LearnerFactory& factory, const std::string& classifier_name,
              bool use_smote, const PipelineConfig& config, std::uint64_t seed);

Report run_cv(const FeatureTable& table, ClassifierKind kind, const PipelineConfig& config, std::uint64_t seed);

/// Extracts features from the catalog's labeled samples, then runs CV.
/// Throws Evaluation if every labeled sample fails extraction.
Report run_cv(const DatasetCatalog& catalog, ClassifierKind kind, const PipelineConfig& config, std::uint64_t seed);

}  // namespace nodulemorph
