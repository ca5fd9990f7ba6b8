#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "nodulemorph/error.hpp"
#include "nodulemorph/eval.hpp"
#include "nodulemorph/morphology.hpp"
#include "nodulemorph/parallel.hpp"
#include "nodulemorph/rng.hpp"

namespace nodulemorph {

namespace {

using ojson = nlohmann::ordered_json;

class ForestLearner final : public Learner {
 public:
  ForestLearner(ForestConfig config, std::uint64_t seed) : config_(config), seed_(seed) {}
  void fit(const Matrix& rows, std::span<const ClassLabel> labels) override {
    model_ = train_forest(rows, labels, config_, seed_, 1);
  }
  Prediction predict(std::span<const double> row) const override { return predict_forest(model_, row); }
  std::string to_json() const override { return model_.to_json(); }

 private:
  ForestConfig config_;
  std::uint64_t seed_;
  ForestModel model_;
};

class MlpLearner final : public Learner {
 public:
  MlpLearner(MlpConfig config, std::uint64_t seed) : config_(config), seed_(seed) {}
  void fit(const Matrix& rows, std::span<const ClassLabel> labels) override {
    model_ = train_mlp(rows, labels, config_, seed_).model;
  }
  Prediction predict(std::span<const double> row) const override { return predict_mlp(model_, row); }
  std::string to_json() const override { return model_.to_json(); }

 private:
  MlpConfig config_;
  std::uint64_t seed_;
  MlpModel model_;
};

ojson cm_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

ojson metrics_json(const ClassMetrics& m) {
  ojson j = {{"f1", m.f1}, {"accuracy", m.accuracy}, {"recall", m.recall}, {"precision", m.precision}};
  std::vector<std::string> undefined;
  if (m.precision_undefined) undefined.emplace_back("precision");
  if (m.recall_undefined) undefined.emplace_back("recall");
  if (m.f1_undefined) undefined.emplace_back("f1");
  if (!undefined.empty()) j["undefined"] = undefined;
  return j;
}

ConfusionMatrix cm_from_json(const ojson& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
          j.at("tn").get<std::size_t>()};
}

ClassMetrics metrics_from_json(const ojson& j) {
  ClassMetrics m;
  m.f1 = j.at("f1").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  m.recall = j.at("recall").get<double>();
  m.precision = j.at("precision").get<double>();
  if (j.contains("undefined"))
    for (const auto& u : j.at("undefined")) {
      if (u == "precision") m.precision_undefined = true;
      if (u == "recall") m.recall_undefined = true;
      if (u == "f1") m.f1_undefined = true;
    }
  return m;
}

ClassLabel label_from_string(const std::string& s) {
  if (s == "Benign") return ClassLabel::Benign;
  if (s == "Malignant") return ClassLabel::Malignant;
  throw Error(ErrorKind::Format, "unknown label '" + s + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::vector<Prediction> Learner::predict_batch(const Matrix& rows) const {
  std::vector<Prediction> out;
  out.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out.push_back(predict(rows.row(r)));
  return out;
}

const char* to_string(ClassifierKind kind) noexcept {
  return kind == ClassifierKind::RandomForest ? "rf" : "mlp";
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::validation_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

FoldAssignment stratified_kfold(std::span<const ClassLabel> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Stratification, "cross-validation needs at least 2 folds, got " + std::to_string(k));
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw Error(ErrorKind::Stratification,
                  "cannot stratify into " + std::to_string(k) + " folds: class " +
                      to_string(static_cast<ClassLabel>(c)) + " has only " + std::to_string(by_class[c].size()) +
                      " samples");

  FoldAssignment out{k, std::vector<std::size_t>(labels.size(), 0)};
  Rng rng(seed);
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) out.fold_of[idx] = dealt++ % k;
  }
  return out;
}

LearnerFactory make_learner_factory(ClassifierKind kind, const PipelineConfig& config) {
  if (kind == ClassifierKind::RandomForest) {
    return [forest = config.forest](const FoldContext& ctx) -> std::unique_ptr<Learner> {
      return std::make_unique<ForestLearner>(forest, ctx.seed);
    };
  }
  return [mlp = config.mlp](const FoldContext& ctx) -> std::unique_ptr<Learner> {
    return std::make_unique<MlpLearner>(mlp, ctx.seed);
  };
}

FeatureExtraction extract_labeled_features(const DatasetCatalog& catalog, std::size_t threads) {
  std::vector<const Sample*> labeled;
  for (const auto& s : catalog.samples())
    if (s.label) labeled.push_back(&s);

  std::vector<std::optional<FeatureResult>> results(labeled.size());
  std::vector<std::string> errors(labeled.size());
  parallel_for(labeled.size(), threads, [&](std::size_t i) {
    try {
      results[i] = extract_features_detailed(labeled[i]->mask);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  FeatureExtraction out;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Sample& s = *labeled[i];
    if (!results[i]) {
      out.skipped.push_back(s.sample_id + ": " + errors[i]);
      continue;
    }
    if (!results[i]->discarded_sizes.empty()) {
      std::string sizes;
      for (auto n : results[i]->discarded_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(n);
      out.warnings.push_back(s.sample_id + ": ignored extra components of size " + sizes);
    }
    const auto values = results[i]->features.values();
    out.table.sample_ids.push_back(s.sample_id);
    out.table.rows.push_row(values);
    out.table.labels.push_back(*s.label);
  }
  return out;
}

TrainedFold train_fold(const Matrix& rows, std::span<const ClassLabel> labels,
                       std::span<const std::size_t> train_indices, const LearnerFactory& factory,
                       const FoldContext& context, bool use_smote, std::size_t smote_k, std::uint64_t smote_seed) {
  TrainedFold out;
  const Matrix train = rows.select(train_indices);
  std::vector<ClassLabel> train_labels;
  train_labels.reserve(train_indices.size());
  for (auto i : train_indices) train_labels.push_back(labels[i]);

  out.train_count = train.rows();
  out.scaler = fit_scaler(train);
  Matrix scaled = apply_scaler(out.scaler, train);
  if (use_smote) {
    Resampled balanced = balance_classes(scaled, train_labels, {smote_k, smote_seed});
    out.synthetic_count = balanced.synthetic_count;
    scaled = std::move(balanced.rows);
    train_labels = std::move(balanced.labels);
  }
  out.learner = factory(context);
  out.learner->fit(scaled, train_labels);
  return out;
}

std::string pipeline_config_json(const PipelineConfig& config) {
  ojson j;
  j["k_folds"] = config.k_folds;
  j["smote"] = {{"rf", config.smote_rf}, {"mlp", config.smote_mlp}, {"k_neighbors", config.smote_k}};
  j["forest"] = {{"n_trees", config.forest.n_trees},
                 {"max_depth", config.forest.max_depth},
                 {"min_samples_leaf", config.forest.min_samples_leaf},
                 {"features_per_split", config.forest.features_per_split},
                 {"bootstrap", config.forest.bootstrap}};
  j["mlp"] = {{"hidden", config.mlp.hidden},
              {"epochs", config.mlp.epochs},
              {"batch", config.mlp.batch},
              {"learning_rate", config.mlp.learning_rate},
              {"optimizer", config.mlp.optimizer == Optimizer::Adam ? "adam" : "sgd"}};
  j["scaler"] = "standard (population std, fit on training folds)";
  return j.dump();
}

Report run_cv(const FeatureTable& table, const LearnerFactory& factory, const std::string& classifier_name,
              bool use_smote, const PipelineConfig& config, std::uint64_t seed) {
  if (table.rows.rows() != table.labels.size() || table.sample_ids.size() != table.labels.size())
    throw Error(ErrorKind::Shape, "feature table columns have different lengths");
  const FoldAssignment folds = stratified_kfold(table.labels, config.k_folds, derive_seed(seed, "fold-split"));
  const std::string stream = classifier_name == "mlp" ? "mlp" : classifier_name == "rf" ? "forest" : classifier_name;

  std::vector<FoldResult> fold_results(config.k_folds);
  std::vector<std::vector<Prediction>> fold_predictions(config.k_folds);
  std::vector<std::vector<std::size_t>> fold_validation(config.k_folds);
  parallel_for(config.k_folds, config.threads, [&](std::size_t f) {
    const auto train_idx = folds.train_indices(f);
    fold_validation[f] = folds.validation_indices(f);
    const FoldContext ctx{f, derive_seed(seed, stream, f), train_idx, fold_validation[f]};
    TrainedFold trained = train_fold(table.rows, table.labels, train_idx, factory, ctx, use_smote, config.smote_k,
                                     derive_seed(seed, "smote", f));
    const Matrix validation = apply_scaler(trained.scaler, table.rows.select(fold_validation[f]));
    fold_predictions[f] = trained.learner->predict_batch(validation);
    if (fold_predictions[f].size() != fold_validation[f].size())
      throw Error(ErrorKind::Evaluation, "learner returned the wrong number of predictions");

    FoldResult& r = fold_results[f];
    r.fold = f;
    r.train_count = trained.train_count;
    r.validation_count = fold_validation[f].size();
    r.synthetic_count = trained.synthetic_count;
    for (std::size_t i = 0; i < fold_validation[f].size(); ++i)
      r.cm.add(table.labels[fold_validation[f][i]], fold_predictions[f][i].label);
    r.metrics = class_metrics(r.cm);
  });

  Report report;
  report.seed = seed;
  report.classifier = classifier_name;
  report.config_json = pipeline_config_json(config);
  report.run_id = hex64(derive_seed(seed, classifier_name + report.config_json));
  report.per_fold = std::move(fold_results);
  report.predictions.resize(table.labels.size());
  for (std::size_t f = 0; f < config.k_folds; ++f) {
    report.pooled_cm += report.per_fold[f].cm;
    for (std::size_t i = 0; i < fold_validation[f].size(); ++i) {
      const std::size_t idx = fold_validation[f][i];
      report.predictions[idx] = {table.sample_ids[idx], f, table.labels[idx], fold_predictions[f][i].label,
                                 fold_predictions[f][i].score};
    }
  }
  report.pooled = class_metrics(report.pooled_cm);
  const double k = static_cast<double>(config.k_folds);
  for (const auto& r : report.per_fold) {
    report.fold_mean.f1 += r.metrics.f1 / k;
    report.fold_mean.accuracy += r.metrics.accuracy / k;
    report.fold_mean.recall += r.metrics.recall / k;
    report.fold_mean.precision += r.metrics.precision / k;
    report.fold_mean.precision_undefined |= r.metrics.precision_undefined;
    report.fold_mean.recall_undefined |= r.metrics.recall_undefined;
    report.fold_mean.f1_undefined |= r.metrics.f1_undefined;
  }
  return report;
}

Report run_cv(const FeatureTable& table, ClassifierKind kind, const PipelineConfig& config, std::uint64_t seed) {
  const bool smote_on = kind == ClassifierKind::RandomForest ? config.smote_rf : config.smote_mlp;
  return run_cv(table, make_learner_factory(kind, config), to_string(kind), smote_on, config, seed);
}

Report run_cv(const DatasetCatalog& catalog, ClassifierKind kind, const PipelineConfig& config, std::uint64_t seed) {
  FeatureExtraction fx = extract_labeled_features(catalog, config.threads);
  if (fx.table.labels.empty())
    throw Error(ErrorKind::Evaluation, catalog.labeled_count() == 0
                                           ? "catalog has no labeled samples"
                                           : "feature extraction failed for every labeled sample");
  Report report = run_cv(fx.table, kind, config, seed);
  report.skipped = catalog.skipped;
  report.skipped.insert(report.skipped.end(), fx.skipped.begin(), fx.skipped.end());
  report.mask_provenance = catalog.mask_provenance;
  return report;
}

std::string Report::to_json() const {
  ojson j;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["classifier"] = classifier;
  auto& folds = j["per_fold"] = ojson::array();
  for (const auto& f : per_fold)
    folds.push_back({{"fold", f.fold},
                     {"train", f.train_count},
                     {"validation", f.validation_count},
                     {"synthetic", f.synthetic_count},
                     {"cm", cm_json(f.cm)},
                     {"metrics", metrics_json(f.metrics)}});
  j["pooled"] = {{"cm", cm_json(pooled_cm)}, {"metrics", metrics_json(pooled)}};
  j["fold_mean"] = {{"metrics", metrics_json(fold_mean)}};
  j["config"] = ojson::parse(config_json);
  j["skipped"] = skipped;
  j["mask_provenance"] = mask_provenance;
  auto& preds = j["predictions"] = ojson::array();
  for (const auto& p : predictions)
    preds.push_back({{"sample_id", p.sample_id},
                     {"fold", p.fold},
                     {"truth", nodulemorph::to_string(p.truth)},
                     {"predicted", nodulemorph::to_string(p.predicted)},
                     {"score", p.score}});
  return j.dump(2) + "\n";
}

std::string Report::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "scope,fold,tp,fp,fn,tn,f1,accuracy,recall,precision\n";
  auto row = [&](const std::string& scope, const std::string& fold, const ConfusionMatrix* cm, const ClassMetrics& m) {
    out << scope << ',' << fold << ',';
    if (cm)
      out << cm->tp << ',' << cm->fp << ',' << cm->fn << ',' << cm->tn;
    else
      out << ",,,";
    out << ',' << m.f1 << ',' << m.accuracy << ',' << m.recall << ',' << m.precision << '\n';
  };
  for (const auto& f : per_fold) row("fold", std::to_string(f.fold), &f.cm, f.metrics);
  row("pooled", "", &pooled_cm, pooled);
  row("fold_mean", "", nullptr, fold_mean);
  return out.str();
}

std::string Report::predictions_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "sample_id,fold,truth,predicted,score\n";
  for (const auto& p : predictions)
    out << p.sample_id << ',' << p.fold << ',' << nodulemorph::to_string(p.truth) << ','
        << nodulemorph::to_string(p.predicted) << ',' << p.score << '\n';
  return out.str();
}

Report Report::from_json(const std::string& text) {
  try {
    const auto j = ojson::parse(text);
    Report r;
    r.run_id = j.at("run_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.classifier = j.at("classifier").get<std::string>();
    for (const auto& f : j.at("per_fold")) {
      FoldResult fr;
      fr.fold = f.at("fold").get<std::size_t>();
      fr.train_count = f.value("train", std::size_t{0});
      fr.validation_count = f.value("validation", std::size_t{0});
      fr.synthetic_count = f.value("synthetic", std::size_t{0});
      fr.cm = cm_from_json(f.at("cm"));
      fr.metrics = metrics_from_json(f.at("metrics"));
      r.per_fold.push_back(fr);
    }
    r.pooled_cm = cm_from_json(j.at("pooled").at("cm"));
    r.pooled = metrics_from_json(j.at("pooled").at("metrics"));
    if (j.contains("fold_mean")) r.fold_mean = metrics_from_json(j.at("fold_mean").at("metrics"));
    r.config_json = j.at("config").dump();
    r.skipped = j.value("skipped", std::vector<std::string>{});
    r.mask_provenance = j.value("mask_provenance", std::string("unspecified"));
    if (j.contains("predictions"))
      for (const auto& p : j.at("predictions"))
        r.predictions.push_back({p.at("sample_id").get<std::string>(), p.at("fold").get<std::size_t>(),
                                 label_from_string(p.at("truth").get<std::string>()),
                                 label_from_string(p.at("predicted").get<std::string>()),
                                 p.at("score").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad report document: ") + e.what());
  }
}

}  // namespace nodulemorph
