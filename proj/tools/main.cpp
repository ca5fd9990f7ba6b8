#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "nodulemorph/error.hpp"
#include "nodulemorph/parallel.hpp"

namespace fs = std::filesystem;
using namespace nodulemorph;

int main(int argc, char** argv) {
  CLI::App app{"nodulemorph: morphological features, cross-validated classifiers and ROI export for nodule masks"};
  app.require_subcommand(1);
  app.fallthrough();

  const RunConfig defaults;
  std::string config_path;
  std::uint64_t seed = defaults.seed;
  std::size_t threads = default_thread_count();
  int threshold = defaults.mask_threshold;
  app.add_option("--config", config_path, "key = value config file; flags override it")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master random seed")->capture_default_str();
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (default: NODULEMORPH_THREADS or core count)")
          ->capture_default_str();
  auto* threshold_opt =
      app.add_option("--threshold", threshold, "mask binarization: foreground iff value > threshold")
          ->capture_default_str();

  // features extract
  auto* features = app.add_subcommand("features", "morphological feature export");
  features->require_subcommand(1);
  auto* extract = features->add_subcommand("extract", "write the 15-feature CSV for every mask in a directory");
  fs::path feat_masks, feat_out;
  extract->add_option("--masks", feat_masks, "mask directory")->required();
  extract->add_option("--out", feat_out, "output CSV")->required();

  // cv run
  auto* cv = app.add_subcommand("cv", "stratified cross-validation");
  cv->require_subcommand(1);
  auto* cv_run = cv->add_subcommand("run", "cross-validate RF and/or MLP on mask features");
  cli::CvArgs cv_args;
  std::string cv_images;
  std::size_t folds = defaults.pipeline.k_folds;
  std::size_t n_trees = defaults.pipeline.forest.n_trees;
  std::size_t smote_k = defaults.pipeline.smote_k;
  std::size_t epochs = defaults.pipeline.mlp.epochs;
  bool no_smote = false;
  std::string provenance = defaults.mask_provenance;
  cv_run->add_option("--images", cv_images, "image directory (optional)");
  cv_run->add_option("--masks", cv_args.mask_dir, "mask directory")->required();
  cv_run->add_option("--labels", cv_args.labels_csv, "CSV with columns sample_id,tirads")->required();
  cv_run->add_option("--out-dir", cv_args.out_dir, "directory for report JSON/CSV files")->required();
  cv_run->add_option("--classifier", cv_args.classifier, "rf, mlp or both")
      ->check(CLI::IsMember({"rf", "mlp", "both"}))
      ->capture_default_str();
  auto* folds_opt = cv_run->add_option("--folds", folds, "number of stratified folds")->capture_default_str();
  auto* trees_opt = cv_run->add_option("--trees", n_trees, "random forest size")->capture_default_str();
  auto* smote_k_opt = cv_run->add_option("--smote-k", smote_k, "SMOTE neighbours")->capture_default_str();
  auto* epochs_opt = cv_run->add_option("--epochs", epochs, "MLP epochs")->capture_default_str();
  cv_run->add_flag("--no-smote", no_smote, "disable SMOTE for both classifiers");
  auto* prov_opt = cv_run->add_option("--provenance", provenance, "mask provenance recorded in the report")
                       ->capture_default_str();

  // segeval
  auto* segeval = app.add_subcommand("segeval", "Dice/IoU between predicted and ground-truth masks");
  fs::path seg_pred, seg_gt;
  std::string seg_out;
  segeval->add_option("--pred", seg_pred, "predicted mask directory")->required();
  segeval->add_option("--gt", seg_gt, "ground-truth mask directory")->required();
  segeval->add_option("--out", seg_out, "output prefix for .csv and .json");

  // roi export
  auto* roi = app.add_subcommand("roi", "classifier input preprocessing");
  roi->require_subcommand(1);
  auto* roi_export = roi->add_subcommand("export", "crop, resize and normalize nodule ROIs to tensor files");
  fs::path roi_images, roi_masks, roi_out;
  int padding = defaults.roi.padding;
  int size = defaults.roi.size;
  bool square = false;
  roi_export->add_option("--images", roi_images, "image directory")->required();
  roi_export->add_option("--masks", roi_masks, "mask directory")->required();
  roi_export->add_option("--out-dir", roi_out, "tensor output directory")->required();
  auto* padding_opt = roi_export->add_option("--padding", padding, "pixels added around the box")->capture_default_str();
  auto* size_opt = roi_export->add_option("--size", size, "output side length")->capture_default_str();
  auto* square_opt = roi_export->add_flag("--square", square, "grow the box to a square before resizing");

  // report show
  auto* report = app.add_subcommand("report", "inspect CV reports");
  report->require_subcommand(1);
  auto* show = report->add_subcommand("show", "print a report's per-fold and pooled metrics");
  fs::path report_path;
  show->add_option("report", report_path, "report JSON")->required();

  // synth cohort
  auto* synth = app.add_subcommand("synth", "synthetic data");
  synth->require_subcommand(1);
  auto* cohort = synth->add_subcommand("cohort", "write ellipse (benign) / spiculated (malignant) demo cohort");
  fs::path synth_out;
  std::size_t per_class = 30;
  int synth_size = 128;
  cohort->add_option("--out", synth_out, "output directory")->required();
  cohort->add_option("--per-class", per_class, "samples per class")->capture_default_str();
  cohort->add_option("--size", synth_size, "image side length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) load_config_file(config, config_path);
    if (seed_opt->count()) config.seed = seed;
    if (threads_opt->count() || config.pipeline.threads == defaults.pipeline.threads)
      config.pipeline.threads = threads;
    if (threshold_opt->count()) config.mask_threshold = threshold;
    if (folds_opt->count()) config.pipeline.k_folds = folds;
    if (trees_opt->count()) config.pipeline.forest.n_trees = n_trees;
    if (smote_k_opt->count()) config.pipeline.smote_k = smote_k;
    if (epochs_opt->count()) config.pipeline.mlp.epochs = epochs;
    if (no_smote) config.pipeline.smote_rf = config.pipeline.smote_mlp = false;
    if (prov_opt->count()) config.mask_provenance = provenance;
    if (padding_opt->count()) config.roi.padding = padding;
    if (size_opt->count()) config.roi.size = size;
    if (square_opt->count()) config.roi.square = true;
    config.validate();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  }

  cli::Streams io{std::cout, std::cerr};
  try {
    if (*extract) return cli::cmd_features(feat_masks, feat_out, config, io);
    if (*cv_run) {
      if (!cv_images.empty()) cv_args.image_dir = cv_images;
      return cli::cmd_cv(cv_args, config, io);
    }
    if (*segeval) return cli::cmd_segeval(seg_pred, seg_gt, seg_out, config, io);
    if (*roi_export) return cli::cmd_roi(roi_images, roi_masks, roi_out, config, io);
    if (*show) return cli::cmd_report_show(report_path, io);
    if (*cohort) return cli::cmd_synth(synth_out, per_class, synth_size, config.seed, io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  }
  return cli::kInputError;
}
