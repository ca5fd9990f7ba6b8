#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include "nodulemorph/error.hpp"
#include "nodulemorph/morphology.hpp"
#include "nodulemorph/parallel.hpp"
#include "nodulemorph/roi.hpp"
#include "nodulemorph/synthetic.hpp"

namespace fs = std::filesystem;

namespace nodulemorph::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void print_metrics_header(std::ostream& out) {
  out << std::left << std::setw(16) << "classifier" << std::setw(10) << "F1" << std::setw(10) << "Accuracy"
      << std::setw(10) << "Recall" << "Precision\n";
}

void print_metrics_row(std::ostream& out, const std::string& name, const ClassMetrics& m) {
  out << std::left << std::setw(16) << name << std::setw(10) << fixed4(m.f1) << std::setw(10) << fixed4(m.accuracy)
      << std::setw(10) << fixed4(m.recall) << fixed4(m.precision) << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

int cmd_features(const fs::path& mask_dir, const fs::path& out_csv, const RunConfig& config, Streams io) {
  std::map<std::string, fs::path> masks;
  try {
    masks = list_rasters(mask_dir);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  std::vector<std::pair<std::string, fs::path>> entries(masks.begin(), masks.end());
  std::vector<std::string> rows(entries.size());
  std::vector<std::string> problems(entries.size());
  parallel_for(entries.size(), config.pipeline.threads, [&](std::size_t i) {
    const auto& path = entries[i].second;
    try {
      const auto result = extract_features_detailed(load_mask(path, config.mask_threshold));
      std::string line = path.stem().string();
      for (double v : result.features.values()) line += "," + format_double(v);
      rows[i] = line + "\n";
      if (!result.discarded_sizes.empty())
        problems[i] = "warning: " + path.filename().string() + ": " +
                      std::to_string(result.discarded_sizes.size()) + " smaller component(s) ignored";
    } catch (const Error& e) {
      problems[i] = "skip: " + path.filename().string() + ": " + e.what();
    }
  });

  std::string csv = "sample_id";
  for (const char* name : kFeatureNames) csv += std::string(",") + name;
  csv += "\n";
  std::size_t written = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!problems[i].empty()) io.err << problems[i] << '\n';
    if (rows[i].empty()) continue;
    csv += rows[i];
    ++written;
  }
  try {
    write_text(out_csv, csv);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  io.out << "wrote " << written << " feature rows to " << out_csv.string() << '\n';
  return written > 0 ? kSuccess : kPartial;
}

int cmd_cv(const CvArgs& args, const RunConfig& config, Streams io) {
  std::vector<ClassifierKind> kinds;
  if (args.classifier == "rf" || args.classifier == "both") kinds.push_back(ClassifierKind::RandomForest);
  if (args.classifier == "mlp" || args.classifier == "both") kinds.push_back(ClassifierKind::Mlp);
  if (kinds.empty()) {
    io.err << "error: --classifier must be rf, mlp or both\n";
    return kInputError;
  }
  if (!fs::is_regular_file(args.labels_csv)) {
    io.err << "error: labels file not found: " << args.labels_csv.string() << '\n';
    return kInputError;
  }

  DatasetCatalog catalog;
  try {
    CatalogOptions opts;
    opts.image_dir = args.image_dir;
    opts.labels_csv = args.labels_csv;
    opts.threshold = config.mask_threshold;
    opts.threads = config.pipeline.threads;
    opts.mask_provenance = config.mask_provenance;
    catalog = load_catalog(args.mask_dir, opts);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  for (const auto& w : catalog.warnings) io.err << "warning: " << w << '\n';
  const auto hist = catalog.histogram();
  io.out << "catalog: " << catalog.size() << " samples, " << catalog.labeled_count() << " labeled (Benign "
         << hist.benign << ", Malignant " << hist.malignant << ")\n";

  std::vector<Report> reports;
  try {
    for (auto kind : kinds) {
      Report report = run_cv(catalog, kind, config.pipeline, config.seed);
      const std::string name = to_string(kind);
      write_text(args.out_dir / ("report_" + name + ".json"), report.to_json());
      write_text(args.out_dir / ("report_" + name + ".csv"), report.to_csv());
      write_text(args.out_dir / ("predictions_" + name + ".csv"), report.predictions_csv());
      reports.push_back(std::move(report));
    }
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (!reports.empty())
    for (const auto& s : reports.front().skipped) io.err << "skipped: " << s << '\n';

  io.out << "pooled over " << config.pipeline.k_folds << " folds:\n";
  print_metrics_header(io.out);
  for (const auto& r : reports) print_metrics_row(io.out, r.classifier, r.pooled);
  io.out << "per-fold mean:\n";
  print_metrics_header(io.out);
  for (const auto& r : reports) print_metrics_row(io.out, r.classifier, r.fold_mean);
  io.out << "reports written to " << args.out_dir.string() << '\n';
  return kSuccess;
}

int cmd_segeval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_prefix,
                const RunConfig& config, Streams io) {
  SegEvalResult result;
  try {
    result = seg_eval_batch(pred_dir, gt_dir, config.mask_threshold);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  for (const auto& name : result.unpaired) io.err << "warning: unpaired file " << name << '\n';
  for (const auto& row : result.rows)
    if (row.metrics.vacuous) io.err << "warning: " << row.sample_id << ": both masks empty, scored as 1\n";
  if (!out_prefix.empty()) {
    try {
      write_text(fs::path(out_prefix.string() + ".csv"), result.to_csv());
      write_text(fs::path(out_prefix.string() + ".json"), result.to_json());
    } catch (const Error& e) {
      io.err << "error: " << e.what() << '\n';
      return kInputError;
    }
  }
  io.out << "pairs: " << result.rows.size() << '\n';
  io.out << "mean dice: " << fixed4(result.mean_dice) << '\n';
  io.out << "mean iou: " << fixed4(result.mean_iou) << '\n';
  return kSuccess;
}

int cmd_roi(const fs::path& image_dir, const fs::path& mask_dir, const fs::path& out_dir, const RunConfig& config,
            Streams io) {
  std::map<std::string, fs::path> images, masks;
  try {
    images = list_rasters(image_dir);
    masks = list_rasters(mask_dir);
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& [key, mask_path] : masks) {
    auto img = images.find(key);
    if (img == images.end()) {
      io.err << "warning: no image for mask " << mask_path.filename().string() << '\n';
      continue;
    }
    pairs.emplace_back(img->second, mask_path);
  }
  std::vector<std::string> problems(pairs.size());
  parallel_for(pairs.size(), config.pipeline.threads, [&](std::size_t i) {
    const auto& [image_path, mask_path] = pairs[i];
    try {
      const std::string id = mask_path.stem().string();
      const RoiTensor t =
          extract_roi(load_gray(image_path), load_mask(mask_path, config.mask_threshold), config.roi, id);
      export_tensor(t, out_dir / (id + ".roi"));
    } catch (const Error& e) {
      problems[i] = mask_path.filename().string() + ": " + e.what();
    }
  });
  std::size_t written = 0;
  for (const auto& p : problems) {
    if (p.empty()) ++written;
    else io.err << "skip: " << p << '\n';
  }
  io.out << "wrote " << written << " ROI tensors (" << config.roi.size << "x" << config.roi.size << ", padding "
         << config.roi.padding << ") to " << out_dir.string() << '\n';
  return written > 0 ? kSuccess : kPartial;
}

int cmd_report_show(const fs::path& report_json, Streams io) {
  Report r;
  try {
    std::ifstream in(report_json);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + report_json.string());
    std::stringstream ss;
    ss << in.rdbuf();
    r = Report::from_json(ss.str());
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  io.out << "run " << r.run_id << "  classifier " << r.classifier << "  seed " << r.seed << "  masks "
         << r.mask_provenance << '\n';
  io.out << std::left << std::setw(8) << "fold" << std::setw(6) << "tp" << std::setw(6) << "fp" << std::setw(6)
         << "fn" << std::setw(6) << "tn" << std::setw(10) << "F1" << std::setw(10) << "Accuracy" << std::setw(10)
         << "Recall" << "Precision\n";
  auto line = [&](const std::string& label, const ConfusionMatrix& cm, const ClassMetrics& m) {
    io.out << std::left << std::setw(8) << label << std::setw(6) << cm.tp << std::setw(6) << cm.fp << std::setw(6)
           << cm.fn << std::setw(6) << cm.tn << std::setw(10) << fixed4(m.f1) << std::setw(10) << fixed4(m.accuracy)
           << std::setw(10) << fixed4(m.recall) << fixed4(m.precision) << '\n';
  };
  for (const auto& f : r.per_fold) line(std::to_string(f.fold), f.cm, f.metrics);
  line("pooled", r.pooled_cm, r.pooled);
  io.out << std::left << std::setw(32) << "fold-mean" << std::setw(10) << fixed4(r.fold_mean.f1) << std::setw(10)
         << fixed4(r.fold_mean.accuracy) << std::setw(10) << fixed4(r.fold_mean.recall)
         << fixed4(r.fold_mean.precision) << '\n';
  if (!r.skipped.empty()) io.out << r.skipped.size() << " skipped sample(s)\n";
  return kSuccess;
}

int cmd_synth(const fs::path& out_dir, std::size_t per_class, int size, std::uint64_t seed, Streams io) {
  try {
    synthetic::write_cohort(out_dir, {per_class, size, seed});
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kInputError;
  }
  io.out << "wrote " << 2 * per_class << " samples to " << out_dir.string() << '\n';
  return kSuccess;
}

}  // namespace nodulemorph::cli
