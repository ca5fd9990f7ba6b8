#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "nodulemorph/error.hpp"
#include "nodulemorph/eval.hpp"

namespace nodulemorph {

void ConfusionMatrix::add(ClassLabel truth, ClassLabel predicted) noexcept {
  const bool t = truth == ClassLabel::Malignant;
  const bool p = predicted == ClassLabel::Malignant;
  if (t && p) ++tp;
  else if (!t && p) ++fp;
  else if (t && !p) ++fn;
  else ++tn;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

double f1_score(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::Evaluation, "confusion matrix is empty");
  ClassMetrics m;
  const auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
  m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_undefined);
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.f1_undefined = m.precision + m.recall == 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

SegMetrics dice_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorKind::Shape, "mask dimensions differ (" + std::to_string(a.width()) + "x" +
                                      std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                      std::to_string(b.height()) + ")");
  std::size_t inter = 0, size_a = 0, size_b = 0;
  const auto& ba = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    size_a += ba[i];
    size_b += bb[i];
    inter += ba[i] & bb[i];
  }
  SegMetrics m;
  if (size_a + size_b == 0) {
    m.dice = m.iou = 1.0;
    m.vacuous = true;
    return m;
  }
  const std::size_t uni = size_a + size_b - inter;
  m.dice = 2.0 * static_cast<double>(inter) / static_cast<double>(size_a + size_b);
  m.iou = static_cast<double>(inter) / static_cast<double>(uni);
  return m;
}

SegEvalResult seg_eval_batch(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             int threshold) {
  const auto preds = list_rasters(pred_dir);
  const auto gts = list_rasters(gt_dir);
  SegEvalResult result;
  for (const auto& [key, path] : preds)
    if (!gts.count(key)) result.unpaired.push_back(path.filename().string());
  for (const auto& [key, path] : gts)
    if (!preds.count(key)) result.unpaired.push_back(path.filename().string());

  for (const auto& [key, pred_path] : preds) {
    auto gt = gts.find(key);
    if (gt == gts.end()) continue;
    const BinaryMask p = load_mask(pred_path, threshold);
    const BinaryMask g = load_mask(gt->second, threshold);
    result.rows.push_back({gt->second.stem().string(), dice_iou(p, g)});
  }
  if (result.rows.empty())
    throw Error(ErrorKind::Evaluation, "no prediction/ground-truth pairs between " + pred_dir.string() + " and " +
                                           gt_dir.string());
  for (const auto& row : result.rows) {
    result.mean_dice += row.metrics.dice;
    result.mean_iou += row.metrics.iou;
  }
  result.mean_dice /= static_cast<double>(result.rows.size());
  result.mean_iou /= static_cast<double>(result.rows.size());
  return result;
}

std::string SegEvalResult::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "sample_id,dice,iou,vacuous\n";
  for (const auto& r : rows)
    out << r.sample_id << ',' << r.metrics.dice << ',' << r.metrics.iou << ',' << (r.metrics.vacuous ? 1 : 0) << '\n';
  return out.str();
}

std::string SegEvalResult::to_json() const {
  nlohmann::ordered_json j;
  j["pairs"] = rows.size();
  j["mean_dice"] = mean_dice;
  j["mean_iou"] = mean_iou;
  auto& arr = j["per_image"] = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"sample_id", r.sample_id}, {"dice", r.metrics.dice}, {"iou", r.metrics.iou},
                   {"vacuous", r.metrics.vacuous}});
  j["unpaired"] = unpaired;
  return j.dump(2);
}

}  // namespace nodulemorph
