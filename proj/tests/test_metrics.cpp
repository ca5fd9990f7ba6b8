#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "fixtures.hpp"
#include "nodulemorph/error.hpp"
#include "nodulemorph/eval.hpp"

using namespace nodulemorph;
using fixtures::TempDir;

TEST(ClassMetrics, ReportedCohortCounts) {
  const ConfusionMatrix cm{237, 25, 51, 36};
  const ClassMetrics m = class_metrics(cm);
  EXPECT_NEAR(m.accuracy, 273.0 / 349.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 0.7822, 1e-4);
  EXPECT_NEAR(m.recall, 237.0 / 288.0, 1e-15);
  EXPECT_NEAR(m.recall, 0.8229, 1e-4);
  EXPECT_NEAR(m.precision, 237.0 / 262.0, 1e-15);
  const double p = 237.0 / 262.0, r = 237.0 / 288.0;
  EXPECT_NEAR(m.f1, 2 * p * r / (p + r), 1e-15);
  EXPECT_FALSE(m.precision_undefined || m.recall_undefined || m.f1_undefined);
}

TEST(ClassMetrics, F1OfPublishedPrecisionRecall) {
  EXPECT_NEAR(f1_score(0.8843, 0.8229), 0.8522, 5e-4);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
  EXPECT_EQ(f1_score(1.0, 1.0), 1.0);
}

TEST(ClassMetrics, EmptyAndDegenerate) {
  try {
    class_metrics(ConfusionMatrix{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
  }
  const ClassMetrics perfect = class_metrics({5, 0, 0, 7});
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.precision, 1.0);

  const ClassMetrics all_negative = class_metrics({0, 0, 0, 9});
  EXPECT_TRUE(all_negative.precision_undefined);
  EXPECT_TRUE(all_negative.recall_undefined);
  EXPECT_TRUE(all_negative.f1_undefined);
  EXPECT_EQ(all_negative.f1, 0.0);
  EXPECT_EQ(all_negative.accuracy, 1.0);
}

TEST(ConfusionMatrix, AddAndSum) {
  ConfusionMatrix a;
  a.add(ClassLabel::Malignant, ClassLabel::Malignant);
  a.add(ClassLabel::Malignant, ClassLabel::Benign);
  a.add(ClassLabel::Benign, ClassLabel::Malignant);
  a.add(ClassLabel::Benign, ClassLabel::Benign);
  a.add(ClassLabel::Benign, ClassLabel::Benign);
  EXPECT_EQ(a, (ConfusionMatrix{1, 1, 1, 2}));
  a += ConfusionMatrix{3, 0, 0, 1};
  EXPECT_EQ(a, (ConfusionMatrix{4, 1, 1, 3}));
  EXPECT_EQ(a.total(), 9u);
}

TEST(DiceIou, Fixtures) {
  const BinaryMask a = fixtures::from_rows({"##..", "##..", "....", "...."});
  const SegMetrics same = dice_iou(a, a);
  EXPECT_EQ(same.dice, 1.0);
  EXPECT_EQ(same.iou, 1.0);
  EXPECT_FALSE(same.vacuous);

  const BinaryMask disjoint = fixtures::from_rows({"....", "....", "..##", "..##"});
  const SegMetrics none = dice_iou(a, disjoint);
  EXPECT_EQ(none.dice, 0.0);
  EXPECT_EQ(none.iou, 0.0);

  const BinaryMask half = fixtures::from_rows({".##.", ".##.", "....", "...."});
  const SegMetrics h = dice_iou(a, half);
  EXPECT_EQ(h.dice, 0.5);
  EXPECT_EQ(h.iou, 2.0 / 6.0);

  const SegMetrics empty = dice_iou(BinaryMask(4, 4), BinaryMask(4, 4));
  EXPECT_TRUE(empty.vacuous);
  EXPECT_EQ(empty.dice, 1.0);
  EXPECT_EQ(empty.iou, 1.0);

  EXPECT_THROW(dice_iou(BinaryMask(4, 4), BinaryMask(4, 5)), Error);
}

TEST(DiceIou, IdentitySymmetryAndOrdering) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const BinaryMask a = fixtures::random_noise(seed, 24, 17, 0.3 + 0.004 * static_cast<double>(seed));
    const BinaryMask b = fixtures::random_noise(seed + 1000, 24, 17, 0.5);
    const SegMetrics ab = dice_iou(a, b);
    const SegMetrics ba = dice_iou(b, a);
    EXPECT_EQ(ab.dice, ba.dice);
    EXPECT_EQ(ab.iou, ba.iou);
    EXPECT_GE(ab.dice, ab.iou);
    EXPECT_NEAR(ab.dice, 2 * ab.iou / (1 + ab.iou), 1e-12);
  }
}

TEST(SegEvalBatch, IdenticalDirectories) {
  TempDir pred, gt;
  for (int i = 0; i < 4; ++i) {
    const BinaryMask m = fixtures::random_blob(static_cast<std::uint64_t>(i), 30, 120);
    save_mask(m, pred / ("img" + std::to_string(i) + ".png"));
    save_mask(m, gt / ("img" + std::to_string(i) + ".png"));
  }
  const SegEvalResult r = seg_eval_batch(pred.path(), gt.path());
  EXPECT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.mean_dice, 1.0);
  EXPECT_EQ(r.mean_iou, 1.0);
  EXPECT_TRUE(r.unpaired.empty());
}

TEST(SegEvalBatch, MeansOfDiceAndIouDoNotObeyIdentity) {
  TempDir pred, gt;
  const BinaryMask a = fixtures::from_rows({"##..", "##..", "....", "...."});
  const BinaryMask half = fixtures::from_rows({".##.", ".##.", "....", "...."});
  save_mask(a, pred / "one.png");
  save_mask(a, gt / "one.png");
  save_mask(a, pred / "two.png");
  save_mask(half, gt / "two.png");
  const SegEvalResult r = seg_eval_batch(pred.path(), gt.path());
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) EXPECT_NEAR(row.metrics.dice, 2 * row.metrics.iou / (1 + row.metrics.iou), 1e-12);
  EXPECT_DOUBLE_EQ(r.mean_dice, 0.75);
  EXPECT_DOUBLE_EQ(r.mean_iou, (1.0 + 1.0 / 3.0) / 2.0);
  // 2 * (2/3) / (5/3) = 0.8, not 0.75.
  EXPECT_GT(std::abs(r.mean_dice - 2 * r.mean_iou / (1 + r.mean_iou)), 0.04);

  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["pairs"], 2);
  EXPECT_EQ(j["per_image"].size(), 2u);
  EXPECT_NE(r.to_csv().find("sample_id,dice,iou"), std::string::npos);
}

TEST(SegEvalBatch, UnpairedAndEmpty) {
  TempDir pred, gt;
  const BinaryMask m = fixtures::random_blob(1, 20, 50);
  save_mask(m, pred / "a.png");
  save_mask(m, gt / "a.png");
  save_mask(m, pred / "only_pred.png");
  save_mask(m, gt / "only_gt.png");
  save_mask(BinaryMask(20, 20), pred / "blank.png");
  save_mask(BinaryMask(20, 20), gt / "blank.png");
  const SegEvalResult r = seg_eval_batch(pred.path(), gt.path());
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.unpaired.size(), 2u);
  std::size_t vacuous = 0;
  for (const auto& row : r.rows) vacuous += row.metrics.vacuous;
  EXPECT_EQ(vacuous, 1u);

  TempDir other;
  save_mask(m, other / "zzz.png");
  try {
    seg_eval_batch(pred.path(), other.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
  }
}
