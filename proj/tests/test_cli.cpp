#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "nodulemorph/maskio.hpp"
#include "nodulemorph/roi.hpp"
#include "nodulemorph/synthetic.hpp"

using namespace nodulemorph;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

RunResult run(const std::string& args) {
  static TempDir logs;
  static int n = 0;
  const fs::path out = logs / ("out" + std::to_string(n));
  const fs::path err = logs / ("err" + std::to_string(n++));
  const std::string cmd =
      quote(NODULEMORPH_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Discs (benign) and thin bars (malignant): trivially separable by shape.
void write_separable_cohort(const fs::path& dir, int per_class) {
  fs::create_directories(dir / "masks");
  std::ofstream labels(dir / "labels.csv");
  labels << "sample_id,tirads\n";
  for (int i = 0; i < per_class; ++i) {
    const std::string b = "benign" + std::to_string(i), m = "malig" + std::to_string(i);
    save_mask(synthetic::disc(80, 80, 40, 40, 15 + i % 9), dir / "masks" / (b + ".png"));
    save_mask(synthetic::rectangle(80, 80, 10 + i % 4, 30, 55, 4 + i % 3), dir / "masks" / (m + ".png"));
    labels << b << "," << (i % 2 ? "2" : "3") << "\n" << m << "," << (i % 2 ? "4b" : "5") << "\n";
  }
}

}  // namespace

TEST(CliFeatures, RowsSkipsAndDeterminism) {
  TempDir dir;
  fs::create_directories(dir / "masks");
  save_mask(synthetic::disc(64, 64, 32, 32, 20), dir / "masks" / "a.png");
  save_mask(synthetic::rectangle(64, 64, 5, 5, 7, 3), dir / "masks" / "b.png");
  save_mask(synthetic::ellipse(64, 64, 30, 30, 25, 10, 0.5), dir / "masks" / "c.png");
  const std::string masks = quote((dir / "masks").string());

  RunResult r = run("features extract --masks " + masks + " --out " + quote((dir / "f.csv").string()));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "f.csv");
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sample_id,area,perimeter,convex_area,filled_area,solidity,form_factor,eccentricity,aspect_ratio,"
            "hu1,hu2,hu3,hu4,hu5,hu6,hu7");

  r = run("features extract --masks " + masks + " --out " + quote((dir / "f2.csv").string()));
  EXPECT_EQ(slurp(dir / "f2.csv"), csv);

  save_mask(BinaryMask(64, 64), dir / "masks" / "b.png");
  r = run("features extract --masks " + masks + " --out " + quote((dir / "f3.csv").string()));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(count_lines(slurp(dir / "f3.csv")), 3u);
  EXPECT_NE(r.err.find("skip: b.png"), std::string::npos) << r.err;

  fs::create_directories(dir / "empty_only");
  save_mask(BinaryMask(8, 8), dir / "empty_only" / "z.png");
  r = run("features extract --masks " + quote((dir / "empty_only").string()) + " --out " +
          quote((dir / "f4.csv").string()));
  EXPECT_EQ(r.code, 2);
}

TEST(CliCv, SeparableCohortAndDeterminism) {
  TempDir dir;
  write_separable_cohort(dir.path(), 10);
  const std::string base = "cv run --masks " + quote((dir / "masks").string()) + " --labels " +
                           quote((dir / "labels.csv").string()) + " --trees 30 --epochs 100";
  RunResult r = run("--seed 7 " + base + " --out-dir " + quote((dir / "a").string()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rf              1.0000    1.0000    1.0000    1.0000"), std::string::npos) << r.out;
  for (const char* f : {"report_rf.json", "report_rf.csv", "predictions_rf.csv", "report_mlp.json"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;

  r = run("--seed 7 " + base + " --out-dir " + quote((dir / "b").string()));
  ASSERT_EQ(r.code, 0);
  for (const char* f : {"report_rf.json", "report_rf.csv", "report_mlp.json", "predictions_mlp.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;

  r = run("report show " + quote((dir / "a" / "report_rf.json").string()));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pooled"), std::string::npos);
}

TEST(CliCv, InputErrors) {
  TempDir dir;
  write_separable_cohort(dir.path(), 3);
  const fs::path missing = dir / "nope.csv";
  RunResult r = run("cv run --masks " + quote((dir / "masks").string()) + " --labels " + quote(missing.string()) +
                    " --out-dir " + quote((dir / "o").string()));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;

  // Three samples per class cannot fill five folds.
  r = run("cv run --masks " + quote((dir / "masks").string()) + " --labels " + quote((dir / "labels.csv").string()) +
          " --out-dir " + quote((dir / "o").string()) + " --classifier rf");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("folds"), std::string::npos) << r.err;

  r = run("cv run --masks " + quote((dir / "masks").string()) + " --labels " + quote((dir / "labels.csv").string()) +
          " --out-dir " + quote((dir / "o").string()) + " --folds 3 --classifier svm");
  EXPECT_EQ(r.code, 3);
}

TEST(CliSegeval, MeansAndPairing) {
  TempDir dir;
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  const BinaryMask a = fixtures::from_rows({"##..", "##..", "....", "...."});
  const BinaryMask half = fixtures::from_rows({".##.", ".##.", "....", "...."});
  save_mask(a, dir / "pred" / "x.png");
  save_mask(a, dir / "gt" / "x.png");
  const std::string dirs = "--pred " + quote((dir / "pred").string()) + " --gt " + quote((dir / "gt").string());
  RunResult r = run("segeval " + dirs + " --out " + quote((dir / "seg").string()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean dice: 1.0000"), std::string::npos);
  EXPECT_NE(r.out.find("mean iou: 1.0000"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "seg.csv"));
  EXPECT_TRUE(fs::exists(dir / "seg.json"));

  save_mask(half, dir / "gt" / "x.png");
  save_mask(a, dir / "pred" / "extra.png");
  r = run("segeval " + dirs);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mean dice: 0.5000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mean iou: 0.3333"), std::string::npos);
  EXPECT_NE(r.err.find("warning: unpaired file extra.png"), std::string::npos) << r.err;

  fs::create_directories(dir / "other");
  save_mask(a, dir / "other" / "q.png");
  r = run("segeval --pred " + quote((dir / "pred").string()) + " --gt " + quote((dir / "other").string()));
  EXPECT_EQ(r.code, 3);
}

TEST(CliRoi, TensorFiles) {
  TempDir dir;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  for (int i = 0; i < 5; ++i) {
    GrayImage img(90 + i * 7, 70 + i * 3);
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c) img.at(r, c) = static_cast<std::uint8_t>((r * 3 + c * 5 + i) % 256);
    const std::string id = "s" + std::to_string(i);
    save_gray(img, dir / "images" / (id + ".png"));
    save_mask(synthetic::disc(img.width(), img.height(), 30, 40, 10 + i), dir / "masks" / (id + ".png"));
  }
  const std::string base =
      "roi export --images " + quote((dir / "images").string()) + " --masks " + quote((dir / "masks").string());
  RunResult r = run(base + " --out-dir " + quote((dir / "a").string()));
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::uintmax_t> sizes;
  for (int i = 0; i < 5; ++i) sizes.push_back(fs::file_size(dir / "a" / ("s" + std::to_string(i) + ".roi")));
  for (auto s : sizes) EXPECT_EQ(s, sizes.front());
  r = run(base + " --out-dir " + quote((dir / "b").string()));
  for (int i = 0; i < 5; ++i) {
    const std::string f = "s" + std::to_string(i) + ".roi";
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f));
  }

  // A nodule touching the top-left corner with zero padding keeps its tight box.
  TempDir edge;
  fs::create_directories(edge / "images");
  fs::create_directories(edge / "masks");
  save_gray(GrayImage(40, 30, 100), edge / "images" / "e.png");
  save_mask(synthetic::rectangle(40, 30, 0, 0, 9, 13), edge / "masks" / "e.png");
  r = run("roi export --images " + quote((edge / "images").string()) + " --masks " +
          quote((edge / "masks").string()) + " --out-dir " + quote((edge / "out").string()) + " --padding 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(import_tensor(edge / "out" / "e.roi").box, (BoundingBox{0, 0, 8, 12}));
}

TEST(CliHelp, ListsDefaults) {
  RunResult r = run("roi export --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--padding"), std::string::npos);
  EXPECT_NE(r.out.find("[10]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("[224]"), std::string::npos);
  r = run("cv run --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--folds"), std::string::npos);
  EXPECT_NE(r.out.find("[5]"), std::string::npos) << r.out;
  r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("[42]"), std::string::npos) << r.out;
  r = run("no-such-command");
  EXPECT_EQ(r.code, 3);
}
