#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "nodulemorph/config.hpp"

namespace nodulemorph::cli {

enum ExitCode : int {
  kSuccess = 0,
  kPartial = 2,  // nothing (or not everything) produced
  kInputError = 3,
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

int cmd_features(const std::filesystem::path& mask_dir, const std::filesystem::path& out_csv,
                 const RunConfig& config, Streams io);

struct CvArgs {
  std::optional<std::filesystem::path> image_dir;
  std::filesystem::path mask_dir;
  std::filesystem::path labels_csv;
  std::filesystem::path out_dir;
  std::string classifier = "both";  // rf | mlp | both
};

int cmd_cv(const CvArgs& args, const RunConfig& config, Streams io);

int cmd_segeval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                const std::filesystem::path& out_prefix, const RunConfig& config, Streams io);

int cmd_roi(const std::filesystem::path& image_dir, const std::filesystem::path& mask_dir,
            const std::filesystem::path& out_dir, const RunConfig& config, Streams io);

int cmd_report_show(const std::filesystem::path& report_json, Streams io);

int cmd_synth(const std::filesystem::path& out_dir, std::size_t per_class, int size, std::uint64_t seed,
              Streams io);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace nodulemorph::cli
