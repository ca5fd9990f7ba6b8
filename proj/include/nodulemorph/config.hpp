#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nodulemorph/eval.hpp"
#include "nodulemorph/roi.hpp"

namespace nodulemorph {

/// Settings shared by every CLI command. Loaded from a `key = value` text
/// file; command-line flags override file values.
struct RunConfig {
  std::uint64_t seed = 42;
  int mask_threshold = 127;
  PipelineConfig pipeline;
  RoiOptions roi;
  std::string mask_provenance = "unspecified";

  /// Throws Config when a value is outside its documented range.
  void validate() const;
};

/// Applies one `key = value` assignment. Throws Config for unknown keys or
/// unparsable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Reads a config file: one assignment per line, `#` starts a comment.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// The file format, with every key at its current value.
std::string dump_config(const RunConfig& config);

}  // namespace nodulemorph
