#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace postscan::config {

/// Settings for `classify` and friends, read from a flat key = value file:
///
///   version = 1
///   model = "model.json"
///   captioner = "knn"          # knn | subprocess | none
///   index = "index.json"
///   threshold = 0.5
///
/// '#' starts a comment. Strings are double-quoted; numbers and true/false are bare.
/// Unknown keys, duplicate keys and a missing or unsupported version are errors.
struct PipelineConfig {
  int version = 1;
  std::string classifier = "nb";
  std::filesystem::path model;
  std::string captioner = "knn";
  std::filesystem::path index;
  std::string captioner_command;
  std::string post_preset = "post";
  std::string caption_preset = "caption";
  std::filesystem::path stopwords;  // empty: shipped list
  double threshold = 0.5;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default
};

inline constexpr int kConfigVersion = 1;

/// Relative paths are resolved against `base_dir`. Throws DataError.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Checks enumerated values and that referenced files exist. Throws DataError.
void validate(const PipelineConfig& config);

}  // namespace postscan::config
