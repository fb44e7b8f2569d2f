#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "matcher/instance_matching.hpp"
#include "matcher/patch_matching.hpp"
#include "matcher/prompt_sampler.hpp"

namespace matcher {

enum class Task { kSemantic, kPart, kMultiInstance, kVos };

std::string_view task_name(Task task);

struct GridConfig {
  int stride_px = 14;
  /// Minimum covered fraction of a patch cell for it to count as on-mask.
  double mask_threshold = 0.5;
};

struct VosConfig {
  int capacity = 4;
  double decay = 0.9;
};

/// Everything one run needs. Presets hold the per-task thresholds
/// and score coefficients; the config file and CLI flags override them.
///
/// Config text is TOML-like:
///
///     preset = "coco"
///     seed = 3
///     [select]
///     max_emd = 0.7        # "none" disables a threshold
///     num_merged = 2
///
/// Purity is measured in matched points per patch cell (pixel area / stride^2),
/// so min_purity is in those units.
struct RunConfig {
  std::string preset = "fss";
  Task task = Task::kSemantic;
  GridConfig grid;
  SamplerConfig sampler;
  SelectConfig select;
  MatchOptions matching;
  VosConfig vos;
  int emd_support_cap = kDefaultSupportCap;
  std::uint64_t seed = 0;
};

/// Names: coco, lvis, fss, part, vos.
RunConfig preset_config(std::string_view name);

/// Applies one `section.key = value` override (section may be empty for
/// top-level keys). Throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses config text. A top-level `preset` line selects the base preset
/// before the remaining keys apply, wherever it appears.
RunConfig parse_config(std::string_view text, std::string_view default_preset = "fss");
RunConfig load_config(const std::filesystem::path& path, std::string_view default_preset = "fss");

/// Throws ConfigError when a value lies outside its documented range.
void validate_config(const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace matcher
