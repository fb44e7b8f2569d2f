#include "matcher/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "matcher/error.hpp"

namespace matcher {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::kConfigError,
       "invalid value '" + std::string(value) + "' for " + std::string(key));
}

double to_double(std::string_view key, std::string_view value) {
  const auto v = unquote(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, value);
  return out;
}

long long to_int(std::string_view key, std::string_view value) {
  const auto v = unquote(value);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, value);
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  const auto v = unquote(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, value);
}

std::optional<double> to_threshold(std::string_view key, std::string_view value) {
  const auto v = unquote(value);
  if (v == "none" || v == "off") return std::nullopt;
  return to_double(key, value);
}

Task to_task(std::string_view value) {
  const auto v = unquote(value);
  if (v == "semantic") return Task::kSemantic;
  if (v == "part") return Task::kPart;
  if (v == "multi_instance") return Task::kMultiInstance;
  if (v == "vos") return Task::kVos;
  bad_value("task", value);
}

std::string_view direction_name(MatchDirection d) {
  switch (d) {
    case MatchDirection::kBidirectional: return "bidirectional";
    case MatchDirection::kForwardOnly: return "forward";
    case MatchDirection::kReverseOnly: return "reverse";
  }
  return "bidirectional";
}

nlohmann::json threshold_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kSemantic: return "semantic";
    case Task::kPart: return "part";
    case Task::kMultiInstance: return "multi_instance";
    case Task::kVos: return "vos";
  }
  return "semantic";
}

RunConfig preset_config(std::string_view name) {
  RunConfig cfg;
  cfg.preset = std::string(name);
  if (name == "coco" || name == "lvis") {
    cfg.task = Task::kMultiInstance;
    cfg.select.max_emd = 0.67;
    cfg.select.min_purity = 0.02;
    cfg.select.weights = {1.0, 0.0, 0.0};
    cfg.select.num_merged = 8;
    cfg.sampler.dense_instance_points = true;
  } else if (name == "fss") {
    cfg.task = Task::kSemantic;
    cfg.select.weights = {0.8, 0.2, 1.0};
    cfg.select.num_merged = 1;
  } else if (name == "part") {
    cfg.task = Task::kPart;
    cfg.select.min_coverage = 0.3;
    cfg.select.weights = {0.5, 0.5, 0.0};
    cfg.select.num_merged = 1;
  } else if (name == "vos") {
    cfg.task = Task::kVos;
    cfg.select.max_emd = 0.75;
    cfg.select.weights = {0.4, 1.0, 1.0};
    cfg.select.num_merged = 1;
  } else {
    fail(ErrorCode::kConfigError, "unknown preset '" + std::string(name) + "'");
  }
  return cfg;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto dot = key.find('.');
  const std::string_view section = dot == std::string_view::npos ? std::string_view{} : key.substr(0, dot);
  const std::string_view name = dot == std::string_view::npos ? key : key.substr(dot + 1);

  if (section.empty()) {
    if (name == "preset") {
      const auto seed = cfg.seed;
      cfg = preset_config(unquote(value));
      cfg.seed = seed;
    } else if (name == "task") {
      cfg.task = to_task(value);
    } else if (name == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (name == "emd_support_cap") {
      cfg.emd_support_cap = static_cast<int>(to_int(key, value));
    } else {
      fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
    }
  } else if (section == "grid") {
    if (name == "stride_px") cfg.grid.stride_px = static_cast<int>(to_int(key, value));
    else if (name == "mask_threshold") cfg.grid.mask_threshold = to_double(key, value);
    else fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
  } else if (section == "sampler") {
    auto& s = cfg.sampler;
    if (name == "num_clusters") s.num_clusters = static_cast<int>(to_int(key, value));
    else if (name == "part_groups") s.part_groups = static_cast<int>(to_int(key, value));
    else if (name == "part_size") s.part_size = static_cast<int>(to_int(key, value));
    else if (name == "instance_groups") s.instance_groups = static_cast<int>(to_int(key, value));
    else if (name == "instance_size") s.instance_size = static_cast<int>(to_int(key, value));
    else if (name == "global_groups") s.global_groups = static_cast<int>(to_int(key, value));
    else if (name == "global_size") s.global_size = static_cast<int>(to_int(key, value));
    else if (name == "dense_instance_points") s.dense_instance_points = to_bool(key, value);
    else if (name == "dense_grid_step") s.dense_grid_step = static_cast<int>(to_int(key, value));
    else if (name == "kmeans_max_iter") s.kmeans_max_iter = static_cast<int>(to_int(key, value));
    else fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
  } else if (section == "select") {
    auto& s = cfg.select;
    if (name == "max_emd") s.max_emd = to_threshold(key, value);
    else if (name == "min_purity") s.min_purity = to_threshold(key, value);
    else if (name == "min_coverage") s.min_coverage = to_threshold(key, value);
    else if (name == "alpha") s.weights.alpha = to_double(key, value);
    else if (name == "beta") s.weights.beta = to_double(key, value);
    else if (name == "lambda") s.weights.lambda = to_double(key, value);
    else if (name == "num_merged" || name == "top_k") s.num_merged = static_cast<int>(to_int(key, value));
    else if (name == "dedup_iou") s.dedup_iou = to_double(key, value);
    else fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
  } else if (section == "matching") {
    const auto v = unquote(value);
    if (name == "direction") {
      if (v == "bidirectional") cfg.matching.direction = MatchDirection::kBidirectional;
      else if (v == "forward") cfg.matching.direction = MatchDirection::kForwardOnly;
      else if (v == "reverse") cfg.matching.direction = MatchDirection::kReverseOnly;
      else bad_value(key, value);
    } else if (name == "assignment") {
      if (v == "argmax") cfg.matching.assignment = MatchAssignment::kArgmax;
      else if (v == "one_to_one") cfg.matching.assignment = MatchAssignment::kOneToOne;
      else bad_value(key, value);
    } else {
      fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
    }
  } else if (section == "vos") {
    if (name == "capacity") cfg.vos.capacity = static_cast<int>(to_int(key, value));
    else if (name == "decay") cfg.vos.decay = to_double(key, value);
    else fail(ErrorCode::kConfigError, "unknown key '" + std::string(key) + "'");
  } else {
    fail(ErrorCode::kConfigError, "unknown section '" + std::string(section) + "'");
  }
}

RunConfig parse_config(std::string_view text, std::string_view default_preset) {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::string preset(default_preset);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": unterminated section");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (section.empty() && key == "preset") {
      preset = unquote(value);
    } else {
      entries.push_back({section.empty() ? key : section + "." + key, value, line_no});
    }
  }
  RunConfig cfg = preset_config(preset);
  for (const auto& e : entries) {
    try {
      apply_setting(cfg, e.key, e.value);
    } catch (const MatcherError& err) {
      fail(ErrorCode::kConfigError, "line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::string_view default_preset) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), default_preset);
}

void validate_config(const RunConfig& cfg) {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfigError, what);
  };
  require(cfg.grid.stride_px >= 1, "grid.stride_px must be >= 1");
  require(cfg.grid.mask_threshold > 0.0 && cfg.grid.mask_threshold <= 1.0,
          "grid.mask_threshold must lie in (0, 1]");
  const auto& s = cfg.sampler;
  require(s.num_clusters >= 1, "sampler.num_clusters must be >= 1");
  require(s.part_groups >= 0 && s.instance_groups >= 0 && s.global_groups >= 0,
          "sampler group counts must be >= 0");
  require(s.part_size >= 1 && s.instance_size >= 1 && s.global_size >= 1,
          "sampler group sizes must be >= 1");
  require(s.dense_grid_step >= 1, "sampler.dense_grid_step must be >= 1");
  require(s.kmeans_max_iter >= 1, "sampler.kmeans_max_iter must be >= 1");
  const auto& sel = cfg.select;
  require(!sel.max_emd || (*sel.max_emd >= 0.0 && *sel.max_emd <= 1.0), "select.max_emd must lie in [0, 1]");
  require(!sel.min_purity || *sel.min_purity >= 0.0, "select.min_purity must be >= 0");
  require(!sel.min_coverage || (*sel.min_coverage >= 0.0 && *sel.min_coverage <= 1.0),
          "select.min_coverage must lie in [0, 1]");
  require(sel.weights.alpha >= 0.0 && sel.weights.beta >= 0.0 && sel.weights.lambda >= 0.0,
          "select.alpha, beta and lambda must be >= 0");
  require(sel.num_merged >= 1, "select.num_merged must be >= 1");
  require(sel.dedup_iou > 0.0 && sel.dedup_iou <= 1.0, "select.dedup_iou must lie in (0, 1]");
  require(cfg.vos.capacity >= 1, "vos.capacity must be >= 1");
  require(cfg.vos.decay > 0.0 && cfg.vos.decay <= 1.0, "vos.decay must lie in (0, 1]");
  require(cfg.emd_support_cap >= 1, "emd_support_cap must be >= 1");
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  const auto& s = cfg.sampler;
  const auto& sel = cfg.select;
  return {
      {"preset", cfg.preset},
      {"task", std::string(task_name(cfg.task))},
      {"seed", cfg.seed},
      {"emd_support_cap", cfg.emd_support_cap},
      {"grid", {{"stride_px", cfg.grid.stride_px}, {"mask_threshold", cfg.grid.mask_threshold}}},
      {"sampler",
       {{"num_clusters", s.num_clusters},
        {"part_groups", s.part_groups},
        {"part_size", s.part_size},
        {"instance_groups", s.instance_groups},
        {"instance_size", s.instance_size},
        {"global_groups", s.global_groups},
        {"global_size", s.global_size},
        {"dense_instance_points", s.dense_instance_points},
        {"dense_grid_step", s.dense_grid_step}}},
      {"select",
       {{"max_emd", threshold_json(sel.max_emd)},
        {"min_purity", threshold_json(sel.min_purity)},
        {"min_coverage", threshold_json(sel.min_coverage)},
        {"alpha", sel.weights.alpha},
        {"beta", sel.weights.beta},
        {"lambda", sel.weights.lambda},
        {"num_merged", sel.num_merged},
        {"dedup_iou", sel.dedup_iou}}},
      {"matching",
       {{"direction", std::string(direction_name(cfg.matching.direction))},
        {"assignment", cfg.matching.assignment == MatchAssignment::kArgmax ? "argmax" : "one_to_one"}}},
      {"vos", {{"capacity", cfg.vos.capacity}, {"decay", cfg.vos.decay}}},
  };
}

}  // namespace matcher
