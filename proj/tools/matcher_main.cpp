#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "matcher/config.hpp"
#include "matcher/episode.hpp"
#include "matcher/error.hpp"
#include "matcher/io.hpp"
#include "matcher/render.hpp"
#include "matcher/synthetic.hpp"
#include "matcher/vos.hpp"

using namespace matcher;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> num_merged;
  std::vector<std::string> settings;
  std::string segmenter = "oracle";
  std::string report_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--preset", o.preset, "coco, lvis, fss, part or vos");
  cmd->add_option("--config", o.config, "Config file; flags override its values")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--num-merged", o.num_merged, "Proposals merged into the final mask")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.settings, "Override one setting, e.g. --set select.max_emd=0.7");
  cmd->add_option("--segmenter", o.segmenter, "oracle or external:<address>");
  cmd->add_option("--report-dir", o.report_dir, "Directory for reports and masks");
}

// A --preset flag wins over a top-level preset line in the config file.
std::string drop_top_level_preset(const std::string& text) {
  static const std::regex preset_line(R"(^\s*preset\s*=)");
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  bool top_level = true;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '[') top_level = false;
    if (top_level && std::regex_search(line, preset_line)) continue;
    out << line << '\n';
  }
  return out.str();
}

RunConfig build_config(const CommonOptions& o, const std::string& default_preset) {
  RunConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) fail(ErrorCode::kIoError, "cannot open config " + o.config);
    std::stringstream buf;
    buf << in.rdbuf();
    cfg = o.preset.empty() ? parse_config(buf.str(), default_preset)
                           : parse_config(drop_top_level_preset(buf.str()), o.preset);
  } else {
    cfg = preset_config(o.preset.empty() ? default_preset : o.preset);
  }
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfigError, "--set expects key=value, got " + s);
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.num_merged) cfg.select.num_merged = *o.num_merged;
  validate_config(cfg);
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_mask(const PixelMask& mask, const fs::path& path) {
  fs::create_directories(path.parent_path());
  save_mask_png(mask, path);
}

std::shared_ptr<OracleSegmenter> oracle_for(const CommonOptions& o, const std::vector<OracleImageSpec>& images) {
  if (o.segmenter != "oracle") return nullptr;
  auto oracle = std::make_shared<OracleSegmenter>();
  register_oracle_images(*oracle, images);
  return oracle;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

struct MatchArgs {
  std::string list;
  std::string episode;
  std::string out;
};

int run_match(const CommonOptions& o, const MatchArgs& a) {
  const auto cfg = build_config(o, "fss");
  const auto list = load_episode_list(a.list);
  if (list.episodes.empty()) fail(ErrorCode::kConfigError, a.list + " lists no episodes");
  auto ep = list.episodes.front();
  if (!a.episode.empty()) {
    const auto it = std::find_if(list.episodes.begin(), list.episodes.end(),
                                 [&](const Episode& e) { return e.id == a.episode; });
    if (it == list.episodes.end()) fail(ErrorCode::kConfigError, "no episode '" + a.episode + "' in " + a.list);
    ep = *it;
  }
  auto segmenter = segmenter_factory(o.segmenter, oracle_for(o, list.oracle_images))();
  const auto outcome = run_episode(ep, cfg, *segmenter, cfg.seed);
  std::cout << "episode " << outcome.id << ": area " << outcome.mask.area() << ", kept "
            << outcome.result.kept.size() << " of " << outcome.result.proposals.size() << " proposals, IoU "
            << fmt_opt(outcome.iou) << '\n';
  if (!a.out.empty()) save_mask(outcome.mask, a.out);
  if (!o.report_dir.empty()) {
    const fs::path dir(o.report_dir);
    json report = outcome.report;
    report["config"] = config_to_json(cfg);
    write_json(dir / (outcome.id + ".json"), report);
    save_mask(outcome.mask, dir / (outcome.id + ".png"));
  }
  return 0;
}

int run_bench_cmd(const CommonOptions& o, const std::string& list_path, int jobs) {
  const auto cfg = build_config(o, "fss");
  const auto list = load_episode_list(list_path);
  const auto start = std::chrono::steady_clock::now();
  const auto summary = run_bench(list.episodes, cfg, segmenter_factory(o.segmenter, oracle_for(o, list.oracle_images)), jobs);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "episodes " << summary.outcomes.size() << ", mIoU " << fmt_opt(summary.miou) << '\n';
  if (!o.report_dir.empty()) {
    const fs::path dir(o.report_dir);
    write_json(dir / "bench.json", summary.report);
    json timings = {{"total_seconds", total}, {"jobs", jobs}, {"episodes", json::object()}};
    for (const auto& out : summary.outcomes) {
      write_json(dir / "episodes" / (out.id + ".json"), out.report);
      save_mask(out.mask, dir / "masks" / (out.id + ".png"));
      timings["episodes"][out.id] = out.seconds;
    }
    write_json(dir / "timings.json", timings);
  }
  return 0;
}

int run_vos_cmd(const CommonOptions& o, const std::string& manifest_path) {
  const auto cfg = build_config(o, "vos");
  const auto manifest = load_video_manifest(manifest_path);
  auto segmenter = segmenter_factory(o.segmenter, oracle_for(o, manifest.oracle_images))();
  const auto start = std::chrono::steady_clock::now();
  const auto outcome = run_video(manifest, cfg, *segmenter);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "frames " << outcome.frames.size() << ", J " << fmt_opt(outcome.j) << ", F " << fmt_opt(outcome.f)
            << ", J&F " << fmt_opt(outcome.jf) << '\n';
  if (!o.report_dir.empty()) {
    const fs::path dir(o.report_dir);
    write_json(dir / "vos.json", outcome.report);
    write_json(dir / "timings.json", {{"total_seconds", total}});
    for (std::size_t t = 0; t < outcome.frames.size(); ++t) {
      for (const auto& m : outcome.frames[t]) {
        char name[64];
        std::snprintf(name, sizeof name, "frame%03zu_obj%d.png", t, m.object_id);
        save_mask(m.mask, dir / "masks" / name);
      }
    }
  }
  return 0;
}

int run_render(const std::vector<std::string>& mask_paths, const std::string& image, const std::string& out) {
  std::vector<PixelMask> masks;
  for (const auto& p : mask_paths) masks.push_back(load_mask_png(p));
  std::optional<RgbImage> background;
  if (!image.empty()) background = load_rgb_png(image);
  render_overlay(background, masks, out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

int run_synth(const std::string& kind, int count, std::uint64_t seed, const std::string& out) {
  if (kind == "video") {
    for (int i = 0; i < count; ++i) {
      const auto video = synthetic::occlusion_video(seed + static_cast<std::uint64_t>(i));
      std::cout << synthetic::write_video_bundle(fs::path(out) / video.id, video).string() << '\n';
    }
    return 0;
  }
  std::vector<synthetic::SyntheticEpisode> eps;
  for (int i = 0; i < count; ++i) {
    const auto s = seed + static_cast<std::uint64_t>(i);
    if (kind == "identity") eps.push_back(synthetic::identity_episode(s));
    else if (kind == "distractor") eps.push_back(synthetic::distractor_episode(s));
    else if (kind == "multi_instance") eps.push_back(synthetic::multi_instance_episode(s));
    else if (kind == "two_instance") eps.push_back(synthetic::two_instance_episode(s));
    else fail(ErrorCode::kConfigError, "unknown scene kind '" + kind + "'");
  }
  std::cout << synthetic::write_episode_bundle(out, eps).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot segmentation from a single reference mask"};
  app.require_subcommand(1);

  CommonOptions match_opts;
  MatchArgs match_args;
  auto* match = app.add_subcommand("match", "Run one episode");
  add_common(match, match_opts);
  match->add_option("episodes", match_args.list, "Episode list (JSON)")->required()->check(CLI::ExistingFile);
  match->add_option("--episode", match_args.episode, "Episode id (default: the first)");
  match->add_option("--out", match_args.out, "Write the predicted mask PNG here");

  CommonOptions bench_opts;
  std::string bench_list;
  int jobs = 1;
  auto* bench = app.add_subcommand("bench", "Run an episode list and report mIoU");
  add_common(bench, bench_opts);
  bench->add_option("episodes", bench_list, "Episode list (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  CommonOptions vos_opts;
  std::string manifest;
  auto* vos = app.add_subcommand("vos", "Track objects through a video manifest");
  add_common(vos, vos_opts);
  vos->add_option("manifest", manifest, "Video manifest (JSON)")->required()->check(CLI::ExistingFile);

  std::vector<std::string> render_masks;
  std::string render_image;
  std::string render_out;
  auto* render = app.add_subcommand("render", "Overlay masks on an image or on gray");
  render->add_option("--mask", render_masks, "Mask PNG, repeatable")->required()->check(CLI::ExistingFile);
  render->add_option("--image", render_image, "Background RGB PNG")->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "Output PNG")->required();

  std::string synth_kind;
  int synth_count = 10;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write synthetic episodes or videos with oracle shapes");
  synth->add_option("kind", synth_kind, "identity, distractor, multi_instance, two_instance or video")->required();
  synth->add_option("--count", synth_count, "Number of episodes or videos")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "First scene seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*match) return run_match(match_opts, match_args);
    if (*bench) return run_bench_cmd(bench_opts, bench_list, jobs);
    if (*vos) return run_vos_cmd(vos_opts, manifest);
    if (*render) return run_render(render_masks, render_image, render_out);
    if (*synth) return run_synth(synth_kind, synth_count, synth_seed, synth_out);
  } catch (const MatcherError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
