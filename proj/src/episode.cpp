#include "matcher/episode.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "matcher/error.hpp"
#include "matcher/io.hpp"
#include "matcher/metrics.hpp"
#include "matcher/rng.hpp"
#include "matcher/wire.hpp"

namespace matcher {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Forwards to a shared backend that is safe for concurrent use.
class SharedSegmenter final : public Segmenter {
 public:
  explicit SharedSegmenter(std::shared_ptr<Segmenter> inner) : inner_(std::move(inner)) {}
  SegmentResponse segment(const SegmentRequest& request) override { return inner_->segment(request); }

 private:
  std::shared_ptr<Segmenter> inner_;
};

}  // namespace

std::vector<OracleImageSpec> parse_oracle_images(const json& j, const std::filesystem::path& base_dir) {
  std::vector<OracleImageSpec> out;
  try {
    for (const auto& img : j.at("images")) {
      OracleImageSpec spec;
      spec.image_id = img.at("image_id").get<std::string>();
      spec.height = img.at("height").get<int>();
      spec.width = img.at("width").get<int>();
      for (const auto& s : img.at("shapes")) {
        OracleImageSpec::Shape shape;
        shape.id = s.at("id").get<std::string>();
        shape.mask = resolve(base_dir, s.at("mask").get<std::string>());
        if (s.contains("parent") && !s.at("parent").is_null()) {
          shape.parent = s.at("parent").get<std::string>();
        }
        spec.shapes.push_back(std::move(shape));
      }
      out.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("malformed oracle section: ") + e.what());
  }
  return out;
}

EpisodeList parse_episode_list(const json& j, const std::filesystem::path& base_dir) {
  EpisodeList list;
  try {
    for (const auto& e : j.at("episodes")) {
      Episode ep;
      ep.id = e.at("id").get<std::string>();
      ep.reference_features = resolve(base_dir, e.at("reference").at("features").get<std::string>());
      ep.reference_mask = resolve(base_dir, e.at("reference").at("mask").get<std::string>());
      const auto& t = e.at("target");
      ep.target_features = resolve(base_dir, t.at("features").get<std::string>());
      ep.target_image_id = t.value("image_id", ep.target_features.stem().string());
      ep.target_height = t.value("height", 0);
      ep.target_width = t.value("width", 0);
      if (e.contains("ground_truth") && !e.at("ground_truth").is_null()) {
        ep.ground_truth = resolve(base_dir, e.at("ground_truth").get<std::string>());
      }
      list.episodes.push_back(std::move(ep));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("malformed episode list: ") + e.what());
  }
  if (j.contains("oracle")) list.oracle_images = parse_oracle_images(j.at("oracle"), base_dir);
  return list;
}

EpisodeList load_episode_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open episode list " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return parse_episode_list(j, path.parent_path());
}

void register_oracle_images(OracleSegmenter& oracle, const std::vector<OracleImageSpec>& images) {
  for (const auto& img : images) {
    std::vector<OracleShape> shapes;
    for (const auto& s : img.shapes) shapes.push_back({s.id, load_mask_png(s.mask), s.parent});
    oracle.register_image(img.image_id, img.height, img.width, std::move(shapes));
  }
}

EpisodeOutcome run_episode(const Episode& ep, const RunConfig& cfg, Segmenter& segmenter,
                           std::uint64_t seed) {
  try {
    const auto z_ref = load_feature_map(ep.reference_features, cfg.grid.stride_px);
    const auto z_tgt = load_feature_map(ep.target_features, cfg.grid.stride_px);
    const auto ref_mask = load_mask_png(ep.reference_mask);
    std::optional<PixelMask> gt;
    if (ep.ground_truth) gt = load_mask_png(*ep.ground_truth);

    TargetView target{&z_tgt, ep.target_image_id, ep.target_height, ep.target_width};
    if (target.height_px == 0 && gt) {
      target.height_px = gt->height();
      target.width_px = gt->width();
    }
    const ReferenceView ref{&z_ref, reference_patches(ref_mask, z_ref, cfg.grid)};

    EpisodeOutcome out;
    out.id = ep.id;
    out.result = run_pipeline(std::span(&ref, 1), target, cfg, segmenter, seed);
    out.mask = out.result.mask;
    if (gt) out.iou = iou(out.mask, *gt);
    out.report = pipeline_report(out.result);
    out.report["episode"] = ep.id;
    out.report["seed"] = seed;
    out.report["thresholds"] = config_to_json(cfg)["select"];
    out.report["iou"] = out.iou ? json(*out.iou) : json(nullptr);
    return out;
  } catch (const MatcherError& e) {
    fail(e.code(), "episode " + ep.id + ": " + e.what());
  }
}

BenchSummary run_bench(const std::vector<Episode>& episodes, const RunConfig& cfg,
                       const SegmenterFactory& make_segmenter, int jobs) {
  BenchSummary summary;
  summary.outcomes.resize(episodes.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const auto worker = [&]() {
    std::unique_ptr<Segmenter> seg;
    try {
      seg = make_segmenter();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < episodes.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        summary.outcomes[i] = run_episode(episodes[i], cfg, *seg, derive_seed(cfg.seed, i));
        summary.outcomes[i].seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(episodes.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<PixelMask> preds;
  std::vector<PixelMask> gts;
  json per_episode = json::array();
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& o = summary.outcomes[i];
    per_episode.push_back({{"episode", o.id}, {"iou", o.iou ? json(*o.iou) : json(nullptr)}});
    if (episodes[i].ground_truth) {
      preds.push_back(o.mask);
      gts.push_back(load_mask_png(*episodes[i].ground_truth));
    }
  }
  if (!gts.empty()) summary.miou = miou(preds, gts);
  summary.report = {{"config", config_to_json(cfg)},
                    {"episodes", per_episode},
                    {"num_episodes", episodes.size()},
                    {"miou", summary.miou ? json(*summary.miou) : json(nullptr)}};
  return summary;
}

SegmenterFactory segmenter_factory(const std::string& spec, std::shared_ptr<OracleSegmenter> oracle) {
  if (spec == "oracle") {
    if (!oracle) fail(ErrorCode::kConfigError, "oracle segmenter requested without oracle shapes");
    return [oracle]() -> std::unique_ptr<Segmenter> { return std::make_unique<SharedSegmenter>(oracle); };
  }
  if (spec.starts_with("external:")) {
    const auto address = spec.substr(9);
    return [address]() -> std::unique_ptr<Segmenter> { return std::make_unique<ExternalSegmenter>(address); };
  }
  fail(ErrorCode::kConfigError, "segmenter must be 'oracle' or 'external:<address>', got " + spec);
}

}  // namespace matcher
