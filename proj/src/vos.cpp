#include "matcher/vos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "matcher/error.hpp"
#include "matcher/io.hpp"
#include "matcher/metrics.hpp"
#include "matcher/pipeline.hpp"
#include "matcher/rng.hpp"

namespace matcher {

using nlohmann::json;

double effective_score(const MemoryEntry& entry, int current_frame, double decay) {
  if (entry.pinned) return std::numeric_limits<double>::infinity();
  const int age = std::max(0, current_frame - entry.frame_idx);
  return entry.raw_score * std::pow(decay, age);
}

MemoryState start_memory(std::shared_ptr<const FeatureMap> first_frame, std::vector<ObjectMask> masks,
                         const VosConfig& cfg) {
  if (!first_frame) fail(ErrorCode::kInvalidArgument, "first frame features missing");
  if (masks.empty()) fail(ErrorCode::kInvalidArgument, "no reference object masks");
  MemoryState memory;
  memory.capacity = cfg.capacity;
  memory.decay = cfg.decay;
  memory.next_frame = 1;
  memory.entries.push_back({0, std::move(first_frame), std::move(masks), 1.0, true});
  return memory;
}

void insert_and_evict(MemoryState& memory, MemoryEntry entry) {
  const int now = std::max(entry.frame_idx, memory.next_frame);
  memory.entries.push_back(std::move(entry));
  while (static_cast<int>(memory.entries.size()) > std::max(memory.capacity, 1)) {
    auto victim = memory.entries.end();
    double lowest = std::numeric_limits<double>::infinity();
    for (auto it = memory.entries.begin(); it != memory.entries.end(); ++it) {
      if (it->pinned) continue;
      const double s = effective_score(*it, now, memory.decay);
      const bool older_tie = victim != memory.entries.end() && s == lowest && it->frame_idx < victim->frame_idx;
      if (s < lowest || victim == memory.entries.end() || older_tie) {
        lowest = s;
        victim = it;
      }
    }
    if (victim == memory.entries.end()) break;
    memory.entries.erase(victim);
  }
}

std::pair<FrameResult, MemoryState> track_frame(std::shared_ptr<const FeatureMap> frame,
                                                const std::string& image_id, int height_px,
                                                int width_px, const MemoryState& memory,
                                                const RunConfig& cfg, Segmenter& segmenter) {
  if (!frame) fail(ErrorCode::kInvalidArgument, "frame features missing");
  const auto pinned = std::find_if(memory.entries.begin(), memory.entries.end(),
                                   [](const MemoryEntry& e) { return e.pinned; });
  if (pinned == memory.entries.end()) fail(ErrorCode::kInvalidArgument, "memory has no pinned entry");

  FrameResult result;
  result.frame_idx = memory.next_frame;
  const TargetView target{frame.get(), image_id, height_px, width_px};

  for (const auto& ref_obj : pinned->masks) {
    std::vector<ReferenceView> views;
    for (const auto& entry : memory.entries) {
      for (const auto& om : entry.masks) {
        if (om.object_id != ref_obj.object_id || !om.mask.any()) continue;
        try {
          views.push_back({entry.features.get(), reference_patches(om.mask, *entry.features, cfg.grid)});
        } catch (const MatcherError& e) {
          if (e.code() != ErrorCode::kEmptyResult) throw;
        }
      }
    }
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(result.frame_idx) * 1009u +
                                                static_cast<std::uint64_t>(ref_obj.object_id));
    auto run = run_pipeline(views, target, cfg, segmenter, seed);
    result.masks.push_back({ref_obj.object_id, std::move(run.mask)});
    result.object_scores.push_back(run.winning_score);
    result.lost.push_back(run.lost);
  }

  // Overlaps go to the object with the higher winning score.
  if (result.masks.size() > 1) {
    const int h = result.masks.front().mask.height();
    const int w = result.masks.front().mask.width();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int owner = -1;
        for (std::size_t o = 0; o < result.masks.size(); ++o) {
          if (!result.masks[o].mask.at(y, x)) continue;
          if (owner < 0 || result.object_scores[o] > result.object_scores[static_cast<std::size_t>(owner)]) {
            owner = static_cast<int>(o);
          }
        }
        for (std::size_t o = 0; o < result.masks.size(); ++o) {
          if (static_cast<int>(o) != owner && result.masks[o].mask.at(y, x)) result.masks[o].mask.set(y, x, false);
        }
      }
    }
  }

  double raw = 0.0;
  for (double s : result.object_scores) raw += s;
  raw /= static_cast<double>(std::max<std::size_t>(result.object_scores.size(), 1));

  MemoryState next = memory;
  insert_and_evict(next, {result.frame_idx, std::move(frame), result.masks, raw, false});
  next.next_frame = result.frame_idx + 1;
  return {std::move(result), std::move(next)};
}

VideoManifest load_video_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open video manifest " + path.string());
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  VideoManifest m;
  try {
    const json j = json::parse(in);
    for (const auto& f : j.at("frames")) {
      VideoFrame frame;
      frame.features = resolve(f.at("features").get<std::string>());
      frame.image_id = f.value("image_id", frame.features.stem().string());
      frame.height = f.value("height", 0);
      frame.width = f.value("width", 0);
      if (f.contains("ground_truth")) {
        for (const auto& [obj, gt] : f.at("ground_truth").items()) {
          frame.ground_truth.emplace_back(std::stoi(obj), resolve(gt.get<std::string>()));
        }
      }
      m.frames.push_back(std::move(frame));
    }
    for (const auto& o : j.at("objects")) {
      m.reference_masks.emplace_back(o.at("id").get<int>(), resolve(o.at("reference_mask").get<std::string>()));
    }
    if (j.contains("oracle")) m.oracle_images = parse_oracle_images(j.at("oracle"), base);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::kConfigError, path.string() + ": object ids must be integers");
  }
  if (m.frames.empty()) fail(ErrorCode::kConfigError, "video manifest has no frames");
  if (m.reference_masks.empty()) fail(ErrorCode::kConfigError, "video manifest has no objects");
  return m;
}

VideoOutcome run_video(const VideoManifest& manifest, const RunConfig& cfg, Segmenter& segmenter) {
  VideoOutcome out;
  auto first = std::make_shared<const FeatureMap>(load_feature_map(manifest.frames[0].features, cfg.grid.stride_px));
  std::vector<ObjectMask> ref_masks;
  for (const auto& [id, path] : manifest.reference_masks) ref_masks.push_back({id, load_mask_png(path)});
  out.frames.push_back(ref_masks);
  auto memory = start_memory(first, ref_masks, cfg.vos);

  json frames_report = json::array();
  for (std::size_t t = 1; t < manifest.frames.size(); ++t) {
    const auto& vf = manifest.frames[t];
    auto features = std::make_shared<const FeatureMap>(load_feature_map(vf.features, cfg.grid.stride_px));
    const int h = vf.height > 0 ? vf.height : ref_masks.front().mask.height();
    const int w = vf.width > 0 ? vf.width : ref_masks.front().mask.width();
    auto [result, next] = track_frame(features, vf.image_id, h, w, memory, cfg, segmenter);
    json objects = json::array();
    for (std::size_t o = 0; o < result.masks.size(); ++o) {
      objects.push_back({{"object", result.masks[o].object_id},
                         {"score", result.object_scores[o]},
                         {"lost", static_cast<bool>(result.lost[o])},
                         {"area", result.masks[o].mask.area()}});
    }
    json memory_frames = json::array();
    for (const auto& e : next.entries) memory_frames.push_back(e.frame_idx);
    frames_report.push_back({{"frame", t}, {"objects", objects}, {"memory", memory_frames}});
    out.frames.push_back(std::move(result.masks));
    memory = std::move(next);
  }

  // J&F per object over frames with ground truth, excluding the reference frame.
  std::map<int, std::pair<std::vector<PixelMask>, std::vector<PixelMask>>> seqs;
  for (std::size_t t = 1; t < manifest.frames.size(); ++t) {
    for (const auto& [id, path] : manifest.frames[t].ground_truth) {
      const auto pred = std::find_if(out.frames[t].begin(), out.frames[t].end(),
                                     [&](const ObjectMask& m) { return m.object_id == id; });
      if (pred == out.frames[t].end()) continue;
      seqs[id].first.push_back(pred->mask);
      seqs[id].second.push_back(load_mask_png(path));
    }
  }
  json per_object = json::array();
  if (!seqs.empty()) {
    double j = 0.0;
    double f = 0.0;
    for (const auto& [id, seq] : seqs) {
      const auto jf = j_and_f(seq.first, seq.second);
      per_object.push_back({{"object", id}, {"J", jf.j}, {"F", jf.f}, {"J&F", jf.jf}});
      j += jf.j;
      f += jf.f;
    }
    out.j = j / static_cast<double>(seqs.size());
    out.f = f / static_cast<double>(seqs.size());
    out.jf = (*out.j + *out.f) / 2.0;
  }
  out.report = {{"config", config_to_json(cfg)},
                {"frames", frames_report},
                {"objects", per_object},
                {"J", out.j ? json(*out.j) : json(nullptr)},
                {"F", out.f ? json(*out.f) : json(nullptr)},
                {"J&F", out.jf ? json(*out.jf) : json(nullptr)}};
  return out;
}

}  // namespace matcher
