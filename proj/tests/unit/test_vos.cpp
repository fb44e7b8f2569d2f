#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "matcher/error.hpp"
#include "matcher/synthetic.hpp"
#include "matcher/vos.hpp"
#include "scenario_runner.hpp"

using namespace matcher;

namespace {

MemoryEntry entry(int frame, double raw, bool pinned = false) {
  return {frame, std::make_shared<const FeatureMap>(1, 1, 1, std::vector<float>{1.0f}), {}, raw, pinned};
}

std::vector<int> frames_of(const MemoryState& m) {
  std::vector<int> out;
  for (const auto& e : m.entries) out.push_back(e.frame_idx);
  return out;
}

}  // namespace

TEST_CASE("effective score decays with age") {
  CHECK(effective_score(entry(3, 0.7), 9, 1.0) == doctest::Approx(0.7));
  CHECK(effective_score(entry(3, 1.0), 5, 0.5) == doctest::Approx(0.25));
  CHECK(effective_score(entry(0, 0.0, true), 100, 0.1) == std::numeric_limits<double>::infinity());
}

TEST_CASE("eviction keeps the pinned frame and the best recent entries") {
  MemoryState m;
  m.capacity = 3;
  m.decay = 0.9;
  m.entries.push_back(entry(0, 0.0, true));
  insert_and_evict(m, entry(1, 0.9));
  insert_and_evict(m, entry(2, 0.5));
  CHECK(frames_of(m) == std::vector<int>{0, 1, 2});
  insert_and_evict(m, entry(3, 0.8));
  CHECK(frames_of(m) == std::vector<int>{0, 1, 3});
  // Equal effective scores: the older one goes.
  m.decay = 1.0;
  m.entries = {entry(0, 0.0, true), entry(4, 0.6), entry(5, 0.6)};
  insert_and_evict(m, entry(6, 0.6));
  CHECK(frames_of(m) == std::vector<int>{0, 5, 6});
}

TEST_CASE("capacity is never exceeded and the pinned entry survives") {
  Rng rng(5);
  for (int capacity = 1; capacity <= 5; ++capacity) {
    MemoryState m;
    m.capacity = capacity;
    m.entries.push_back(entry(0, 0.0, true));
    for (int t = 1; t < 30; ++t) {
      m.next_frame = t;
      insert_and_evict(m, entry(t, rng.uniform01()));
      CHECK(static_cast<int>(m.entries.size()) <= capacity);
      CHECK(std::any_of(m.entries.begin(), m.entries.end(), [](const MemoryEntry& e) { return e.pinned; }));
    }
  }
}

TEST_CASE("a static video is tracked exactly") {
  synthetic::VideoSpec vs;
  vs.num_frames = 4;
  vs.occlusion_length = 0;
  vs.drift_per_frame = 0.0;
  const auto video = synthetic::occlusion_video(3, vs);
  const auto run = testing::run_synthetic_video(video, preset_config("vos"));
  for (std::size_t t = 1; t < video.frames.size(); ++t) {
    CHECK(iou(run.frames[t][0].mask, video.ground_truth[t][0]) >= 0.9);
  }
}

TEST_CASE("translating two-object video stays on target and is deterministic") {
  synthetic::VideoSpec vs;
  vs.num_frames = 10;
  vs.num_objects = 2;
  vs.occlusion_length = 0;
  const auto video = synthetic::occlusion_video(8, vs);
  const auto cfg = preset_config("vos");
  const auto run = testing::run_synthetic_video(video, cfg);
  for (std::size_t t = 1; t < video.frames.size(); ++t) {
    for (std::size_t o = 0; o < 2; ++o) CHECK(iou(run.frames[t][o].mask, video.ground_truth[t][o]) >= 0.9);
    CHECK(intersection_area(run.frames[t][0].mask, run.frames[t][1].mask) == 0u);
  }
  const auto again = testing::run_synthetic_video(video, cfg);
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    for (std::size_t o = 0; o < 2; ++o) CHECK(again.frames[t][o].mask == run.frames[t][o].mask);
  }
}

TEST_CASE("capacity one tracks from the first frame only") {
  const auto video = synthetic::occlusion_video(4);
  auto cfg = preset_config("vos");
  cfg.vos.capacity = 1;
  OracleSegmenter oracle;
  synthetic::register_video(oracle, video);
  auto memory = start_memory(std::make_shared<const FeatureMap>(video.frames[0]),
                             {{video.object_ids[0], video.ground_truth[0][0]}}, cfg.vos);
  for (std::size_t t = 1; t < 4; ++t) {
    const auto& f = video.frames[t];
    auto [result, next] = track_frame(std::make_shared<const FeatureMap>(f), video.image_ids[t], f.height_px(),
                                      f.width_px(), memory, cfg, oracle);
    CHECK(frames_of(next) == std::vector<int>{0});
    CHECK(next.next_frame == static_cast<int>(t) + 1);
    memory = std::move(next);
  }
}

TEST_CASE("manifest round-trip and run_video") {
  const auto dir = std::filesystem::temp_directory_path() / ("matcher_vos_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto video = synthetic::occlusion_video(2);
  const auto manifest = load_video_manifest(synthetic::write_video_bundle(dir, video));
  CHECK(manifest.frames.size() == video.frames.size());
  REQUIRE(manifest.reference_masks.size() == 1);
  OracleSegmenter oracle;
  register_oracle_images(oracle, manifest.oracle_images);
  const auto cfg = preset_config("vos");
  const auto out = run_video(manifest, cfg, oracle);
  REQUIRE(out.jf);
  CHECK(*out.jf == doctest::Approx(testing::run_synthetic_video(video, cfg).jf));
  CHECK(out.report["frames"].size() == video.frames.size() - 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_video_manifest(dir / "manifest.json"), MatcherError);
}
