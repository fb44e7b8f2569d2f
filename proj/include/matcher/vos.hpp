#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matcher/config.hpp"
#include "matcher/episode.hpp"
#include "matcher/segmenter.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

struct ObjectMask {
  int object_id = 0;
  PixelMask mask;
};

struct MemoryEntry {
  int frame_idx = 0;
  std::shared_ptr<const FeatureMap> features;
  std::vector<ObjectMask> masks;
  double raw_score = 0.0;
  bool pinned = false;
};

/// Reference memory: the pinned first frame plus the best-scoring recent
/// predictions, at most `capacity` entries in total.
struct MemoryState {
  std::vector<MemoryEntry> entries;
  int capacity = 4;
  double decay = 0.9;
  int next_frame = 1;
};

/// raw_score * decay^(age); pinned entries rank above everything.
double effective_score(const MemoryEntry& entry, int current_frame, double decay);

MemoryState start_memory(std::shared_ptr<const FeatureMap> first_frame, std::vector<ObjectMask> masks,
                         const VosConfig& cfg);

/// Inserts the entry and evicts the lowest effective-score unpinned entries
/// (oldest first on ties) until the capacity holds.
void insert_and_evict(MemoryState& memory, MemoryEntry entry);

struct FrameResult {
  int frame_idx = 0;
  std::vector<ObjectMask> masks;
  std::vector<double> object_scores;
  std::vector<bool> lost;
};

/// Segments every object in the frame against every memory entry (pooled
/// matches), arbitrates overlapping pixels by winning score, and returns the
/// prediction with the updated memory.
std::pair<FrameResult, MemoryState> track_frame(std::shared_ptr<const FeatureMap> frame,
                                                const std::string& image_id, int height_px,
                                                int width_px, const MemoryState& memory,
                                                const RunConfig& cfg, Segmenter& segmenter);

struct VideoFrame {
  std::string image_id;
  std::filesystem::path features;
  int height = 0;
  int width = 0;
  /// object id -> ground truth mask path
  std::vector<std::pair<int, std::filesystem::path>> ground_truth;
};

/// Video manifest (JSON): ordered frames, reference masks of every object on
/// the first frame, optional per-frame ground truth and oracle shapes.
struct VideoManifest {
  std::vector<VideoFrame> frames;
  std::vector<std::pair<int, std::filesystem::path>> reference_masks;
  std::vector<OracleImageSpec> oracle_images;
};

VideoManifest load_video_manifest(const std::filesystem::path& path);

struct VideoOutcome {
  /// frames[t][o] is object o's mask at frame t (frame 0 = the reference).
  std::vector<std::vector<ObjectMask>> frames;
  std::optional<double> j;
  std::optional<double> f;
  std::optional<double> jf;
  nlohmann::json report;
};

VideoOutcome run_video(const VideoManifest& manifest, const RunConfig& cfg, Segmenter& segmenter);

}  // namespace matcher
