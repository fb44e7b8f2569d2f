#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "matcher/rng.hpp"
#include "matcher/segmenter.hpp"
#include "matcher/tensor.hpp"

/// Synthetic feature scenes with known ground truth: class prototypes painted
/// onto a patch grid over per-patch random clutter, plus the matching shapes
/// for the oracle segmenter.
namespace matcher::synthetic {

PixelMask disk(int height_px, int width_px, double cx, double cy, double radius);
PixelMask rect(int height_px, int width_px, int x0, int y0, int x1, int y1);

/// Standard normal draw (Box-Muller).
double gaussian(Rng& rng);
std::vector<float> random_unit(int channels, Rng& rng);
/// Unit vector with cosine `similarity` to the unit vector `proto`.
std::vector<float> lookalike(const std::vector<float>& proto, double similarity, Rng& rng);

struct GridSpec {
  int grid = 16;
  int stride_px = 14;
  int channels = 32;
  int height_px() const { return grid * stride_px; }
  int width_px() const { return grid * stride_px; }
};

void paint_patches(std::vector<float>& data, const GridSpec& spec, const PixelMask& region,
                   const std::vector<float>& proto, double noise, Rng& rng);

class SceneBuilder {
 public:
  /// Starts from clutter: an independent random unit feature per patch.
  SceneBuilder(const GridSpec& spec, Rng& rng);

  /// Every patch overlapping `region` by a fraction f becomes
  /// f * (proto + noise * z) + (1 - f) * old, with z ~ N(0, I / channels).
  void paint(const PixelMask& region, const std::vector<float>& proto, double noise);
  void add_shape(std::string id, PixelMask mask, std::optional<std::string> parent = std::nullopt);

  FeatureMap features(std::string origin) const;
  const std::vector<OracleShape>& shapes() const { return shapes_; }

 private:
  GridSpec spec_;
  Rng& rng_;
  std::vector<float> data_;
  std::vector<OracleShape> shapes_;
};

struct SyntheticEpisode {
  std::string id;
  FeatureMap reference;
  PixelMask reference_mask;
  FeatureMap target;
  std::string target_image_id;
  PixelMask ground_truth;
  std::vector<OracleShape> target_shapes;
  /// Individual ground-truth instances where the scene has several.
  std::vector<PixelMask> instances;
};

/// Target is a copy of the reference; several distinct-class objects.
SyntheticEpisode identity_episode(std::uint64_t seed, const GridSpec& spec = {});

/// Reference holds the object plus an off-mask look-alike; the target holds a
/// second instance of the class, the look-alike, and a novel region that
/// resembles the class more than anything else in the reference except the
/// object itself.
SyntheticEpisode distractor_episode(std::uint64_t seed, const GridSpec& spec = {});

/// Two instances of the class side by side, each with a registered core part,
/// inside a registered container region.
SyntheticEpisode multi_instance_episode(std::uint64_t seed, const GridSpec& spec = {});

/// Two well separated instances of the class on clutter.
SyntheticEpisode two_instance_episode(std::uint64_t seed, const GridSpec& spec = {});

struct SyntheticVideo {
  std::string id;
  std::vector<FeatureMap> frames;
  std::vector<std::string> image_ids;
  /// ground_truth[t][o]: object o at frame t.
  std::vector<std::vector<PixelMask>> ground_truth;
  std::vector<std::vector<OracleShape>> shapes;
  std::vector<int> object_ids;
  /// Frame at which an occluded object becomes visible again, -1 if none.
  int reappear_frame = -1;
};

struct VideoSpec {
  int num_frames = 12;
  int num_objects = 1;
  int occlusion_start = 5;
  int occlusion_length = 3;
  /// Appearance rotation per frame, radians.
  double drift_per_frame = 0.17;
  double noise = 0.35;
};

/// Translating objects whose appearance drifts frame to frame; the first
/// object vanishes for `occlusion_length` frames mid-sequence.
SyntheticVideo occlusion_video(std::uint64_t seed, const VideoSpec& vspec = {},
                               const GridSpec& spec = {});

void register_episode(OracleSegmenter& oracle, const SyntheticEpisode& ep);
void register_video(OracleSegmenter& oracle, const SyntheticVideo& video);

/// Writes MTFT/PNG files plus an episode list with oracle shapes
/// (`episodes.json`) under `dir`.
std::filesystem::path write_episode_bundle(const std::filesystem::path& dir,
                                           const std::vector<SyntheticEpisode>& episodes);
/// Writes a video manifest (`manifest.json`) with frames, masks and oracle shapes.
std::filesystem::path write_video_bundle(const std::filesystem::path& dir, const SyntheticVideo& video);

}  // namespace matcher::synthetic
