#include "matcher/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "matcher/error.hpp"
#include "matcher/io.hpp"

namespace matcher::synthetic {

using nlohmann::json;

PixelMask disk(int height_px, int width_px, double cx, double cy, double radius) {
  PixelMask m(height_px, width_px);
  for (int y = 0; y < height_px; ++y) {
    for (int x = 0; x < width_px; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) m.set(y, x);
    }
  }
  return m;
}

PixelMask rect(int height_px, int width_px, int x0, int y0, int x1, int y1) {
  PixelMask m(height_px, width_px);
  for (int y = std::max(y0, 0); y < std::min(y1, height_px); ++y) {
    for (int x = std::max(x0, 0); x < std::min(x1, width_px); ++x) m.set(y, x);
  }
  return m;
}

double gaussian(Rng& rng) {
  double u1 = rng.uniform01();
  while (u1 <= 0.0) u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

struct Disk {
  double cx;
  double cy;
  double r;
};

bool overlaps(const Disk& a, const Disk& b, double gap) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy) < a.r + b.r + gap;
}

// Rejection-samples a disk fully inside [x0,x1) x [y0,y1) and clear of `taken`.
Disk place_disk(Rng& rng, double r_min, double r_max, double x0, double y0, double x1, double y1,
                const std::vector<Disk>& taken, double gap) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double r = r_min + (r_max - r_min) * rng.uniform01();
    if (x1 - x0 < 2 * r || y1 - y0 < 2 * r) continue;
    Disk d{x0 + r + (x1 - x0 - 2 * r) * rng.uniform01(), y0 + r + (y1 - y0 - 2 * r) * rng.uniform01(), r};
    if (std::none_of(taken.begin(), taken.end(), [&](const Disk& t) { return overlaps(d, t, gap); })) {
      return d;
    }
  }
  fail(ErrorCode::kInvalidArgument, "cannot place a disk in the synthetic scene");
}

PixelMask to_mask(const GridSpec& spec, const Disk& d) {
  return disk(spec.height_px(), spec.width_px(), d.cx, d.cy, d.r);
}

PixelMask intersect(const PixelMask& a, const PixelMask& b) {
  PixelMask out(a.height(), a.width());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) out.set(y, x, a.at(y, x) && b.at(y, x));
  }
  return out;
}

PixelMask upper_half(const GridSpec& spec, const Disk& d) {
  return intersect(to_mask(spec, d),
                   rect(spec.height_px(), spec.width_px(), 0, 0, spec.width_px(), static_cast<int>(std::round(d.cy))));
}

PixelMask core(const GridSpec& spec, const Disk& d) { return disk(spec.height_px(), spec.width_px(), d.cx, d.cy, 0.6 * d.r); }

}  // namespace

std::vector<float> random_unit(int channels, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(channels));
  for (double& x : v) x = gaussian(rng);
  normalize(v);
  return to_float(v);
}

std::vector<float> lookalike(const std::vector<float>& proto, double similarity, Rng& rng) {
  // Random direction orthogonal to proto, then rotate towards it.
  std::vector<double> r(proto.size());
  for (double& x : r) x = gaussian(rng);
  double dot = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) dot += r[i] * proto[i];
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= dot * proto[i];
  normalize(r);
  const double s = std::clamp(similarity, -1.0, 1.0);
  const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
  std::vector<double> out(proto.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * proto[i] + c * r[i];
  normalize(out);
  return to_float(out);
}

SceneBuilder::SceneBuilder(const GridSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
  data_.reserve(static_cast<std::size_t>(spec.grid) * spec.grid * spec.channels);
  for (int p = 0; p < spec.grid * spec.grid; ++p) {
    const auto v = random_unit(spec.channels, rng_);
    data_.insert(data_.end(), v.begin(), v.end());
  }
}

void paint_patches(std::vector<float>& data, const GridSpec& spec, const PixelMask& region,
                   const std::vector<float>& proto, double noise, Rng& rng) {
  const double cell_area = static_cast<double>(spec.stride_px) * spec.stride_px;
  const double scale = noise / std::sqrt(static_cast<double>(spec.channels));
  for (int r = 0; r < spec.grid; ++r) {
    for (int c = 0; c < spec.grid; ++c) {
      int covered = 0;
      for (int y = r * spec.stride_px; y < (r + 1) * spec.stride_px; ++y) {
        for (int x = c * spec.stride_px; x < (c + 1) * spec.stride_px; ++x) covered += region.at(y, x) ? 1 : 0;
      }
      if (covered == 0) continue;
      const double f = covered / cell_area;
      float* v = &data[(static_cast<std::size_t>(r) * spec.grid + c) * spec.channels];
      for (int k = 0; k < spec.channels; ++k) {
        const double painted = proto[static_cast<std::size_t>(k)] + scale * gaussian(rng);
        v[k] = static_cast<float>(f * painted + (1.0 - f) * v[k]);
      }
    }
  }
}

void SceneBuilder::paint(const PixelMask& region, const std::vector<float>& proto, double noise) {
  paint_patches(data_, spec_, region, proto, noise, rng_);
}

void SceneBuilder::add_shape(std::string id, PixelMask mask, std::optional<std::string> parent) {
  shapes_.push_back({std::move(id), std::move(mask), std::move(parent)});
}

FeatureMap SceneBuilder::features(std::string origin) const {
  return FeatureMap(spec_.grid, spec_.grid, spec_.channels, data_, spec_.stride_px, std::move(origin));
}

SyntheticEpisode identity_episode(std::uint64_t seed, const GridSpec& spec) {
  Rng rng(derive_seed(seed, 0x1d));
  const double w = spec.width_px();
  const double h = spec.height_px();
  SceneBuilder scene(spec, rng);
  std::vector<Disk> disks;
  for (int i = 0; i < 3; ++i) {
    disks.push_back(place_disk(rng, 0.12 * w, 0.18 * w, 0, 0, w, h, disks, 0.05 * w));
  }
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const auto proto = random_unit(spec.channels, rng);
    const auto mask = to_mask(spec, disks[i]);
    scene.paint(mask, proto, 0.3);
    scene.add_shape("object" + std::to_string(i), mask);
  }
  scene.add_shape("object0_part", upper_half(spec, disks[0]), "object0");

  SyntheticEpisode ep;
  ep.id = "identity_" + std::to_string(seed);
  ep.reference = scene.features(ep.id + "_ref");
  ep.reference_mask = to_mask(spec, disks[0]);
  ep.target = ep.reference;
  ep.target_image_id = ep.id + "_tgt";
  ep.ground_truth = ep.reference_mask;
  ep.target_shapes = scene.shapes();
  ep.instances = {ep.ground_truth};
  return ep;
}

SyntheticEpisode distractor_episode(std::uint64_t seed, const GridSpec& spec) {
  Rng rng(derive_seed(seed, 0xd1));
  const double w = spec.width_px();
  const double h = spec.height_px();
  constexpr double kNoise = 0.45;
  const auto proto = random_unit(spec.channels, rng);
  const auto lookalike_proto = lookalike(proto, 0.80 + 0.12 * rng.uniform01(), rng);
  const auto novel_proto = lookalike(proto, 0.45 + 0.15 * rng.uniform01(), rng);

  SceneBuilder ref(spec, rng);
  std::vector<Disk> ref_disks;
  ref_disks.push_back(place_disk(rng, 0.13 * w, 0.17 * w, 0, 0, w, h, ref_disks, 0.05 * w));
  ref_disks.push_back(place_disk(rng, 0.13 * w, 0.17 * w, 0, 0, w, h, ref_disks, 0.05 * w));
  ref.paint(to_mask(spec, ref_disks[0]), proto, kNoise);
  ref.paint(to_mask(spec, ref_disks[1]), lookalike_proto, kNoise);

  SceneBuilder tgt(spec, rng);
  // Novel region: a band along one side, the instance and look-alike elsewhere.
  const bool band_left = rng.below(2) == 0;
  const int band = static_cast<int>(0.34 * w);
  const int bx0 = band_left ? 0 : static_cast<int>(w) - band;
  const auto novel = rect(spec.height_px(), spec.width_px(), bx0, 0, bx0 + band, static_cast<int>(h));
  const double free_x0 = band_left ? band : 0;
  const double free_x1 = band_left ? w : w - band;
  std::vector<Disk> tgt_disks;
  tgt_disks.push_back(place_disk(rng, 0.12 * w, 0.16 * w, free_x0, 0, free_x1, h, tgt_disks, 0.04 * w));
  tgt_disks.push_back(place_disk(rng, 0.12 * w, 0.16 * w, free_x0, 0, free_x1, h, tgt_disks, 0.04 * w));
  tgt.paint(novel, novel_proto, kNoise);
  tgt.paint(to_mask(spec, tgt_disks[0]), proto, kNoise);
  tgt.paint(to_mask(spec, tgt_disks[1]), lookalike_proto, kNoise);
  tgt.add_shape("instance", to_mask(spec, tgt_disks[0]));
  tgt.add_shape("lookalike", to_mask(spec, tgt_disks[1]));
  tgt.add_shape("novel", novel);

  SyntheticEpisode ep;
  ep.id = "distractor_" + std::to_string(seed);
  ep.reference = ref.features(ep.id + "_ref");
  ep.reference_mask = to_mask(spec, ref_disks[0]);
  ep.target = tgt.features(ep.id + "_tgt");
  ep.target_image_id = ep.id + "_tgt";
  ep.ground_truth = to_mask(spec, tgt_disks[0]);
  ep.target_shapes = tgt.shapes();
  ep.instances = {ep.ground_truth};
  return ep;
}

SyntheticEpisode multi_instance_episode(std::uint64_t seed, const GridSpec& spec) {
  Rng rng(derive_seed(seed, 0x31));
  const double w = spec.width_px();
  const double h = spec.height_px();
  constexpr double kNoise = 0.4;
  const auto proto = random_unit(spec.channels, rng);
  const auto container_proto = random_unit(spec.channels, rng);

  SceneBuilder ref(spec, rng);
  std::vector<Disk> ref_disk{place_disk(rng, 0.22 * w, 0.26 * w, 0, 0, w, h, {}, 0)};
  ref.paint(to_mask(spec, ref_disk[0]), proto, kNoise);

  // Two instances side by side inside a container hugging them with a
  // randomized margin.
  SceneBuilder tgt(spec, rng);
  const double r0 = (0.15 + 0.03 * rng.uniform01()) * w;
  const double r1 = (0.15 + 0.03 * rng.uniform01()) * w;
  const double gap = (0.02 + 0.04 * rng.uniform01()) * w;
  const double margin = (0.02 + 0.06 * rng.uniform01()) * w;
  const double span_w = 2 * r0 + gap + 2 * r1;
  const double span_h = 2 * std::max(r0, r1);
  const double x0 = margin + (w - span_w - 2 * margin) * rng.uniform01();
  const double y0 = margin + (h - span_h - 2 * margin) * rng.uniform01();
  std::vector<Disk> inst{{x0 + r0, y0 + span_h / 2, r0}, {x0 + 2 * r0 + gap + r1, y0 + span_h / 2, r1}};
  if (rng.below(2) == 1) std::swap(inst[0], inst[1]);
  const auto container = rect(spec.height_px(), spec.width_px(), static_cast<int>(x0 - margin),
                              static_cast<int>(y0 - margin), static_cast<int>(std::ceil(x0 + span_w + margin)),
                              static_cast<int>(std::ceil(y0 + span_h + margin)));
  tgt.paint(container, container_proto, kNoise);
  tgt.add_shape("container", container);
  PixelMask gt(spec.height_px(), spec.width_px());
  SyntheticEpisode ep;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto mask = to_mask(spec, inst[i]);
    tgt.paint(mask, proto, kNoise);
    const auto id = "instance" + std::to_string(i);
    tgt.add_shape(id, mask, "container");
    tgt.add_shape(id + "_core", core(spec, inst[i]), id);
    gt |= mask;
    ep.instances.push_back(mask);
  }

  ep.id = "multi_" + std::to_string(seed);
  ep.reference = ref.features(ep.id + "_ref");
  ep.reference_mask = to_mask(spec, ref_disk[0]);
  ep.target = tgt.features(ep.id + "_tgt");
  ep.target_image_id = ep.id + "_tgt";
  ep.ground_truth = gt;
  ep.target_shapes = tgt.shapes();
  return ep;
}

SyntheticEpisode two_instance_episode(std::uint64_t seed, const GridSpec& spec) {
  Rng rng(derive_seed(seed, 0x22));
  const double w = spec.width_px();
  const double h = spec.height_px();
  constexpr double kNoise = 0.3;
  const auto proto = random_unit(spec.channels, rng);

  SceneBuilder ref(spec, rng);
  std::vector<Disk> ref_disk{place_disk(rng, 0.14 * w, 0.18 * w, 0, 0, w, h, {}, 0)};
  ref.paint(to_mask(spec, ref_disk[0]), proto, kNoise);

  SceneBuilder tgt(spec, rng);
  std::vector<Disk> inst;
  inst.push_back(place_disk(rng, 0.12 * w, 0.17 * w, 0, 0, w, h, inst, 0.08 * w));
  inst.push_back(place_disk(rng, 0.12 * w, 0.17 * w, 0, 0, w, h, inst, 0.08 * w));
  SyntheticEpisode ep;
  PixelMask gt(spec.height_px(), spec.width_px());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto mask = to_mask(spec, inst[i]);
    tgt.paint(mask, proto, kNoise);
    tgt.add_shape("instance" + std::to_string(i), mask);
    gt |= mask;
    ep.instances.push_back(mask);
  }
  ep.id = "two_" + std::to_string(seed);
  ep.reference = ref.features(ep.id + "_ref");
  ep.reference_mask = to_mask(spec, ref_disk[0]);
  ep.target = tgt.features(ep.id + "_tgt");
  ep.target_image_id = ep.id + "_tgt";
  ep.ground_truth = gt;
  ep.target_shapes = tgt.shapes();
  return ep;
}

SyntheticVideo occlusion_video(std::uint64_t seed, const VideoSpec& vspec, const GridSpec& spec) {
  Rng rng(derive_seed(seed, 0x71));
  const double w = spec.width_px();
  const double h = spec.height_px();

  // Static clutter background shared by all frames.
  Rng background_rng(derive_seed(seed, 0x72));
  SceneBuilder background(spec, background_rng);
  const auto base = background.features("background");

  struct Track {
    Disk disk;
    double vx;
    double vy;
    std::vector<float> axis_a;
    std::vector<float> axis_b;
  };
  std::vector<Track> tracks;
  std::vector<Disk> taken;
  for (int o = 0; o < vspec.num_objects; ++o) {
    const Disk d = place_disk(rng, 0.12 * w, 0.15 * w, 0, 0, w, h, taken, 0.1 * w);
    taken.push_back(d);
    const double angle = 2.0 * std::numbers::pi * rng.uniform01();
    const double speed = (0.02 + 0.02 * rng.uniform01()) * w;
    auto a = random_unit(spec.channels, rng);
    auto b = lookalike(a, 0.0, rng);
    tracks.push_back({d, speed * std::cos(angle), speed * std::sin(angle), std::move(a), std::move(b)});
  }

  SyntheticVideo video;
  video.id = "video_" + std::to_string(seed);
  for (int o = 0; o < vspec.num_objects; ++o) video.object_ids.push_back(o + 1);
  const int occ_end = vspec.occlusion_start + vspec.occlusion_length;
  video.reappear_frame = vspec.occlusion_length > 0 && occ_end < vspec.num_frames ? occ_end : -1;

  for (int t = 0; t < vspec.num_frames; ++t) {
    Rng frame_rng(derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(t)));
    std::vector<float> data(base.data().begin(), base.data().end());
    std::vector<PixelMask> gts;
    std::vector<OracleShape> shapes;
    for (int o = 0; o < vspec.num_objects; ++o) {
      auto& tr = tracks[static_cast<std::size_t>(o)];
      const bool hidden = o == 0 && t >= vspec.occlusion_start && t < occ_end;
      const auto mask = to_mask(spec, tr.disk);
      if (hidden) {
        gts.emplace_back(spec.height_px(), spec.width_px());
      } else {
        const double theta = vspec.drift_per_frame * t;
        std::vector<float> proto(static_cast<std::size_t>(spec.channels));
        for (std::size_t c = 0; c < proto.size(); ++c) {
          proto[c] = static_cast<float>(std::cos(theta) * tr.axis_a[c] + std::sin(theta) * tr.axis_b[c]);
        }
        paint_patches(data, spec, mask, proto, vspec.noise, frame_rng);
        gts.push_back(mask);
        shapes.push_back({"object" + std::to_string(o + 1), mask, std::nullopt});
      }
      // Move, bouncing off the borders.
      tr.disk.cx += tr.vx;
      tr.disk.cy += tr.vy;
      if (tr.disk.cx - tr.disk.r < 0 || tr.disk.cx + tr.disk.r > w) {
        tr.vx = -tr.vx;
        tr.disk.cx = std::clamp(tr.disk.cx, tr.disk.r, w - tr.disk.r);
      }
      if (tr.disk.cy - tr.disk.r < 0 || tr.disk.cy + tr.disk.r > h) {
        tr.vy = -tr.vy;
        tr.disk.cy = std::clamp(tr.disk.cy, tr.disk.r, h - tr.disk.r);
      }
    }
    const auto image_id = video.id + "_f" + std::to_string(t);
    video.frames.emplace_back(spec.grid, spec.grid, spec.channels, std::move(data), spec.stride_px, image_id);
    video.image_ids.push_back(image_id);
    video.ground_truth.push_back(std::move(gts));
    video.shapes.push_back(std::move(shapes));
  }
  return video;
}

void register_episode(OracleSegmenter& oracle, const SyntheticEpisode& ep) {
  oracle.register_image(ep.target_image_id, ep.ground_truth.height(), ep.ground_truth.width(),
                        ep.target_shapes);
}

void register_video(OracleSegmenter& oracle, const SyntheticVideo& video) {
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    oracle.register_image(video.image_ids[t], video.frames[t].height_px(), video.frames[t].width_px(),
                          video.shapes[t]);
  }
}

namespace {

json oracle_image_json(const std::filesystem::path& dir, const std::string& image_id, int h, int w,
                       const std::vector<OracleShape>& shapes) {
  json shape_list = json::array();
  for (const auto& s : shapes) {
    const auto file = image_id + "__" + s.id + ".png";
    save_mask_png(s.mask, dir / file);
    shape_list.push_back({{"id", s.id}, {"mask", file}, {"parent", s.parent ? json(*s.parent) : json(nullptr)}});
  }
  return {{"image_id", image_id}, {"height", h}, {"width", w}, {"shapes", shape_list}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::filesystem::path write_episode_bundle(const std::filesystem::path& dir,
                                           const std::vector<SyntheticEpisode>& episodes) {
  std::filesystem::create_directories(dir);
  json list = json::array();
  json images = json::array();
  for (const auto& ep : episodes) {
    save_feature_map(ep.reference, dir / (ep.id + "_ref.mtft"));
    save_mask_png(ep.reference_mask, dir / (ep.id + "_ref_mask.png"));
    save_feature_map(ep.target, dir / (ep.id + "_tgt.mtft"));
    save_mask_png(ep.ground_truth, dir / (ep.id + "_gt.png"));
    list.push_back({{"id", ep.id},
                    {"reference", {{"features", ep.id + "_ref.mtft"}, {"mask", ep.id + "_ref_mask.png"}}},
                    {"target",
                     {{"features", ep.id + "_tgt.mtft"},
                      {"image_id", ep.target_image_id},
                      {"height", ep.ground_truth.height()},
                      {"width", ep.ground_truth.width()}}},
                    {"ground_truth", ep.id + "_gt.png"}});
    images.push_back(oracle_image_json(dir, ep.target_image_id, ep.ground_truth.height(),
                                       ep.ground_truth.width(), ep.target_shapes));
  }
  const auto path = dir / "episodes.json";
  write_json(path, {{"episodes", list}, {"oracle", {{"images", images}}}});
  return path;
}

std::filesystem::path write_video_bundle(const std::filesystem::path& dir, const SyntheticVideo& video) {
  std::filesystem::create_directories(dir);
  json frames = json::array();
  json images = json::array();
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const auto& f = video.frames[t];
    const auto feat = video.image_ids[t] + ".mtft";
    save_feature_map(f, dir / feat);
    json gt = json::object();
    for (std::size_t o = 0; o < video.object_ids.size(); ++o) {
      const auto file = video.image_ids[t] + "_gt" + std::to_string(video.object_ids[o]) + ".png";
      save_mask_png(video.ground_truth[t][o], dir / file);
      gt[std::to_string(video.object_ids[o])] = file;
    }
    frames.push_back({{"image_id", video.image_ids[t]},
                      {"features", feat},
                      {"height", f.height_px()},
                      {"width", f.width_px()},
                      {"ground_truth", gt}});
    images.push_back(oracle_image_json(dir, video.image_ids[t], f.height_px(), f.width_px(), video.shapes[t]));
  }
  json objects = json::array();
  for (std::size_t o = 0; o < video.object_ids.size(); ++o) {
    objects.push_back({{"id", video.object_ids[o]},
                       {"reference_mask", video.image_ids[0] + "_gt" + std::to_string(video.object_ids[o]) + ".png"}});
  }
  const auto path = dir / "manifest.json";
  write_json(path, {{"frames", frames}, {"objects", objects}, {"oracle", {{"images", images}}}});
  return path;
}

}  // namespace matcher::synthetic
