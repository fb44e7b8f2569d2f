// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
// Usage: acceptance [path-to-matcher-cli]

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>

#include "lp_oracle.hpp"
#include "matcher/correspondence.hpp"
#include "matcher/episode.hpp"
#include "matcher/error.hpp"
#include "matcher/instance_matching.hpp"
#include "matcher/optimal_transport.hpp"
#include "matcher/patch_matching.hpp"
#include "matcher/synthetic.hpp"
#include "random_instances.hpp"
#include "scenario_runner.hpp"

using namespace matcher;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Verdict emd_oracle() {
  Rng rng(20240601);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = testing::random_ot(rng, 1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(6)));
    worst = std::max(worst, std::abs(emd(p) - testing::lp_transport_cost(p)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-6 && secs < 10.0, fmt("max |diff| %.2e over 200 instances, %.2f s", worst, secs)};
}

int brute_argmax(const FeatureMap& from, int flat, const FeatureMap& to) {
  const auto a = from.patch(flat);
  int best = -1;
  double best_s = -2.0;
  for (int j = 0; j < to.num_patches(); ++j) {
    const auto b = to.patch(j);
    double d = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      d += static_cast<double>(a[c]) * b[c];
      na += static_cast<double>(a[c]) * a[c];
      nb += static_cast<double>(b[c]) * b[c];
    }
    const double s = d / std::sqrt(na * nb);
    if (s > best_s) {
      best_s = s;
      best = j;
    }
  }
  return best;
}

Verdict bidirectional_soundness() {
  Rng rng(77);
  const auto start = Clock::now();
  int violations = 0;
  int retained = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const int h = 6 + static_cast<int>(rng.below(6));
    const int w = 6 + static_cast<int>(rng.below(6));
    const auto zr = testing::random_features(rng, h, w, 16);
    const auto zt = testing::random_features(rng, w, h, 16);
    const auto picks = rng.sample_without_replacement(h * w, 1 + static_cast<int>(rng.below(h * w / 2)));
    const std::set<int> ref_set(picks.begin(), picks.end());
    std::vector<PatchPoint> ref;
    for (int f : picks) ref.push_back(PatchPoint::from_flat(f, w));
    MatchResult m;
    try {
      m = bidirectional_match(zr, zt, ref);
    } catch (const MatcherError& e) {
      if (e.code() != ErrorCode::kEmptyMatch) ++violations;
      continue;
    }
    std::set<int> fwd;
    for (const auto& p : m.forward) fwd.insert(p.flat);
    for (const auto& p : m.matched) {
      ++retained;
      if (!ref_set.contains(brute_argmax(zt, p.flat, zr))) ++violations;
      if (!fwd.contains(p.flat)) ++violations;
    }
  }
  const double secs = seconds_since(start);
  return {violations == 0 && secs < 5.0,
          fmt("%d violations over %d retained matches, %.2f s", violations, retained, secs)};
}

Verdict identity_recovery() {
  const auto cfg = preset_config("fss");
  double worst = 1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto ep = synthetic::identity_episode(1000 + i);
    worst = std::min(worst, iou(testing::run_synthetic(ep, cfg, i).mask, ep.ground_truth));
  }
  return {worst >= 0.99, fmt("min IoU %.4f over 20 episodes", worst)};
}

double safe_iou(const synthetic::SyntheticEpisode& ep, const RunConfig& cfg, std::uint64_t seed) {
  try {
    return iou(testing::run_synthetic(ep, cfg, seed).mask, ep.ground_truth);
  } catch (const MatcherError&) {
    return 0.0;
  }
}

Verdict ablation_direction() {
  const MatchDirection dirs[3] = {MatchDirection::kBidirectional, MatchDirection::kForwardOnly,
                                  MatchDirection::kReverseOnly};
  double mean[3] = {0, 0, 0};
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto ep = synthetic::distractor_episode(2000 + i);
    for (int d = 0; d < 3; ++d) {
      auto cfg = preset_config("coco");
      cfg.matching.direction = dirs[d];
      mean[d] += safe_iou(ep, cfg, i) / 50.0;
    }
  }
  return {mean[0] - mean[1] >= 0.02 && mean[1] - mean[2] >= 0.02,
          fmt("bidirectional %.3f, forward %.3f, reverse %.3f", mean[0], mean[1], mean[2])};
}

Verdict metric_combination() {
  const ScoreWeights weights[3] = {{0.8, 0.2, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 1.0}};
  double mean[3] = {0, 0, 0};
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto ep = synthetic::multi_instance_episode(3000 + i);
    for (int v = 0; v < 3; ++v) {
      auto cfg = preset_config("fss");
      cfg.select.weights = weights[v];
      cfg.select.num_merged = 2;
      mean[v] += safe_iou(ep, cfg, i) / 50.0;
    }
  }
  return {mean[0] - mean[1] >= 0.01 && mean[0] - mean[2] >= 0.01,
          fmt("full %.3f, emd only %.3f, purity*coverage only %.3f", mean[0], mean[1], mean[2])};
}

Verdict controllable_merging() {
  auto cfg = preset_config("fss");
  double worst_one = 1.0;
  double worst_two = 1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto ep = synthetic::two_instance_episode(4000 + i);
    cfg.select.num_merged = 1;
    const auto one = testing::run_synthetic(ep, cfg, i).mask;
    worst_one = std::min(worst_one, std::max(iou(one, ep.instances[0]), iou(one, ep.instances[1])));
    cfg.select.num_merged = 2;
    worst_two = std::min(worst_two, iou(testing::run_synthetic(ep, cfg, i).mask, ep.ground_truth));
  }
  Rng rng(4242);
  int non_monotone = 0;
  for (int set = 0; set < 100; ++set) {
    std::vector<ScoredProposal> props;
    const int n = 1 + static_cast<int>(rng.below(10));
    for (int k = 0; k < n; ++k) {
      props.push_back({testing::random_mask(rng, 24, 24, 0.1 + 0.3 * rng.uniform01()),
                       make_score(rng.uniform01(), rng.uniform01(), rng.uniform01(), {0.8, 0.2, 1.0})});
    }
    SelectConfig sel;
    sel.max_emd = 0.7;
    std::size_t prev = 0;
    for (int k = 1; k <= n + 1; ++k) {
      sel.num_merged = k;
      const auto area = select_and_merge(props, sel).merged.area();
      if (area < prev) ++non_monotone;
      prev = area;
    }
  }
  return {worst_one >= 0.9 && worst_two >= 0.9 && non_monotone == 0,
          fmt("k=1 min IoU %.3f, k=2 min IoU %.3f, %d non-monotone steps over 100 sets", worst_one, worst_two,
              non_monotone)};
}

Verdict vos_memory() {
  double jf4 = 0.0;
  double jf1 = 0.0;
  double worst_reacq = 1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto video = synthetic::occlusion_video(5000 + i);
    auto cfg = preset_config("vos");
    cfg.vos.capacity = 4;
    const auto r4 = testing::run_synthetic_video(video, cfg);
    cfg.vos.capacity = 1;
    const auto r1 = testing::run_synthetic_video(video, cfg);
    jf4 += r4.jf / 20.0;
    jf1 += r1.jf / 20.0;
    const auto t = static_cast<std::size_t>(video.reappear_frame);
    worst_reacq = std::min(worst_reacq, iou(r4.frames[t][0].mask, video.ground_truth[t][0]));
  }
  return {jf4 - jf1 >= 0.02 && worst_reacq >= 0.8,
          fmt("J&F capacity 4 %.3f, capacity 1 %.3f, min re-acquisition IoU %.3f", jf4, jf1, worst_reacq)};
}

Verdict purity_coverage_exact() {
  Rng rng(1234);
  int mismatches = 0;
  int evaluated = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    const int stride = 1 + static_cast<int>(rng.below(16));
    const int h = 4 + static_cast<int>(rng.below(60));
    const int w = 4 + static_cast<int>(rng.below(60));
    auto mask = testing::random_mask(rng, h, w, 0.05 + 0.9 * rng.uniform01());
    if (!mask.any()) mask.set(0, 0);
    std::vector<PixelPoint> pts;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      // Some points fall outside the image, some on exact pixel corners.
      const double x = rng.below(4) == 0 ? static_cast<double>(rng.below(w + 4)) - 2.0 : rng.uniform01() * (w + 2) - 1.0;
      const double y = rng.below(4) == 0 ? static_cast<double>(rng.below(h + 4)) - 2.0 : rng.uniform01() * (h + 2) - 1.0;
      pts.push_back({x, y});
    }
    int inside = 0;
    for (const auto& p : pts) {
      bool hit = false;
      for (int yy = 0; yy < h && !hit; ++yy) {
        for (int xx = 0; xx < w && !hit; ++xx) {
          hit = mask.at(yy, xx) && p.x >= xx && p.x < xx + 1 && p.y >= yy && p.y < yy + 1;
        }
      }
      inside += hit ? 1 : 0;
    }
    std::size_t area = 0;
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) area += mask.at(yy, xx) ? 1 : 0;
    }
    const double purity = inside / (static_cast<double>(area) / (static_cast<double>(stride) * stride));
    const double coverage = static_cast<double>(inside) / static_cast<double>(pts.size());
    const auto pc = purity_coverage(pts, mask, stride);
    ++evaluated;
    if (pc.points_inside != inside || pc.purity != purity || pc.coverage != coverage) ++mismatches;
  }
  return {mismatches == 0, fmt("%d mismatches over %d pairs", mismatches, evaluated)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every file under `dir` except timing sidecars, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "timings.json") continue;
    out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

Verdict determinism(const std::string& cli) {
  const auto work = fs::temp_directory_path() / ("matcher_accept_" + std::to_string(::getpid()));
  fs::remove_all(work);
  std::vector<synthetic::SyntheticEpisode> eps;
  for (std::uint64_t i = 0; i < 6; ++i) {
    eps.push_back(synthetic::distractor_episode(6000 + i));
    eps.push_back(synthetic::multi_instance_episode(6000 + i));
  }
  const auto list_path = synthetic::write_episode_bundle(work / "data", eps);
  std::vector<std::map<std::string, std::string>> runs;
  std::string how;
  if (!cli.empty()) {
    how = "cli bench";
    for (int r = 0; r < 2; ++r) {
      const auto out = work / ("run" + std::to_string(r));
      const auto cmd = "\"" + cli + "\" bench \"" + list_path.string() + "\" --preset coco --seed 7 --jobs " +
                       std::to_string(1 + 3 * r) + " --report-dir \"" + out.string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "bench command failed: " + cmd};
      runs.push_back(snapshot(out));
    }
  } else {
    how = "in-process bench";
    const auto list = load_episode_list(list_path);
    auto cfg = preset_config("coco");
    cfg.seed = 7;
    for (int r = 0; r < 2; ++r) {
      auto oracle = std::make_shared<OracleSegmenter>();
      register_oracle_images(*oracle, list.oracle_images);
      const auto summary = run_bench(list.episodes, cfg, segmenter_factory("oracle", oracle), 1 + 3 * r);
      std::map<std::string, std::string> files{{"bench.json", summary.report.dump(2)}};
      for (const auto& o : summary.outcomes) files[o.id] = o.report.dump(2);
      runs.push_back(std::move(files));
    }
  }
  fs::remove_all(work);
  const bool same = runs[0] == runs[1] && !runs[0].empty();
  return {same, fmt("%s, %zu report files, %s", how.c_str(), runs[0].size(), same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"emd-oracle-equivalence", emd_oracle},
      {"bidirectional-filter-soundness", bidirectional_soundness},
      {"identity-recovery", identity_recovery},
      {"ablation-direction", ablation_direction},
      {"metric-combination", metric_combination},
      {"controllable-merging", controllable_merging},
      {"vos-memory", vos_memory},
      {"purity-coverage-exactness", purity_coverage_exact},
      {"determinism", [&] { return determinism(cli); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
