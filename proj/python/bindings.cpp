#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "matcher/config.hpp"
#include "matcher/correspondence.hpp"
#include "matcher/episode.hpp"
#include "matcher/error.hpp"
#include "matcher/instance_matching.hpp"
#include "matcher/io.hpp"
#include "matcher/optimal_transport.hpp"
#include "matcher/patch_matching.hpp"
#include "matcher/prompt_sampler.hpp"
#include "matcher/synthetic.hpp"
#include "matcher/wire.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace matcher;

namespace {

template <typename T>
using carray = py::array_t<T, py::array::c_style | py::array::forcecast>;

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

FeatureMap features_from(const carray<float>& a, int stride_px) {
  if (a.ndim() != 3) throw py::value_error("features must have shape (H, W, C)");
  const auto n = static_cast<std::size_t>(a.size());
  return FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                    std::vector<float>(a.data(), a.data() + n), stride_px);
}

carray<float> features_to(const FeatureMap& z) {
  carray<float> out({z.height(), z.width(), z.channels()});
  std::copy(z.data().begin(), z.data().end(), out.mutable_data());
  return out;
}

PixelMask mask_from(const carray<bool>& a) {
  if (a.ndim() != 2) throw py::value_error("mask must have shape (H, W)");
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  return PixelMask(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), std::move(bits));
}

carray<bool> mask_to(const PixelMask& m) {
  carray<bool> out({m.height(), m.width()});
  std::copy(m.bits().begin(), m.bits().end(), out.mutable_data());
  return out;
}

std::vector<PixelPoint> points_from(const carray<double>& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("points must have shape (N, 2) as (x, y)");
  std::vector<PixelPoint> pts;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts.push_back({a.at(i, 0), a.at(i, 1)});
  return pts;
}

RunConfig config_from(const std::string& preset, const std::optional<std::uint64_t>& seed,
                      const std::optional<int>& num_merged, const std::map<std::string, std::string>& settings) {
  auto cfg = preset_config(preset);
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  if (seed) cfg.seed = *seed;
  if (num_merged) cfg.select.num_merged = *num_merged;
  validate_config(cfg);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "One-shot segmentation engine";

  static PyObject* error_type = py::exception<MatcherError>(m, "MatcherError", PyExc_RuntimeError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const MatcherError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("load_features", [](const std::filesystem::path& path) { return features_to(load_feature_map(path)); },
        "path"_a, "Reads an MTFT file as an (H, W, C) float32 array.");
  m.def("save_features",
        [](const std::filesystem::path& path, const carray<float>& features) {
          save_feature_map(features_from(features, 14), path);
        },
        "path"_a, "features"_a);
  m.def("load_mask", [](const std::filesystem::path& path) { return mask_to(load_mask_png(path)); }, "path"_a);
  m.def("save_mask",
        [](const std::filesystem::path& path, const carray<bool>& mask) { save_mask_png(mask_from(mask), path); },
        "path"_a, "mask"_a);

  m.def("cosine_similarity",
        [](const carray<float>& a, const carray<float>& b) {
          if (a.ndim() != 2 || b.ndim() != 2) throw py::value_error("expected (N, C) and (M, C) arrays");
          const auto s = cosine_sim_matrix(
              FeatureRows::of(std::span<const float>(a.data(), static_cast<std::size_t>(a.size())), static_cast<int>(a.shape(1))),
              FeatureRows::of(std::span<const float>(b.data(), static_cast<std::size_t>(b.size())), static_cast<int>(b.shape(1))));
          carray<float> out({s.rows(), s.cols()});
          std::copy(s.values().begin(), s.values().end(), out.mutable_data());
          return out;
        },
        "a"_a, "b"_a);

  m.def("match_patches",
        [](const carray<float>& ref, const carray<float>& tgt, const std::vector<int>& ref_patches,
           const std::string& direction) {
          const auto zr = features_from(ref, 14);
          const auto zt = features_from(tgt, 14);
          std::vector<PatchPoint> patches;
          for (int f : ref_patches) patches.push_back(PatchPoint::from_flat(f, zr.width()));
          RunConfig cfg;
          apply_setting(cfg, "matching.direction", direction);
          const auto r = bidirectional_match(zr, zt, patches, cfg.matching);
          std::vector<int> matched;
          std::vector<int> forward;
          for (const auto& p : r.matched) matched.push_back(p.flat);
          for (const auto& p : r.forward) forward.push_back(p.flat);
          return py::dict("matched"_a = matched, "forward"_a = forward);
        },
        "ref"_a, "tgt"_a, "ref_patches"_a, "direction"_a = "bidirectional",
        "Flat target patch indices retained by the filter, plus the raw forward matches.");

  m.def("emd",
        [](const std::vector<double>& supply, const std::vector<double>& demand, const carray<double>& cost) {
          if (cost.ndim() != 2) throw py::value_error("cost must be 2-D");
          return emd({supply, demand, std::vector<double>(cost.data(), cost.data() + cost.size())});
        },
        "supply"_a, "demand"_a, "cost"_a);

  m.def("kmeans_pp",
        [](const carray<double>& points, int k, std::uint64_t seed) {
          const auto c = kmeans_pp(points_from(points), k, seed);
          carray<double> centers({static_cast<py::ssize_t>(c.centers.size()), py::ssize_t{2}});
          for (std::size_t i = 0; i < c.centers.size(); ++i) {
            centers.mutable_at(i, 0) = c.centers[i].x;
            centers.mutable_at(i, 1) = c.centers[i].y;
          }
          return py::make_tuple(centers, c.assignments);
        },
        "points"_a, "k"_a, "seed"_a = 0);

  m.def("purity_coverage",
        [](const carray<double>& points, const carray<bool>& mask, int stride_px) {
          const auto pc = purity_coverage(points_from(points), mask_from(mask), stride_px);
          return py::make_tuple(pc.purity, pc.coverage);
        },
        "points"_a, "mask"_a, "stride_px"_a = 14);

  m.def("rle_encode", [](const carray<bool>& mask) { return rle_encode(mask_from(mask)); }, "mask"_a);
  m.def("rle_decode",
        [](int height, int width, const std::vector<std::uint32_t>& runs) { return mask_to(rle_decode(height, width, runs)); },
        "height"_a, "width"_a, "runs"_a);

  m.def("preset", [](const std::string& name) { return to_python(config_to_json(preset_config(name))); }, "name"_a);

  m.def("run_bench",
        [](const std::filesystem::path& episodes, const std::string& preset, std::optional<std::uint64_t> seed,
           std::optional<int> num_merged, const std::map<std::string, std::string>& settings, int jobs,
           const std::string& segmenter) {
          const auto cfg = config_from(preset, seed, num_merged, settings);
          const auto list = load_episode_list(episodes);
          std::shared_ptr<OracleSegmenter> oracle;
          if (segmenter == "oracle") {
            oracle = std::make_shared<OracleSegmenter>();
            register_oracle_images(*oracle, list.oracle_images);
          }
          BenchSummary summary;
          {
            py::gil_scoped_release release;
            summary = run_bench(list.episodes, cfg, segmenter_factory(segmenter, oracle), jobs);
          }
          py::list masks;
          py::list reports;
          for (const auto& o : summary.outcomes) {
            masks.append(mask_to(o.mask));
            reports.append(to_python(o.report));
          }
          return py::dict("report"_a = to_python(summary.report), "episodes"_a = reports, "masks"_a = masks);
        },
        "episodes"_a, "preset"_a = "fss", "seed"_a = py::none(), "num_merged"_a = py::none(),
        "settings"_a = std::map<std::string, std::string>{}, "jobs"_a = 1, "segmenter"_a = "oracle",
        "Runs an episode list; returns the bench report, per-episode reports and masks.");

  m.def("write_synthetic",
        [](const std::string& kind, int count, std::uint64_t seed, const std::filesystem::path& out) {
          std::vector<synthetic::SyntheticEpisode> eps;
          for (int i = 0; i < count; ++i) {
            const auto s = seed + static_cast<std::uint64_t>(i);
            if (kind == "identity") eps.push_back(synthetic::identity_episode(s));
            else if (kind == "distractor") eps.push_back(synthetic::distractor_episode(s));
            else if (kind == "multi_instance") eps.push_back(synthetic::multi_instance_episode(s));
            else if (kind == "two_instance") eps.push_back(synthetic::two_instance_episode(s));
            else throw py::value_error("unknown scene kind: " + kind);
          }
          return synthetic::write_episode_bundle(out, eps);
        },
        "kind"_a, "count"_a, "seed"_a, "out"_a, "Writes synthetic episodes; returns the episode list path.");
}
