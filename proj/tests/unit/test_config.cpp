#include <doctest.h>

#include <functional>

#include "matcher/config.hpp"
#include "matcher/error.hpp"

using namespace matcher;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const MatcherError& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

void check_weights(const RunConfig& c, double a, double b, double l) {
  CHECK(c.select.weights.alpha == a);
  CHECK(c.select.weights.beta == b);
  CHECK(c.select.weights.lambda == l);
}

}  // namespace

TEST_CASE("presets carry the published thresholds and coefficients") {
  for (const char* name : {"coco", "lvis"}) {
    const auto c = preset_config(name);
    CHECK(c.task == Task::kMultiInstance);
    CHECK(c.select.max_emd == 0.67);
    CHECK(c.select.min_purity == 0.02);
    CHECK_FALSE(c.select.min_coverage);
    check_weights(c, 1.0, 0.0, 0.0);
  }
  const auto fss = preset_config("fss");
  CHECK(fss.task == Task::kSemantic);
  CHECK_FALSE(fss.select.max_emd);
  check_weights(fss, 0.8, 0.2, 1.0);

  const auto part = preset_config("part");
  CHECK(part.task == Task::kPart);
  CHECK(part.select.min_coverage == 0.3);
  CHECK_FALSE(part.select.max_emd);
  check_weights(part, 0.5, 0.5, 0.0);

  const auto vos = preset_config("vos");
  CHECK(vos.task == Task::kVos);
  CHECK(vos.select.max_emd == 0.75);
  check_weights(vos, 0.4, 1.0, 1.0);
  CHECK(vos.vos.capacity == 4);

  for (const char* name : {"coco", "lvis", "fss", "part", "vos"}) validate_config(preset_config(name));
  CHECK(code_of([] { preset_config("bogus"); }) == ErrorCode::kConfigError);
}

TEST_CASE("settings override preset values") {
  auto c = preset_config("coco");
  apply_setting(c, "select.max_emd", "none");
  CHECK_FALSE(c.select.max_emd);
  apply_setting(c, "select.top_k", "3");
  CHECK(c.select.num_merged == 3);
  apply_setting(c, "matching.direction", "reverse");
  CHECK(c.matching.direction == MatchDirection::kReverseOnly);
  apply_setting(c, "matching.assignment", "one_to_one");
  CHECK(c.matching.assignment == MatchAssignment::kOneToOne);
  apply_setting(c, "sampler.dense_instance_points", "0");
  CHECK_FALSE(c.sampler.dense_instance_points);
  apply_setting(c, "seed", "99");
  CHECK(c.seed == 99u);
  apply_setting(c, "vos.decay", "0.5");
  CHECK(c.vos.decay == 0.5);

  CHECK(code_of([&] { apply_setting(c, "select.bogus", "1"); }) == ErrorCode::kConfigError);
  CHECK(code_of([&] { apply_setting(c, "nosuch.key", "1"); }) == ErrorCode::kConfigError);
  CHECK(code_of([&] { apply_setting(c, "matching.direction", "sideways"); }) == ErrorCode::kConfigError);
  CHECK(code_of([&] { apply_setting(c, "select.alpha", "abc"); }) == ErrorCode::kConfigError);
}

TEST_CASE("preset inside a section is an unknown key") {
  CHECK(code_of([] { parse_config("[select]\npreset = \"vos\"\n"); }) == ErrorCode::kConfigError);
}

TEST_CASE("parse_config applies a top-level preset before the other keys") {
  const auto c = parse_config("[select]\nnum_merged = 2\n[vos]\ncapacity = 2\n", "vos");
  CHECK(c.preset == "vos");
  CHECK(c.select.num_merged == 2);
  CHECK(c.vos.capacity == 2);
  CHECK(c.select.max_emd == 0.75);

  const auto d = parse_config("seed = 5\npreset = \"part\"  # base\n");
  CHECK(d.preset == "part");
  CHECK(d.seed == 5u);
  CHECK(d.select.min_coverage == 0.3);
}

TEST_CASE("config errors name the line") {
  CHECK(code_of([] { parse_config("[select\n"); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config("seed 3\n"); }) == ErrorCode::kConfigError);
  try {
    parse_config("\n\nbogus = 1\n");
    FAIL("expected ConfigError");
  } catch (const MatcherError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(code_of([] { parse_config("[select]\nnum_merged = 0\n"); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config("[select]\nmax_emd = 1.5\n"); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config("[vos]\ndecay = 0\n"); }) == ErrorCode::kConfigError);
}

TEST_CASE("config JSON mirrors the settings") {
  auto c = preset_config("coco");
  const auto j = config_to_json(c);
  CHECK(j["preset"] == "coco");
  CHECK(j["task"] == "multi_instance");
  CHECK(j["select"]["max_emd"] == 0.67);
  CHECK(j["select"]["min_coverage"].is_null());
  CHECK(j["matching"]["direction"] == "bidirectional");
  CHECK(config_to_json(c).dump() == j.dump());
}
