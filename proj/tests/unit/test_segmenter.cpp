#include <doctest.h>

#include "matcher/error.hpp"
#include "matcher/segmenter.hpp"
#include "matcher/synthetic.hpp"

using namespace matcher;
using synthetic::disk;
using synthetic::rect;

namespace {

OracleSegmenter nested_oracle() {
  OracleSegmenter o;
  o.register_image("img", 64, 64,
                   {{"whole", rect(64, 64, 8, 8, 48, 48), std::nullopt},
                    {"part", rect(64, 64, 8, 8, 24, 24), "whole"},
                    {"other", disk(64, 64, 56, 56, 5), std::nullopt}});
  return o;
}

SegmentRequest point(double x, double y, bool multimask = true) {
  return {"img", {{x, y, 1}}, std::nullopt, multimask};
}

}  // namespace

TEST_CASE("point inside a shape returns it with confidence 1") {
  auto o = nested_oracle();
  const auto r = o.segment(point(56, 56));
  REQUIRE(r.masks.size() == 1);
  CHECK(r.masks[0] == disk(64, 64, 56, 56, 5));
  CHECK(r.confidences[0] == 1.0);
}

TEST_CASE("background point returns one empty mask with confidence 0") {
  auto o = nested_oracle();
  const auto r = o.segment(point(2, 60));
  REQUIRE(r.masks.size() == 1);
  CHECK_FALSE(r.masks[0].any());
  CHECK(r.masks[0].height() == 64);
  CHECK(r.confidences[0] == 0.0);
}

TEST_CASE("unknown and duplicate images") {
  auto o = nested_oracle();
  try {
    o.segment({"nope", {{1, 1, 1}}, std::nullopt, true});
    FAIL("expected UnknownImage");
  } catch (const MatcherError& e) {
    CHECK(e.code() == ErrorCode::kUnknownImage);
  }
  try {
    o.register_image("img", 64, 64, {});
    FAIL("expected DuplicateImage");
  } catch (const MatcherError& e) {
    CHECK(e.code() == ErrorCode::kDuplicateImage);
  }
  CHECK_THROWS_AS(o.register_image("bad", 64, 64, {{"s", PixelMask(10, 10), std::nullopt}}), MatcherError);
}

TEST_CASE("nested shapes come back part first") {
  auto o = nested_oracle();
  const auto r = o.segment(point(10, 10));
  REQUIRE(r.masks.size() == 2);
  CHECK(r.masks[0] == rect(64, 64, 8, 8, 24, 24));
  CHECK(r.masks[1] == rect(64, 64, 8, 8, 48, 48));
  const auto single = o.segment(point(10, 10, false));
  REQUIRE(single.masks.size() == 1);
  CHECK(single.masks[0] == rect(64, 64, 8, 8, 24, 24));
}

TEST_CASE("several positive points must all lie inside; negatives must not") {
  auto o = nested_oracle();
  SegmentRequest req{"img", {{10, 10, 1}, {40, 40, 1}}, std::nullopt, true};
  auto r = o.segment(req);
  REQUIRE(r.masks.size() == 1);
  CHECK(r.masks[0] == rect(64, 64, 8, 8, 48, 48));
  req.points = {{40, 40, 1}, {60, 2, 0}};
  CHECK(o.segment(req).masks[0] == rect(64, 64, 8, 8, 48, 48));
  req.points = {{10, 10, 1}, {12, 12, 0}};
  CHECK(o.segment(req).confidences[0] == 0.0);
}

TEST_CASE("box tightly around the whole picks the whole") {
  auto o = nested_oracle();
  const Box box{8, 8, 47, 47};
  const auto region = box_region(box, 64, 64);
  const double iou_whole = iou(region, rect(64, 64, 8, 8, 48, 48));
  const double iou_part = iou(region, rect(64, 64, 8, 8, 24, 24));
  REQUIRE(iou_whole > iou_part);
  const auto r = o.segment({"img", {}, box, true});
  REQUIRE(r.masks.size() == 1);
  CHECK(r.masks[0] == rect(64, 64, 8, 8, 48, 48));
}

TEST_CASE("box region is inclusive and clipped") {
  const auto r = box_region({-5.0, 1.5, 2.0, 100.0}, 4, 4);
  CHECK(r.area() == 3u * 3u);
  CHECK(r.at(1, 0));
  CHECK_FALSE(r.at(0, 0));
}

TEST_CASE("oracle determinism and dims") {
  auto o = nested_oracle();
  for (int y = 0; y < 64; y += 5) {
    for (int x = 0; x < 64; x += 5) {
      const auto a = o.segment(point(x + 0.5, y + 0.5));
      const auto b = o.segment(point(x + 0.5, y + 0.5));
      CHECK(a.masks == b.masks);
      CHECK(a.confidences == b.confidences);
      for (const auto& m : a.masks) CHECK((m.height() == 64 && m.width() == 64));
    }
  }
}

TEST_CASE("make_request carries positive points and the box") {
  const PromptGroup g{PromptKind::kBox, {{1, 2}}, Box{0, 0, 3, 3}};
  const auto r = make_request("x", g, false);
  CHECK(r.points == std::vector<PromptPoint>{{1, 2, 1}});
  CHECK(r.box == Box{0, 0, 3, 3});
  CHECK_FALSE(r.multimask);
}
