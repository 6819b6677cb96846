#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "flowmno/trajectory.hpp"

using namespace flowmno;
using namespace flowmno::trajectory;

namespace {

Track track(std::int64_t id, std::vector<Vec2> pts, std::int64_t first = 1) {
  Track t;
  t.ped_id = id;
  for (std::size_t i = 0; i < pts.size(); ++i) t.points.push_back({first + static_cast<std::int64_t>(i), pts[i]});
  return t;
}

mno::ModelConfig tiny() {
  mno::ModelConfig c;
  c.grid_h = 16;
  c.grid_w = 16;
  c.modes_x = 3;
  c.modes_y = 3;
  c.width = 4;
  c.num_blocks = 2;
  c.projection_hidden = 8;
  c.seed = 11;
  return c;
}

FlowField smooth_flow(int w, int h) {
  FlowField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f.set(x, y, {0.5 + 0.3 * std::sin(0.4 * x), -0.2 + 0.2 * std::cos(0.3 * y)});
  }
  return f;
}

}  // namespace

TEST_CASE("step_centroid examples") {
  const FlowField f = FlowField::uniform(32, 32, {2, -3});
  CHECK(step_centroid({10, 10}, f) == Vec2(12, 7));
  CHECK(step_centroid({3.7, 8.2}, FlowField(32, 32)) == Vec2(3.7, 8.2));
  FlowField ramp(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) ramp.set(x, y, {double(x), 0});
  }
  CHECK(step_centroid({10.5, 10.5}, ramp).x() == doctest::Approx(21.0).epsilon(1e-15));
}

TEST_CASE("zero flow leaves any centroid in place") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 40);
  const FlowField zero(32, 32);
  for (int i = 0; i < 100; ++i) {
    const Vec2 c(u(rng), u(rng));
    CHECK(step_centroid(c, zero) == c);
  }
}

TEST_CASE("identity model advects along a uniform flow") {
  const auto m = mno::MnoModel::identity(tiny());
  const auto tracks = predict_tracks(m, FlowField::uniform(16, 16, {1, 0}), {{4, {5, 5}}}, 3, 20);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].ped_id == 4);
  REQUIRE(tracks[0].points.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(tracks[0].points[k].frame_id == 21 + k);
    CHECK((tracks[0].points[k].position - Vec2(6 + k, 5)).norm() < 1e-9);
  }
}

TEST_CASE("horizon one is a single step on the forward output") {
  const auto m = mno::MnoModel::initialized(tiny());
  const FlowField f = smooth_flow(16, 16);
  const auto t = predict_tracks(m, f, {{0, {3.3, 7.9}}}, 1);
  CHECK(t[0].points[0].position == step_centroid({3.3, 7.9}, mno::forward(m, f)));
}

TEST_CASE("prediction matches a materialised rollout bit-identically") {
  const auto m = mno::MnoModel::initialized(tiny());
  const FlowField f = smooth_flow(16, 16);
  const std::vector<StartState> starts = {{1, {2.0, 3.0}}, {2, {8.5, 8.5}}, {3, {15.0, 0.0}}};
  const auto got = predict_tracks(m, f, starts, 6, 100);
  std::vector<FlowField> fields;
  FlowField cur = f;
  for (int k = 0; k < 6; ++k) {
    cur = mno::forward(m, cur);
    fields.push_back(cur);
  }
  CHECK(got.size() == 3);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Vec2 p = starts[i].position;
    for (int k = 0; k < 6; ++k) {
      p = p + bilinear_sample(fields[static_cast<std::size_t>(k)], p);
      CHECK(got[i].points[static_cast<std::size_t>(k)].position == p);
    }
  }
  const auto adv = advect_tracks(fields, starts, 100);
  for (std::size_t i = 0; i < starts.size(); ++i) CHECK(adv[i].points.size() == got[i].points.size());
  CHECK(adv[1].points.back().position == got[1].points.back().position);
}

TEST_CASE("prediction lengths and frame ids") {
  const auto m = mno::MnoModel::initialized(tiny());
  for (int h : {1, 4, 12}) {
    const auto t = predict_tracks(m, smooth_flow(16, 16), {{0, {1, 1}}, {9, {4, 4}}}, h, 7);
    for (const auto& tr : t) {
      REQUIRE(tr.points.size() == static_cast<std::size_t>(h));
      for (int k = 0; k < h; ++k) CHECK(tr.points[static_cast<std::size_t>(k)].frame_id == 8 + k);
      CHECK_NOTHROW(tr.validate());
    }
  }
  CHECK_THROWS(predict_tracks(m, smooth_flow(16, 16), {{0, {1, 1}}}, 0));
  CHECK_THROWS_AS(predict_tracks(m, smooth_flow(8, 8), {{0, {1, 1}}}, 2), IncompatibleGrids);
}

TEST_CASE("centroids leaving the grid keep moving by clamped sampling") {
  const auto m = mno::MnoModel::identity(tiny());
  const auto t = predict_tracks(m, FlowField::uniform(16, 16, {3, 0}), {{0, {14, 5}}}, 4);
  CHECK(t[0].points.back().position.x() == doctest::Approx(26.0).epsilon(1e-9));
}

TEST_CASE("ade and fde examples") {
  const Track a = track(0, {{0, 0}, {1, 0}});
  const Track b = track(0, {{0, 1}, {1, 1}});
  CHECK(ade(a, a) == 0.0);
  CHECK(fde(a, a) == 0.0);
  CHECK(ade(a, b) == 1.0);
  const Track c = track(0, {{0, 0}, {3, 4}});
  const Track z = track(0, {{0, 0}, {0, 0}});
  CHECK(ade(c, z) == 2.5);
  CHECK(fde(c, z) == 5.0);
  const Track s1 = track(0, {{1, 2}}), s2 = track(0, {{4, 6}});
  CHECK(fde(s1, s2) == ade(s1, s2));
}

TEST_CASE("metrics are symmetric and non-negative") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 4);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec2> p, q;
    const int len = 1 + i % 9;
    for (int k = 0; k < len; ++k) {
      p.emplace_back(n(rng), n(rng));
      q.emplace_back(n(rng), n(rng));
    }
    const Track a = track(1, p), b = track(1, q);
    CHECK(ade(a, b) == ade(b, a));
    CHECK(fde(a, b) == fde(b, a));
    CHECK(ade(a, b) > 0.0);
    CHECK(fde(a, b) > 0.0);
  }
}

TEST_CASE("misaligned tracks raise an alignment error") {
  const Track a = track(0, {{0, 0}, {1, 0}}, 1);
  const Track b = track(0, {{0, 0}, {1, 0}}, 2);
  CHECK_THROWS_AS(ade(a, b), AlignmentError);
  CHECK_THROWS_AS(fde(a, track(0, {{0, 0}})), AlignmentError);
}

TEST_CASE("track validation") {
  Track t = track(0, {{0, 0}, {1, 1}});
  CHECK_NOTHROW(t.validate());
  t.points[1].frame_id = t.points[0].frame_id;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = track(0, {{0, 0}, {std::nan(""), 1}});
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("evaluate aggregates per pedestrian") {
  const Track gt1 = track(1, {{0, 0}, {0, 0}, {0, 0}});
  const Track gt2 = track(2, {{0, 0}, {0, 0}, {0, 0}});
  const Track p1 = track(1, {{1, 0}, {1, 0}, {1, 0}});
  const Track p2 = track(2, {{3, 0}, {3, 0}, {3, 0}});
  const auto one = evaluate({p1}, {gt1, gt2});
  CHECK(one.mean_ade == 1.0);
  CHECK(one.mean_fde == 1.0);
  const auto two = evaluate({p1, p2}, {gt1, gt2});
  CHECK(two.mean_ade == 2.0);
  CHECK(two.mean_fde == 2.0);
  REQUIRE(two.per_ped.size() == 2);
  CHECK(two.per_ped[1].ped_id == 2);
  CHECK(two.per_ped[1].ade == 3.0);
}

TEST_CASE("evaluate restricts ground truth to predicted frames") {
  const Track gt = track(5, {{9, 9}, {0, 0}, {1, 0}, {2, 0}}, 10);
  const Track pred = track(5, {{0, 0}, {1, 1}}, 11);
  const auto e = evaluate({pred}, {gt});
  CHECK(e.mean_ade == 0.5);
  CHECK(e.mean_fde == 1.0);
}

TEST_CASE("evaluate errors") {
  const Track gt = track(1, {{0, 0}});
  CHECK_THROWS_AS(evaluate({}, {gt}), std::invalid_argument);
  try {
    evaluate({track(7, {{0, 0}}), track(8, {{0, 0}})}, {gt});
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('7') != std::string::npos);
    CHECK(msg.find('8') != std::string::npos);
  }
  CHECK_THROWS_AS(evaluate({track(1, {{0, 0}}, 4)}, {gt}), AlignmentError);
}
