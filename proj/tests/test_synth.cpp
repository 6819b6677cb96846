#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "flowmno/farneback.hpp"
#include "flowmno/synth_crowd.hpp"

using namespace flowmno;
using namespace flowmno::synth;

namespace {

// True when a step of the given length from p could reach the reflecting border.
bool bounced(const Vec2& p, double r, const SceneConfig& c, double speed) {
  return p.x() < r + speed || p.y() < r + speed || p.x() > c.width - 1 - r - speed ||
         p.y() > c.height - 1 - r - speed;
}

}  // namespace

TEST_CASE("scene config validation") {
  SceneConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_frames = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.agent_radius = 40;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.speed_min = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("simulation is deterministic and tracks are well formed") {
  SceneConfig c;
  c.n_frames = 30;
  const auto a = simulate_agents(c);
  const auto b = simulate_agents(c);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ped_id == b[i].ped_id);
    REQUIRE(a[i].points.size() == 30);
    for (std::size_t k = 0; k < 30; ++k) {
      CHECK(a[i].points[k].position == b[i].points[k].position);
      CHECK(a[i].points[k].frame_id == static_cast<std::int64_t>(k));
      const Vec2 p = a[i].points[k].position;
      CHECK(p.x() >= c.agent_radius);
      CHECK(p.y() >= c.agent_radius);
      CHECK(p.x() <= c.width - 1 - c.agent_radius);
      CHECK(p.y() <= c.height - 1 - c.agent_radius);
    }
    CHECK_NOTHROW(a[i].validate());
  }
  c.seed = 8;
  CHECK(simulate_agents(c)[0].points[5].position != a[0].points[5].position);
}

TEST_CASE("noiseless agents move piecewise linearly at constant speed") {
  SceneConfig c;
  c.direction_noise_sigma = 0.0;
  c.n_frames = 40;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.seed = seed;
    for (const auto& t : simulate_agents(c)) {
      const double speed = (t.points[1].position - t.points[0].position).norm();
      CHECK(speed >= c.speed_min - 1e-12);
      CHECK(speed <= c.speed_max + 1e-12);
      for (std::size_t k = 1; k + 1 < t.points.size(); ++k) {
        const Vec2 d0 = t.points[k].position - t.points[k - 1].position;
        const Vec2 d1 = t.points[k + 1].position - t.points[k].position;
        if (bounced(t.points[k - 1].position, c.agent_radius, c, speed) ||
            bounced(t.points[k].position, c.agent_radius, c, speed)) {
          continue;
        }
        CHECK((d1 - d0).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("single frame scenes hold start positions") {
  SceneConfig c;
  c.n_frames = 1;
  const auto tracks = simulate_agents(c);
  SceneConfig longer = c;
  longer.n_frames = 10;
  const auto ref = simulate_agents(longer);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    REQUIRE(tracks[i].points.size() == 1);
    CHECK(tracks[i].points[0].position == ref[i].points[0].position);
  }
  const Scene s = make_scene(c);
  CHECK(s.frames.size() == 1);
  CHECK(s.flows.empty());
  CHECK(s.flow_pairs().empty());
}

TEST_CASE("empty scene renders background only") {
  SceneConfig c;
  c.n_agents = 0;
  const auto r = render_frame({}, c);
  CHECK(r.detections.empty());
  CHECK(detect::blob_detect(r.frame, 0.5, 1).empty());
  CHECK(r.frame.plane().maxCoeff() <= kBackgroundLevel + c.background_texture_amplitude + 1e-12);
  CHECK(r.frame.plane().minCoeff() >= kBackgroundLevel - c.background_texture_amplitude - 1e-12);
}

TEST_CASE("one agent renders to its ground-truth box") {
  const SceneConfig c;
  const auto r = render_frame({{3, {32, 32}}}, c, 5);
  REQUIRE(r.detections.size() == 1);
  const auto& d = r.detections[0];
  CHECK(d.ped_id == 3);
  CHECK(d.frame_id == 5);
  CHECK(d.confidence == 1.0);
  CHECK(std::abs(d.box.x - 29) <= 1);
  CHECK(std::abs(d.box.y - 29) <= 1);
  CHECK(std::abs(d.box.w - 6) <= 1);
  CHECK(std::abs(d.box.h - 6) <= 1);
  int x0 = 64, y0 = 64, x1 = -1, y1 = -1, lit = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (r.frame(x, y) > 0.5) {
        ++lit;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  CHECK(std::abs(lit - 28.27) < 8);  // pi r^2
  CHECK(std::abs(x0 - d.box.x) <= 1);
  CHECK(std::abs(y0 - d.box.y) <= 1);
  CHECK(std::abs(x1 + 1 - (d.box.x + d.box.w)) <= 1);
  CHECK(std::abs(y1 + 1 - (d.box.y + d.box.h)) <= 1);
  const auto blobs = detect::blob_detect(r.frame, 0.5, 1);
  REQUIRE(blobs.size() == 1);
  CHECK(detect::iou(blobs[0].box, d.box) > 0.5);
}

TEST_CASE("two separated agents give two labelled detections") {
  const SceneConfig c;
  const auto r = render_frame({{1, {15, 15}}, {2, {45, 40}}}, c);
  REQUIRE(r.detections.size() == 2);
  CHECK(*r.detections[0].ped_id == 1);
  CHECK(*r.detections[1].ped_id == 2);
  CHECK(detect::blob_detect(r.frame, 0.5, 1).size() == 2);
}

TEST_CASE("ground-truth flow examples") {
  const SceneConfig c;
  const std::vector<AgentPosition> at = {{0, {20, 20}}, {1, {40, 30}}};
  CHECK(ground_truth_flow(at, at, c) == FlowField(64, 64));
  const std::vector<AgentPosition> moved = {{0, {21, 20}}, {1, {40, 30}}};
  const FlowField f = ground_truth_flow(at, moved, c);
  CHECK(f.at(20, 20) == Vec2(1, 0));
  CHECK(f.at(5, 5) == Vec2(0, 0));
  CHECK(f.at(40, 30) == Vec2(0, 0));
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const Vec2 v = f.at(x, y);
      CHECK((v == Vec2(0, 0) || v == Vec2(1, 0)));
    }
  }
  CHECK_THROWS_AS(ground_truth_flow(at, {{0, {1, 1}}}, c), std::invalid_argument);
}

TEST_CASE("ground-truth flow at each centroid equals the displacement") {
  SceneConfig c;
  c.n_frames = 12;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    c.seed = seed;
    const Scene s = make_scene(c);
    for (std::size_t t = 0; t + 1 < s.frames.size(); ++t) {
      for (const auto& tr : s.tracks) {
        const Vec2 p = tr.points[t].position;
        const Vec2 d = tr.points[t + 1].position - p;
        // skip centroids whose disc overlaps another agent's
        bool crowded = false;
        for (const auto& o : s.tracks) {
          if (o.ped_id != tr.ped_id && (o.points[t].position - p).norm() < 2 * c.agent_radius + 2) crowded = true;
        }
        if (crowded) continue;
        CHECK((bilinear_sample(s.flows[t], p) - d).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("Farneback recovers agent displacements at centroids") {
  SceneConfig c;
  c.n_frames = 10;
  // the estimator window (15 px) runs past the frame within this margin
  const double margin = 10.0;
  int interior = 0, border = 0;
  double worst_interior = 0.0, worst_border = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    c.seed = seed;
    const Scene s = make_scene(c);
    for (std::size_t t = 0; t + 1 < s.frames.size(); t += 2) {
      const FlowField est = farneback::estimate_flow(s.frames[t], s.frames[t + 1]);
      for (const auto& tr : s.tracks) {
        const Vec2 p = tr.points[t].position;
        bool crowded = false;
        for (const auto& o : s.tracks) {
          if (o.ped_id != tr.ped_id && (o.points[t].position - p).norm() < 4 * c.agent_radius) crowded = true;
        }
        if (crowded) continue;
        const double err = (bilinear_sample(est, p) - (tr.points[t + 1].position - p)).norm();
        const bool inside = p.x() >= margin && p.y() >= margin && p.x() <= c.width - 1 - margin &&
                            p.y() <= c.height - 1 - margin;
        if (inside) {
          worst_interior = std::max(worst_interior, err);
          ++interior;
        } else {
          worst_border = std::max(worst_border, err);
          ++border;
        }
      }
    }
  }
  CHECK(interior > 20);
  CHECK(worst_interior < 0.5);
  CHECK(worst_border < 1.0);
}

TEST_CASE("flow pairs come from consecutive frames") {
  SceneConfig c;
  c.n_frames = 6;
  const Scene s = make_scene(c);
  const auto pairs = s.flow_pairs();
  REQUIRE(pairs.size() == 4);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    CHECK(pairs[t].first == s.flows[t]);
    CHECK(pairs[t].second == s.flows[t + 1]);
  }
}

TEST_CASE("dataset split is a seeded partition") {
  SceneConfig c;
  c.n_frames = 3;
  const Dataset d = make_dataset(c, 10);
  CHECK(d.train.size() == 7);
  CHECK(d.val.size() == 2);
  CHECK(d.test.size() == 1);
  std::set<std::size_t> all(d.train.begin(), d.train.end());
  all.insert(d.val.begin(), d.val.end());
  all.insert(d.test.begin(), d.test.end());
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
  const Dataset e = make_dataset(c, 10);
  CHECK(e.train == d.train);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(e.scenes[i].flows == d.scenes[i].flows);
    CHECK(d.scenes[i].seed == scene_seed(c.seed, i));
  }
  const Dataset big = make_dataset(c, 23);
  CHECK(big.train.size() + big.val.size() + big.test.size() == 23);
  CHECK_THROWS_AS(make_dataset(c, 9), std::invalid_argument);
}

TEST_CASE("band-limited noise is normalised and seeded") {
  const Plane a = band_limited_noise(32, 24, 2.0, 5);
  CHECK(a.rows() == 24);
  CHECK(a.cols() == 32);
  CHECK(a.abs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(a.mean()) < 0.3);
  CHECK((band_limited_noise(32, 24, 2.0, 5) == a).all());
  CHECK_FALSE((band_limited_noise(32, 24, 2.0, 6) == a).all());
}
