#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "flowmno/detect.hpp"

using namespace flowmno;
using namespace flowmno::detect;

namespace {

Detection make(Box b, double conf, int cls = 0) {
  Detection d;
  d.box = b;
  d.confidence = conf;
  d.class_id = cls;
  return d;
}

struct Component {
  Box box;
  double mean = 0.0;
  int area = 0;
};

// Label propagation to a fixed point: every lit pixel repeatedly takes the
// minimum label of its lit 4-neighbours.
std::vector<Component> brute_components(const Plane& img, double thr) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<int> label(static_cast<std::size_t>(w * h), -1);
  for (int i = 0; i < w * h; ++i) {
    if (img.data()[i] > thr) label[static_cast<std::size_t>(i)] = i;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int& l = label[static_cast<std::size_t>(y * w + x)];
        if (l < 0) continue;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& q : nb) {
          if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
          const int o = label[static_cast<std::size_t>(q[1] * w + q[0])];
          if (o >= 0 && o < l) {
            l = o;
            changed = true;
          }
        }
      }
    }
  }
  std::map<int, std::tuple<int, int, int, int, double, int>> acc;  // minx miny maxx maxy sum n
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = label[static_cast<std::size_t>(y * w + x)];
      if (l < 0) continue;
      auto it = acc.find(l);
      if (it == acc.end()) it = acc.emplace(l, std::make_tuple(x, y, x, y, 0.0, 0)).first;
      auto& [x0, y0, x1, y1, s, n] = it->second;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
      s += img(y, x);
      ++n;
    }
  }
  std::vector<Component> out;
  for (const auto& [l, t] : acc) {
    const auto& [x0, y0, x1, y1, s, n] = t;
    out.push_back({{double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)}, s / n, n});
  }
  return out;
}

bool box_less(const Box& a, const Box& b) {
  return std::tie(a.x, a.y, a.w, a.h) < std::tie(b.x, b.y, b.w, b.h);
}

}  // namespace

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 5, 5}, {10, 10, 5, 5}) == 0.0);
  CHECK(iou({0, 0, 10, 10}, {1, 1, 10, 10}) == doctest::Approx(81.0 / 119.0).epsilon(1e-15));
  CHECK(iou({0, 0, 10, 10}, {1, 1, 10, 10}) == doctest::Approx(0.6807).epsilon(1e-4));
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0, 20), size(0.5, 10);
  for (int i = 0; i < 500; ++i) {
    const Box a{pos(rng), pos(rng), size(rng), size(rng)};
    const Box b{pos(rng), pos(rng), size(rng), size(rng)};
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-14));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("nms examples") {
  const auto kept = nms({make({0, 0, 10, 10}, 0.9), make({1, 1, 10, 10}, 0.8)}, 0.5, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].box == Box{0, 0, 10, 10});
  CHECK(nms({make({0, 0, 5, 5}, 0.9), make({10, 10, 5, 5}, 0.8)}, 0.5, 0.5).size() == 2);
  CHECK(nms({make({0, 0, 5, 5}, 0.3)}, 0.45, 0.5).empty());
  CHECK(nms({}).empty());
}

TEST_CASE("nms is class-aware") {
  const auto kept = nms({make({0, 0, 10, 10}, 0.9, 0), make({1, 1, 10, 10}, 0.8, 1)}, 0.5, 0.5);
  CHECK(kept.size() == 2);
}

TEST_CASE("nms breaks confidence ties by x then y") {
  const auto kept = nms({make({30, 5, 4, 4}, 0.7), make({10, 9, 4, 4}, 0.7), make({10, 2, 4, 4}, 0.7)});
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].box.y == 2);
  CHECK(kept[1].box.y == 9);
  CHECK(kept[2].box.x == 30);
}

TEST_CASE("nms properties on random sets") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(0, 50), size(2, 20), conf(0, 1);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> ds;
    for (int i = 0; i < 15; ++i) ds.push_back(make({pos(rng), pos(rng), size(rng), size(rng)}, conf(rng), cls(rng)));
    const double thr = 0.3 + 0.1 * (trial % 4);
    const auto out = nms(ds, thr, 0.4);
    for (const auto& d : out) {
      CHECK(d.confidence >= 0.4);
      CHECK(std::find(ds.begin(), ds.end(), d) != ds.end());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i > 0) CHECK(out[i - 1].confidence >= out[i].confidence);
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        if (out[i].class_id == out[j].class_id) CHECK(iou(out[i].box, out[j].box) <= thr);
      }
    }
    CHECK(nms(out, thr, 0.4) == out);
  }
}

TEST_CASE("blob detection examples") {
  CHECK(blob_detect(GrayFrame::constant(32, 32, 0.0), 0.5, 1).empty());
  Plane p = Plane::Zero(32, 32);
  p.block(10, 10, 6, 6).setConstant(0.9);
  const auto one = blob_detect(GrayFrame(p), 0.5, 1, 4);
  REQUIRE(one.size() == 1);
  CHECK(one[0].box == Box{10, 10, 6, 6});
  CHECK(one[0].confidence == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(one[0].class_id == 0);
  CHECK(one[0].frame_id == 4);
}

TEST_CASE("two separated discs give two detections") {
  Plane p = Plane::Zero(40, 40);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      if ((x - 10) * (x - 10) + (y - 12) * (y - 12) <= 16) p(y, x) = 0.9;
      if ((x - 22) * (x - 22) + (y - 25) * (y - 25) <= 16) p(y, x) = 0.8;
    }
  }
  const auto ds = blob_detect(GrayFrame(p), 0.5, 1);
  const auto ref = brute_components(p, 0.5);
  REQUIRE(ds.size() == 2);
  REQUIRE(ref.size() == 2);
}

TEST_CASE("diagonal neighbours are separate components") {
  Plane p = Plane::Zero(4, 4);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  CHECK(blob_detect(GrayFrame(p), 0.5, 1).size() == 2);
}

TEST_CASE("blob detection matches a brute-force labeler on random frames") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 150; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 32), h = 1 + static_cast<int>(rng() % 32);
    const double density = 0.2 + 0.5 * u(rng);
    Plane p(h, w);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng) < density ? 0.6 + 0.4 * u(rng) : 0.1;
    const int min_area = 1 + trial % 5;
    auto got = blob_detect(GrayFrame(p), 0.5, min_area);
    std::vector<Component> want;
    for (const auto& c : brute_components(p, 0.5)) {
      if (c.area >= min_area) want.push_back(c);
    }
    REQUIRE(got.size() == want.size());
    std::sort(got.begin(), got.end(), [](const auto& a, const auto& b) { return box_less(a.box, b.box); });
    std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) { return box_less(a.box, b.box); });
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].box == want[i].box);
      CHECK(got[i].confidence == doctest::Approx(want[i].mean).epsilon(1e-12));
      CHECK(got[i].box.x >= 0);
      CHECK(got[i].box.y >= 0);
      CHECK(got[i].box.x + got[i].box.w <= w);
      CHECK(got[i].box.y + got[i].box.h <= h);
    }
  }
}

TEST_CASE("centroid examples") {
  CHECK(centroid(make({0, 0, 10, 10}, 1)) == Vec2(5, 5));
  CHECK(centroid(make({10, 20, 4, 6}, 1)) == Vec2(12, 23));
  CHECK(centroid(make({0, 0, 1, 1}, 1)) == Vec2(0.5, 0.5));
}

TEST_CASE("detection validation") {
  CHECK_NOTHROW(make({0, 0, 1, 1}, 0.5).validate());
  CHECK_THROWS_AS(make({0, 0, 0, 1}, 0.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make({0, 0, 1, 1}, 1.5).validate(), std::invalid_argument);
}
