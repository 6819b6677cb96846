#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "flowmno/core/grid.hpp"

using namespace flowmno;

namespace {

// Scalar reference: weights of the four corners written out longhand.
double brute_bilinear(const Plane& p, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min<int>(x0 + 1, static_cast<int>(p.cols()) - 1);
  const int y1 = std::min<int>(y0 + 1, static_cast<int>(p.rows()) - 1);
  const double ax = x - x0, ay = y - y0;
  return p(y0, x0) * (1 - ax) * (1 - ay) + p(y0, x1) * ax * (1 - ay) + p(y1, x0) * (1 - ax) * ay +
         p(y1, x1) * ax * ay;
}

Plane random_plane(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3, 3);
  Plane p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

}  // namespace

TEST_CASE("bilinear midpoint between columns") {
  Plane u = Plane::Zero(2, 2);
  u.col(1).setConstant(1.0);
  const FlowField f(u, Plane::Zero(2, 2));
  CHECK(bilinear_sample(f, Vec2(0.5, 0.0)) == Vec2(0.5, 0.0));
}

TEST_CASE("bilinear is exact at grid nodes") {
  std::mt19937_64 rng(1);
  const FlowField f(random_plane(9, 11, rng), random_plane(9, 11, rng));
  CHECK(bilinear_sample(f, Vec2(3, 7)) == f.at(3, 7));
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 9; ++x) REQUIRE(bilinear_sample(f, Vec2(x, y)) == f.at(x, y));
  }
}

TEST_CASE("bilinear of x+y at (1.25, 2.5)") {
  Plane u(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) u(y, x) = x + y;
  }
  CHECK(bilinear_sample(u, 1.25, 2.5) == doctest::Approx(3.75).epsilon(1e-15));
  CHECK(brute_bilinear(u, 1.25, 2.5) == doctest::Approx(3.75).epsilon(1e-15));
}

TEST_CASE("bilinear matches the scalar reference on random points") {
  std::mt19937_64 rng(7);
  const Plane p = random_plane(13, 10, rng);
  std::uniform_real_distribution<double> px(0, 12), py(0, 9);
  for (int i = 0; i < 2000; ++i) {
    const double x = px(rng), y = py(rng);
    REQUIRE(bilinear_sample(p, x, y) == doctest::Approx(brute_bilinear(p, x, y)).epsilon(1e-12));
  }
}

TEST_CASE("bilinear is linear along grid-aligned segments") {
  std::mt19937_64 rng(3);
  const Plane p = random_plane(6, 6, rng);
  for (double t : {0.1, 0.37, 0.5, 0.93}) {
    CHECK(bilinear_sample(p, 2 + t, 4.0) == doctest::Approx((1 - t) * p(4, 2) + t * p(4, 3)));
    CHECK(bilinear_sample(p, 1.0, 3 + t) == doctest::Approx((1 - t) * p(3, 1) + t * p(4, 1)));
  }
}

TEST_CASE("bilinear clamps outside the grid") {
  std::mt19937_64 rng(4);
  const Plane p = random_plane(5, 4, rng);
  CHECK(bilinear_sample(p, -3.0, -1.0) == p(0, 0));
  CHECK(bilinear_sample(p, 10.0, 2.0) == p(2, 4));
  CHECK(bilinear_sample(p, 1.5, 99.0) == doctest::Approx(0.5 * (p(3, 1) + p(3, 2))));
}

TEST_CASE("endpoint error examples") {
  const FlowField zero(8, 5);
  CHECK(endpoint_error(zero, zero) == 0.0);
  CHECK(endpoint_error(FlowField::uniform(8, 5, {1, 0}), zero) == 1.0);
  CHECK(endpoint_error(FlowField::uniform(8, 5, {3, 4}), zero) == 5.0);
}

TEST_CASE("endpoint error is symmetric and zero only for equal fields") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const FlowField a(random_plane(7, 6, rng), random_plane(7, 6, rng));
    FlowField b = a;
    CHECK(endpoint_error(a, b) == 0.0);
    b.set(i % 7, i % 6, b.at(i % 7, i % 6) + Vec2(1e-3, 0));
    CHECK(endpoint_error(a, b) > 0.0);
    CHECK(endpoint_error(a, b) == endpoint_error(b, a));
  }
}

TEST_CASE("endpoint error rejects mismatched grids") {
  CHECK_THROWS_AS(endpoint_error(FlowField(4, 4), FlowField(4, 5)), IncompatibleGrids);
}

TEST_CASE("frame construction validates intensities") {
  Plane p = Plane::Constant(3, 3, 0.5);
  CHECK_NOTHROW(GrayFrame{p});
  p(1, 1) = 1.0000001;
  CHECK_THROWS_AS(GrayFrame{p}, std::invalid_argument);
  p(1, 1) = -1e-9;
  CHECK_THROWS_AS(GrayFrame{p}, std::invalid_argument);
  p(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GrayFrame{p}, std::invalid_argument);
  CHECK_THROWS_AS(GrayFrame{Plane(0, 0)}, std::invalid_argument);
}

TEST_CASE("flow construction rejects non-finite values and shape mismatch") {
  Plane u = Plane::Zero(2, 3);
  u(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FlowField(u, Plane::Zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(FlowField(Plane::Zero(2, 3), Plane::Zero(3, 2)), IncompatibleGrids);
}

TEST_CASE("frame indexing is (column, row)") {
  Plane p = Plane::Zero(2, 3);  // height 2, width 3
  p(1, 2) = 0.25;
  const GrayFrame f(p);
  CHECK(f.width() == 3);
  CHECK(f.height() == 2);
  CHECK(f(2, 1) == 0.25);
}

TEST_CASE("single-precision instantiation") {
  using Ff = FlowFieldT<float>;
  const Ff a = Ff::uniform(4, 4, {3.0f, 4.0f});
  CHECK(endpoint_error(a, Ff(4, 4)) == 5.0f);
  CHECK(bilinear_sample(a, Vec2T<float>(1.5f, 2.5f)) == Vec2T<float>(3.0f, 4.0f));
}
