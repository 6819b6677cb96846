#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flowmno {

/// Thrown when two grids that must share dimensions do not.
class IncompatibleGrids : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;

/// Row-major scalar plane; (x, y) indexes (column, row), origin top-left.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_string(Eigen::Index w, Eigen::Index h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

/// Grayscale frame with intensities in [0, 1].
template <typename Scalar>
class GrayFrameT {
 public:
  GrayFrameT() = default;

  explicit GrayFrameT(PlaneT<Scalar> intensities) : data_(std::move(intensities)) {
    if (data_.rows() <= 0 || data_.cols() <= 0) {
      throw std::invalid_argument("GrayFrame: dimensions must be positive");
    }
    for (Eigen::Index i = 0; i < data_.size(); ++i) {
      const Scalar v = data_.data()[i];
      if (!std::isfinite(v) || v < Scalar(0) || v > Scalar(1)) {
        throw std::invalid_argument("GrayFrame: intensity outside [0,1] at index " +
                                    std::to_string(i));
      }
    }
  }

  static GrayFrameT constant(Eigen::Index width, Eigen::Index height, Scalar value) {
    return GrayFrameT(PlaneT<Scalar>::Constant(height, width, value));
  }

  Eigen::Index width() const { return data_.cols(); }
  Eigen::Index height() const { return data_.rows(); }
  Scalar operator()(Eigen::Index x, Eigen::Index y) const { return data_(y, x); }
  const PlaneT<Scalar>& plane() const { return data_; }

 private:
  PlaneT<Scalar> data_;
};

/// Dense displacement field in pixels per frame interval, stored as two planes.
template <typename Scalar>
class FlowFieldT {
 public:
  FlowFieldT() = default;

  FlowFieldT(Eigen::Index width, Eigen::Index height)
      : u_(PlaneT<Scalar>::Zero(height, width)), v_(PlaneT<Scalar>::Zero(height, width)) {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("FlowField: dimensions must be positive");
    }
  }

  FlowFieldT(PlaneT<Scalar> u, PlaneT<Scalar> v) : u_(std::move(u)), v_(std::move(v)) {
    if (u_.rows() != v_.rows() || u_.cols() != v_.cols()) {
      throw IncompatibleGrids("FlowField: u and v planes differ in shape");
    }
    if (u_.size() == 0) throw std::invalid_argument("FlowField: dimensions must be positive");
    if (!u_.allFinite() || !v_.allFinite()) {
      throw std::invalid_argument("FlowField: non-finite component");
    }
  }

  static FlowFieldT uniform(Eigen::Index width, Eigen::Index height, Vec2T<Scalar> d) {
    FlowFieldT f(width, height);
    f.u_.setConstant(d.x());
    f.v_.setConstant(d.y());
    return f;
  }

  Eigen::Index width() const { return u_.cols(); }
  Eigen::Index height() const { return u_.rows(); }
  Eigen::Index size() const { return u_.size(); }

  Vec2T<Scalar> at(Eigen::Index x, Eigen::Index y) const { return {u_(y, x), v_(y, x)}; }
  void set(Eigen::Index x, Eigen::Index y, const Vec2T<Scalar>& d) {
    u_(y, x) = d.x();
    v_(y, x) = d.y();
  }

  const PlaneT<Scalar>& u() const { return u_; }
  const PlaneT<Scalar>& v() const { return v_; }
  PlaneT<Scalar>& u() { return u_; }
  PlaneT<Scalar>& v() { return v_; }

  bool same_shape(const FlowFieldT& o) const {
    return width() == o.width() && height() == o.height();
  }

  friend bool operator==(const FlowFieldT& a, const FlowFieldT& b) {
    return a.same_shape(b) && (a.u_ == b.u_).all() && (a.v_ == b.v_).all();
  }

 private:
  PlaneT<Scalar> u_;
  PlaneT<Scalar> v_;
};

using Vec2 = Vec2T<double>;
using Plane = PlaneT<double>;
using GrayFrame = GrayFrameT<double>;
using FlowField = FlowFieldT<double>;

template <typename Scalar>
void require_same_shape(const FlowFieldT<Scalar>& a, const FlowFieldT<Scalar>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw IncompatibleGrids(std::string(what) + ": grid " + shape_string(a.width(), a.height()) +
                            " vs " + shape_string(b.width(), b.height()));
  }
}

/// Bilinear sample of a plane; coordinates outside the grid are clamped.
template <typename Derived>
typename Derived::Scalar bilinear_sample(const Eigen::ArrayBase<Derived>& plane,
                                         typename Derived::Scalar x, typename Derived::Scalar y) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index w = plane.cols();
  const Eigen::Index h = plane.rows();
  x = std::clamp(x, Scalar(0), Scalar(w - 1));
  y = std::clamp(y, Scalar(0), Scalar(h - 1));
  const Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), w - 1);
  const Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(y)), h - 1);
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
  const Scalar fx = x - Scalar(x0);
  const Scalar fy = y - Scalar(y0);
  // Exact at grid nodes: zero weights never touch the neighbour.
  Scalar top = plane(y0, x0);
  if (fx != Scalar(0)) top = (Scalar(1) - fx) * plane(y0, x0) + fx * plane(y0, x1);
  if (fy == Scalar(0)) return top;
  Scalar bottom = plane(y1, x0);
  if (fx != Scalar(0)) bottom = (Scalar(1) - fx) * plane(y1, x0) + fx * plane(y1, x1);
  return (Scalar(1) - fy) * top + fy * bottom;
}

template <typename Scalar>
Vec2T<Scalar> bilinear_sample(const FlowFieldT<Scalar>& field, const Vec2T<Scalar>& p) {
  return {bilinear_sample(field.u(), p.x(), p.y()), bilinear_sample(field.v(), p.x(), p.y())};
}

/// Mean Euclidean distance between corresponding flow vectors.
template <typename Scalar>
Scalar endpoint_error(const FlowFieldT<Scalar>& a, const FlowFieldT<Scalar>& b) {
  require_same_shape(a, b, "endpoint_error");
  const auto du = a.u() - b.u();
  const auto dv = a.v() - b.v();
  return (du.square() + dv.square()).sqrt().mean();
}

}  // namespace flowmno
