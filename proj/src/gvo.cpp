#include "flowmno/gvo.hpp"

#include <cmath>
#include <stdexcept>

namespace flowmno::gvo {

void GvoConfig::validate() const {
  if (!(dt > 0.0 && horizon > dt)) throw std::invalid_argument("gvo: need horizon > dt > 0");
  if (n_phi_samples < 2 || n_speed_samples < 2) {
    throw std::invalid_argument("gvo: sample counts must be >= 2");
  }
  if (!(phi_max > 0.0) || !(v_max > 0.0)) {
    throw std::invalid_argument("gvo: phi_max and v_max must be positive");
  }
  if (safety_margin < 0.0 || goal_weight < 0.0 || steering_weight < 0.0) {
    throw std::invalid_argument("gvo: margin and weights must be non-negative");
  }
}

Vec2 robot_position(double t, const ControlInput& u) {
  const double k = std::tan(u.u_phi);
  if (std::abs(k) < kStraightTan) return {u.u_s * t, 0.0};
  const double a = u.u_s * k * t;
  return {std::sin(a) / k, (1.0 - std::cos(a)) / k};
}

double heading_change(double t, const ControlInput& u) {
  const double k = std::tan(u.u_phi);
  if (std::abs(k) < kStraightTan) return 0.0;
  return u.u_s * k * t;
}

RobotState advance(const RobotState& state, const ControlInput& u, double t) {
  const Eigen::Rotation2Dd rot(state.heading);
  RobotState next = state;
  next.position = state.position + rot * robot_position(t, u);
  next.heading = state.heading + heading_change(t, u);
  return next;
}

namespace {

int sample_count(const GvoConfig& cfg) {
  return static_cast<int>(std::lround(cfg.horizon / cfg.dt));
}

}  // namespace

double min_separation(const RobotState& state, const ControlInput& u,
                      const std::vector<ObstaclePrediction>& obstacles, const GvoConfig& cfg) {
  if (obstacles.empty()) return kNoObstacle;
  const Eigen::Rotation2Dd rot(state.heading);
  double best = kNoObstacle;
  const int n = sample_count(cfg);
  for (int i = 0; i <= n; ++i) {
    const double t = i * cfg.dt;
    const Vec2 robot = state.position + rot * robot_position(t, u);
    for (const auto& ob : obstacles) {
      const Vec2 p = ob.position_now + ob.velocity() * t;
      best = std::min(best, (robot - p).norm() - (state.radius + ob.radius));
    }
  }
  return best;
}

namespace {

double linspace(double lo, double hi, int n, int i) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

double goal_approach(const RobotState& state, const ControlInput& u, const Vec2& goal,
                     const GvoConfig& cfg) {
  const Eigen::Rotation2Dd rot(state.heading);
  double best = (state.position - goal).norm();
  const int n = sample_count(cfg);
  for (int i = 1; i <= n; ++i) {
    const Vec2 p = state.position + rot * robot_position(i * cfg.dt, u);
    best = std::min(best, (p - goal).norm());
  }
  return best;
}

}  // namespace

Selection select_control(const RobotState& state, const Vec2& goal,
                         const std::vector<ObstaclePrediction>& obstacles, const GvoConfig& cfg) {
  cfg.validate();
  Selection sel;
  bool have = false;
  double best_cost = 0.0;
  ControlInput safest;
  double safest_sep = -std::numeric_limits<double>::infinity();

  for (int ip = 0; ip < cfg.n_phi_samples; ++ip) {
    const double phi = linspace(-cfg.phi_max, cfg.phi_max, cfg.n_phi_samples, ip);
    for (int is = 0; is < cfg.n_speed_samples; ++is) {
      const ControlInput u{phi, linspace(0.0, cfg.v_max, cfg.n_speed_samples, is)};
      const double sep = min_separation(state, u, obstacles, cfg);
      if (sep > safest_sep) {
        safest_sep = sep;
        safest = u;
      }
      if (!(sep > cfg.safety_margin)) continue;
      ++sel.admissible;
      const double cost = cfg.goal_weight * goal_approach(state, u, goal, cfg) +
                          cfg.steering_weight * std::abs(phi);
      bool better = !have || cost < best_cost - kCostTieTolerance;
      if (have && !better && std::abs(cost - best_cost) <= kCostTieTolerance) {
        const double a = std::abs(u.u_phi), b = std::abs(sel.control.u_phi);
        better = a < b || (a == b && u.u_s > sel.control.u_s);
      }
      if (better) {
        have = true;
        best_cost = cost;
        sel.control = u;
        sel.min_separation = sep;
      }
    }
  }
  if (!have) {
    sel.fallback = true;
    sel.control = {safest.u_phi, 0.0};
    sel.min_separation = min_separation(state, sel.control, obstacles, cfg);
  }
  return sel;
}

NavigationResult simulate_navigation(const RobotState& initial, const Vec2& goal,
                                     const Predictor& predictor, const GvoConfig& cfg,
                                     int max_steps) {
  cfg.validate();
  if (max_steps < 1) throw std::invalid_argument("simulate_navigation: max_steps must be >= 1");
  NavigationResult res;
  RobotState state = initial;
  for (int step = 0; step < max_steps; ++step) {
    if ((state.position - goal).norm() <= kGoalTolerance) {
      res.reached_goal = true;
      break;
    }
    const auto obstacles = predictor(step, state);
    const Selection sel = select_control(state, goal, obstacles, cfg);
    res.trace.push_back({step, state, sel.control, sel.min_separation});
    state = advance(state, sel.control, cfg.dt);
  }
  res.reached_goal = res.reached_goal || (state.position - goal).norm() <= kGoalTolerance;
  res.final_state = state;
  return res;
}

}  // namespace flowmno::gvo
