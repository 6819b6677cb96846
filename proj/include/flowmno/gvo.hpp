#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "flowmno/core/grid.hpp"

namespace flowmno::gvo {

struct ControlInput {
  double u_phi = 0.0;  // steering angle, radians
  double u_s = 0.0;    // speed, units per second

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct RobotState {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double radius = 0.3;
};

struct ObstaclePrediction {
  std::int64_t ped_id = 0;
  Vec2 position_now = Vec2::Zero();
  Vec2 position_next = Vec2::Zero();
  double radius = 0.3;
  double frame_dt = 0.1;

  Vec2 velocity() const { return (position_next - position_now) / frame_dt; }
};

struct GvoConfig {
  double horizon = 3.0;
  double dt = 0.1;
  int n_phi_samples = 21;
  int n_speed_samples = 11;
  double phi_max = 0.6;
  double v_max = 1.5;
  double safety_margin = 0.1;
  double goal_weight = 1.0;
  double steering_weight = 0.2;

  void validate() const;
};

/// Reported when no obstacle is present.
inline constexpr double kNoObstacle = std::numeric_limits<double>::infinity();

/// Below this |tan(u_phi)| the straight-line limit is used.
inline constexpr double kStraightTan = 1e-6;

/// Costs closer than this are treated as ties.
inline constexpr double kCostTieTolerance = 1e-9;

/// Body-frame position after time t under constant steering and speed
/// (unit-wheelbase car, x forward, y to the left).
Vec2 robot_position(double t, const ControlInput& u);

/// Heading change after time t (the path tangent angle).
double heading_change(double t, const ControlInput& u);

/// World-frame pose reached from `state` after time t.
RobotState advance(const RobotState& state, const ControlInput& u, double t);

inline Vec2 relative_velocity(const Vec2& v_robot, const Vec2& v_ped) { return v_robot - v_ped; }

/// Minimum over sampled times in [0, horizon] and obstacles of centre distance
/// minus the radii sum; obstacles move at constant velocity.
double min_separation(const RobotState& state, const ControlInput& u,
                      const std::vector<ObstaclePrediction>& obstacles, const GvoConfig& cfg);

struct Selection {
  ControlInput control;
  std::size_t admissible = 0;
  double min_separation = kNoObstacle;
  bool fallback = false;
};

/// Exhaustive search over the (phi, speed) grid. Admissible controls keep
/// min_separation above the safety margin; among them the cost
///   goal_weight * (closest sampled approach to goal) + steering_weight * |u_phi|
/// is minimised, ties going to smaller |u_phi| then larger speed. With no
/// admissible control the robot stops, steering toward the best separation.
Selection select_control(const RobotState& state, const Vec2& goal,
                         const std::vector<ObstaclePrediction>& obstacles, const GvoConfig& cfg);

struct TraceStep {
  int step = 0;
  RobotState state;  // pose at the start of the step
  ControlInput control;
  double min_separation = kNoObstacle;
};

inline constexpr double kGoalTolerance = 0.2;

/// step index and current robot state -> obstacle predictions at that step.
using Predictor = std::function<std::vector<ObstaclePrediction>(int, const RobotState&)>;

struct NavigationResult {
  std::vector<TraceStep> trace;
  RobotState final_state;
  bool reached_goal = false;
};

NavigationResult simulate_navigation(const RobotState& initial, const Vec2& goal,
                                     const Predictor& predictor, const GvoConfig& cfg,
                                     int max_steps);

}  // namespace flowmno::gvo
