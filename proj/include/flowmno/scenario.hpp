#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowmno/gvo.hpp"
#include "flowmno/mno/model.hpp"

namespace flowmno::scenario {

/// Pedestrian walking a straight line at constant velocity.
struct ScriptedPed {
  std::int64_t ped_id = 0;
  Vec2 start = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();  // units per second
  double radius = 0.3;

  Vec2 position(double time) const { return start + time * velocity; }
};

/// Navigation scenario, parsed from flat key=value text:
///   robot.x robot.y robot.heading robot.radius goal.x goal.y max_steps
///   ped.<id>.x ped.<id>.y ped.<id>.vx ped.<id>.vy ped.<id>.radius
///   jitter (std dev of seeded noise on pedestrian starts)
///   grid.width grid.height grid.origin_x grid.origin_y grid.pixels_per_unit
///   gvo.<field> overrides
struct Scenario {
  gvo::RobotState robot;
  Vec2 goal = Vec2::Zero();
  int max_steps = 100;
  std::vector<ScriptedPed> peds;
  double jitter = 0.0;
  gvo::GvoConfig gvo;

  // Raster used when a flow model supplies the predictions.
  int grid_width = 64;
  int grid_height = 64;
  Vec2 grid_origin = Vec2::Zero();  // world position of pixel (0, 0)
  double pixels_per_unit = 8.0;

  void validate() const;

  Vec2 to_pixels(const Vec2& world) const { return (world - grid_origin) * pixels_per_unit; }
  Vec2 to_world(const Vec2& px) const { return grid_origin + px / pixels_per_unit; }
};

Scenario parse_scenario(const std::string& text);

/// Copy with pedestrian starts perturbed by seeded Gaussian noise of std dev
/// `jitter`. A zero jitter returns the scenario unchanged.
Scenario realize(const Scenario& sc, std::uint64_t seed);

/// Pedestrian positions at step k and k+1 of the scripted paths.
gvo::Predictor oracle_predictor(const Scenario& sc);

/// Rasterises each pedestrian's last displacement into a flow field, advances it
/// one step through the model and moves each centroid by the sampled flow.
gvo::Predictor model_predictor(const Scenario& sc, const mno::MnoModel& model);

gvo::NavigationResult run(const Scenario& sc, const gvo::Predictor& predictor);

/// Smallest true centre distance minus radii sum over trace steps and
/// pedestrians (+inf without pedestrians).
double actual_clearance(const Scenario& sc, const gvo::NavigationResult& result);

/// TSV with columns step, x, y, heading, u_phi, u_s, min_separation.
std::string encode_trace(const gvo::NavigationResult& result);

}  // namespace flowmno::scenario
