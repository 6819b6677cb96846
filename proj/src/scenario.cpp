#include "flowmno/scenario.hpp"

#include <cmath>
#include <map>
#include <random>

#include "flowmno/config.hpp"
#include "flowmno/io.hpp"
#include "flowmno/synth_crowd.hpp"
#include "flowmno/trajectory.hpp"

namespace flowmno::scenario {

void Scenario::validate() const {
  if (!(robot.radius > 0.0)) throw std::invalid_argument("scenario: robot.radius must be > 0");
  if (!robot.position.allFinite() || !goal.allFinite() || !std::isfinite(robot.heading)) {
    throw std::invalid_argument("scenario: robot pose and goal must be finite");
  }
  if (max_steps < 1) throw std::invalid_argument("scenario: max_steps must be >= 1");
  if (jitter < 0.0) throw std::invalid_argument("scenario: jitter must be >= 0");
  for (const auto& p : peds) {
    if (!(p.radius > 0.0)) {
      throw std::invalid_argument("scenario: ped " + std::to_string(p.ped_id) + " radius must be > 0");
    }
  }
  if (grid_width < 2 || grid_height < 2 || !(pixels_per_unit > 0.0)) {
    throw std::invalid_argument("scenario: grid must be at least 2x2 with positive pixels_per_unit");
  }
  gvo.validate();
}

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::map<std::int64_t, ScriptedPed> peds;
  for (const auto& e : config::parse_key_values(text)) {
    const std::string& k = e.key;
    auto unknown = [&] {
      return config::ConfigError("line " + std::to_string(e.line) + ": unknown scenario key '" + k +
                                 "'");
    };
    if (k == "robot.x") {
      sc.robot.position.x() = config::to_double(e);
    } else if (k == "robot.y") {
      sc.robot.position.y() = config::to_double(e);
    } else if (k == "robot.heading") {
      sc.robot.heading = config::to_double(e);
    } else if (k == "robot.radius") {
      sc.robot.radius = config::to_double(e);
    } else if (k == "goal.x") {
      sc.goal.x() = config::to_double(e);
    } else if (k == "goal.y") {
      sc.goal.y() = config::to_double(e);
    } else if (k == "max_steps") {
      sc.max_steps = config::to_int(e);
    } else if (k == "jitter") {
      sc.jitter = config::to_double(e);
    } else if (k == "grid.width") {
      sc.grid_width = config::to_int(e);
    } else if (k == "grid.height") {
      sc.grid_height = config::to_int(e);
    } else if (k == "grid.origin_x") {
      sc.grid_origin.x() = config::to_double(e);
    } else if (k == "grid.origin_y") {
      sc.grid_origin.y() = config::to_double(e);
    } else if (k == "grid.pixels_per_unit") {
      sc.pixels_per_unit = config::to_double(e);
    } else if (k == "gvo.horizon") {
      sc.gvo.horizon = config::to_double(e);
    } else if (k == "gvo.dt") {
      sc.gvo.dt = config::to_double(e);
    } else if (k == "gvo.n_phi_samples") {
      sc.gvo.n_phi_samples = config::to_int(e);
    } else if (k == "gvo.n_speed_samples") {
      sc.gvo.n_speed_samples = config::to_int(e);
    } else if (k == "gvo.phi_max") {
      sc.gvo.phi_max = config::to_double(e);
    } else if (k == "gvo.v_max") {
      sc.gvo.v_max = config::to_double(e);
    } else if (k == "gvo.safety_margin") {
      sc.gvo.safety_margin = config::to_double(e);
    } else if (k == "gvo.goal_weight") {
      sc.gvo.goal_weight = config::to_double(e);
    } else if (k == "gvo.steering_weight") {
      sc.gvo.steering_weight = config::to_double(e);
    } else if (k.rfind("ped.", 0) == 0) {
      const auto dot = k.find('.', 4);
      if (dot == std::string::npos) throw unknown();
      const config::Entry id_entry{k, k.substr(4, dot - 4), e.line};
      std::int64_t id = 0;
      try {
        id = static_cast<std::int64_t>(config::to_u64(id_entry));
      } catch (const config::ConfigError&) {
        throw unknown();
      }
      auto& p = peds[id];
      p.ped_id = id;
      const std::string leaf = k.substr(dot + 1);
      if (leaf == "x") {
        p.start.x() = config::to_double(e);
      } else if (leaf == "y") {
        p.start.y() = config::to_double(e);
      } else if (leaf == "vx") {
        p.velocity.x() = config::to_double(e);
      } else if (leaf == "vy") {
        p.velocity.y() = config::to_double(e);
      } else if (leaf == "radius") {
        p.radius = config::to_double(e);
      } else {
        throw unknown();
      }
    } else {
      throw unknown();
    }
  }
  for (auto& [id, p] : peds) sc.peds.push_back(p);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw config::ConfigError(e.what());
  }
  return sc;
}

Scenario realize(const Scenario& sc, std::uint64_t seed) {
  Scenario out = sc;
  if (sc.jitter == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sc.jitter);
  for (auto& p : out.peds) {
    const double dx = noise(rng);
    const double dy = noise(rng);
    p.start += Vec2(dx, dy);
  }
  return out;
}

gvo::Predictor oracle_predictor(const Scenario& sc) {
  return [peds = sc.peds, dt = sc.gvo.dt](int step, const gvo::RobotState&) {
    std::vector<gvo::ObstaclePrediction> out;
    for (const auto& p : peds) {
      out.push_back({p.ped_id, p.position(step * dt), p.position((step + 1) * dt), p.radius, dt});
    }
    return out;
  };
}

gvo::Predictor model_predictor(const Scenario& sc, const mno::MnoModel& model) {
  const auto& mc = model.config();
  if (mc.grid_w != sc.grid_width || mc.grid_h != sc.grid_height) {
    throw std::invalid_argument("model grid " + shape_string(mc.grid_w, mc.grid_h) +
                                " does not match scenario grid " +
                                shape_string(sc.grid_width, sc.grid_height));
  }
  return [sc, &model](int step, const gvo::RobotState&) {
    const double dt = sc.gvo.dt;
    std::vector<synth::AgentPosition> before, now;
    double radius_px = 1.0;
    for (const auto& p : sc.peds) {
      before.push_back({p.ped_id, sc.to_pixels(p.position((step - 1) * dt))});
      now.push_back({p.ped_id, sc.to_pixels(p.position(step * dt))});
      radius_px = std::max(radius_px, p.radius * sc.pixels_per_unit);
    }
    synth::SceneConfig raster;
    raster.width = sc.grid_width;
    raster.height = sc.grid_height;
    raster.agent_radius = radius_px;
    const FlowField observed = synth::ground_truth_flow(before, now, raster);
    const FlowField predicted = mno::forward(model, observed);

    std::vector<gvo::ObstaclePrediction> out;
    for (std::size_t i = 0; i < sc.peds.size(); ++i) {
      const Vec2 next_px = trajectory::step_centroid(now[i].position, predicted);
      out.push_back({sc.peds[i].ped_id, sc.peds[i].position(step * dt), sc.to_world(next_px),
                     sc.peds[i].radius, dt});
    }
    return out;
  };
}

gvo::NavigationResult run(const Scenario& sc, const gvo::Predictor& predictor) {
  return gvo::simulate_navigation(sc.robot, sc.goal, predictor, sc.gvo, sc.max_steps);
}

double actual_clearance(const Scenario& sc, const gvo::NavigationResult& result) {
  double best = gvo::kNoObstacle;
  for (const auto& s : result.trace) {
    for (const auto& p : sc.peds) {
      const double d = (s.state.position - p.position(s.step * sc.gvo.dt)).norm() -
                       (s.state.radius + p.radius);
      best = std::min(best, d);
    }
  }
  return best;
}

std::string encode_trace(const gvo::NavigationResult& result) {
  std::string out = "step\tx\ty\theading\tu_phi\tu_s\tmin_separation\n";
  for (const auto& s : result.trace) {
    out += std::to_string(s.step) + "\t" + io::format_double(s.state.position.x()) + "\t" +
           io::format_double(s.state.position.y()) + "\t" + io::format_double(s.state.heading) +
           "\t" + io::format_double(s.control.u_phi) + "\t" + io::format_double(s.control.u_s) +
           "\t" + io::format_double(s.min_separation) + "\n";
  }
  return out;
}

}  // namespace flowmno::scenario
