#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowmno/core/grid.hpp"
#include "flowmno/detect.hpp"
#include "flowmno/trajectory.hpp"

namespace flowmno::synth {

struct SceneConfig {
  int width = 64;
  int height = 64;
  int n_agents = 4;
  double agent_radius = 3.0;
  double speed_min = 0.5;
  double speed_max = 2.0;
  double direction_noise_sigma = 0.05;
  int n_frames = 16;
  std::uint64_t seed = 7;
  double background_texture_amplitude = 0.05;

  void validate() const;
};

inline constexpr double kAgentIntensity = 0.9;
inline constexpr double kBackgroundLevel = 0.3;

struct AgentPosition {
  std::int64_t ped_id = 0;
  Vec2 position = Vec2::Zero();
};

/// Smooth zero-mean texture with max |value| = 1: uniform noise blurred by a
/// Gaussian of the given sigma.
Plane band_limited_noise(int width, int height, double sigma, std::uint64_t seed);

/// Independent agents with seeded start, speed and heading; headings take
/// Gaussian perturbations each frame and agents reflect off the borders.
std::vector<trajectory::Track> simulate_agents(const SceneConfig& cfg);

std::vector<AgentPosition> positions_at(const std::vector<trajectory::Track>& tracks,
                                        std::size_t frame_index);

struct RenderedFrame {
  GrayFrame frame;
  std::vector<detect::Detection> detections;
};

/// Static textured background with anti-aliased discs of intensity 0.9.
RenderedFrame render_frame(const std::vector<AgentPosition>& agents, const SceneConfig& cfg,
                           std::int64_t frame_id = 0);

/// Forward flow anchored at time-t pixels: each pixel inside an agent's disc
/// carries that agent's displacement (nearest centre wins), zero elsewhere.
FlowField ground_truth_flow(const std::vector<AgentPosition>& at_t,
                            const std::vector<AgentPosition>& at_next, const SceneConfig& cfg);

struct Scene {
  std::uint64_t seed = 0;
  std::vector<trajectory::Track> tracks;
  std::vector<GrayFrame> frames;
  std::vector<std::vector<detect::Detection>> detections;
  std::vector<FlowField> flows;  // flows[t]: frame t -> t+1

  /// (flows[t], flows[t+1]) for consecutive t.
  std::vector<std::pair<FlowField, FlowField>> flow_pairs() const;
};

Scene make_scene(const SceneConfig& cfg);

struct Dataset {
  std::vector<Scene> scenes;
  std::vector<std::size_t> train, val, test;  // scene indices
};

/// Seed for scene `index` of a dataset generated from `base_seed`.
std::uint64_t scene_seed(std::uint64_t base_seed, std::size_t index);

/// Scene-level 70/20/10 split by seeded shuffle of indices.
Dataset make_dataset(const SceneConfig& cfg, std::size_t n_scenes);

}  // namespace flowmno::synth
