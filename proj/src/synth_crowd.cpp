#include "flowmno/synth_crowd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "flowmno/farneback.hpp"
#include "flowmno/mno/train.hpp"

namespace flowmno::synth {

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene: size must be positive");
  if (n_agents < 0) throw std::invalid_argument("scene: n_agents must be >= 0");
  if (!(agent_radius > 0.0) || 2.0 * agent_radius + 2.0 >= std::min(width, height)) {
    throw std::invalid_argument("scene: agents must fit in the frame");
  }
  if (!(speed_min >= 0.0 && speed_max >= speed_min)) {
    throw std::invalid_argument("scene: need 0 <= speed_min <= speed_max");
  }
  if (!(speed_max < std::min(width, height) / 8.0)) {
    throw std::invalid_argument("scene: speed_max must be below min(width, height)/8");
  }
  if (direction_noise_sigma < 0.0) throw std::invalid_argument("scene: negative noise sigma");
  if (n_frames < 1) throw std::invalid_argument("scene: n_frames must be >= 1");
  if (!(background_texture_amplitude >= 0.0 && background_texture_amplitude <= 0.2)) {
    throw std::invalid_argument("scene: background_texture_amplitude must lie in [0, 0.2]");
  }
}

Plane band_limited_noise(int width, int height, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Plane p(height, width);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = unit(rng);
  p = farneback::gaussian_blur(p, sigma);
  p -= p.mean();
  const double peak = p.abs().maxCoeff();
  return peak > 0.0 ? Plane(p / peak) : p;
}

std::vector<trajectory::Track> simulate_agents(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double r = cfg.agent_radius;
  const double lo_x = r, hi_x = cfg.width - 1 - r;
  const double lo_y = r, hi_y = cfg.height - 1 - r;

  std::vector<trajectory::Track> tracks;
  std::vector<double> speed, heading;
  for (int a = 0; a < cfg.n_agents; ++a) {
    Vec2 p;
    // Prefer non-overlapping starts; accept the last draw if the frame is crowded.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      p = {lo_x + 1.0 + (hi_x - lo_x - 2.0) * unit(rng), lo_y + 1.0 + (hi_y - lo_y - 2.0) * unit(rng)};
      const bool clear = std::all_of(tracks.begin(), tracks.end(), [&](const auto& t) {
        return (t.points[0].position - p).norm() >= 2.0 * r + 2.0;
      });
      if (clear) break;
    }
    tracks.push_back({a, {{0, p}}});
    speed.push_back(cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng));
    heading.push_back(2.0 * std::numbers::pi * unit(rng));
  }

  for (int f = 1; f < cfg.n_frames; ++f) {
    for (std::size_t a = 0; a < tracks.size(); ++a) {
      if (cfg.direction_noise_sigma > 0.0) heading[a] += cfg.direction_noise_sigma * noise(rng);
      Vec2 p = tracks[a].points.back().position +
               speed[a] * Vec2(std::cos(heading[a]), std::sin(heading[a]));
      if (p.x() < lo_x) {
        p.x() = 2.0 * lo_x - p.x();
        heading[a] = std::numbers::pi - heading[a];
      } else if (p.x() > hi_x) {
        p.x() = 2.0 * hi_x - p.x();
        heading[a] = std::numbers::pi - heading[a];
      }
      if (p.y() < lo_y) {
        p.y() = 2.0 * lo_y - p.y();
        heading[a] = -heading[a];
      } else if (p.y() > hi_y) {
        p.y() = 2.0 * hi_y - p.y();
        heading[a] = -heading[a];
      }
      tracks[a].points.push_back({f, p});
    }
  }
  return tracks;
}

std::vector<AgentPosition> positions_at(const std::vector<trajectory::Track>& tracks,
                                        std::size_t frame_index) {
  std::vector<AgentPosition> out;
  for (const auto& t : tracks) out.push_back({t.ped_id, t.points.at(frame_index).position});
  return out;
}

RenderedFrame render_frame(const std::vector<AgentPosition>& agents, const SceneConfig& cfg,
                           std::int64_t frame_id) {
  cfg.validate();
  Plane img = kBackgroundLevel + cfg.background_texture_amplitude *
                                     band_limited_noise(cfg.width, cfg.height, 2.0, cfg.seed ^ 0x5eedULL);
  const double r = cfg.agent_radius;
  Plane coverage = Plane::Zero(cfg.height, cfg.width);
  for (const auto& a : agents) {
    const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(a.position.x() - r - 1)));
    const auto x1 = std::min<Eigen::Index>(cfg.width - 1, static_cast<Eigen::Index>(std::ceil(a.position.x() + r + 1)));
    const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(a.position.y() - r - 1)));
    const auto y1 = std::min<Eigen::Index>(cfg.height - 1, static_cast<Eigen::Index>(std::ceil(a.position.y() + r + 1)));
    for (Eigen::Index y = y0; y <= y1; ++y) {
      for (Eigen::Index x = x0; x <= x1; ++x) {
        const double d = (Vec2(static_cast<double>(x), static_cast<double>(y)) - a.position).norm();
        coverage(y, x) = std::max(coverage(y, x), std::clamp(r + 0.5 - d, 0.0, 1.0));
      }
    }
  }
  img = img * (1.0 - coverage) + kAgentIntensity * coverage;

  RenderedFrame out{GrayFrame(img.cwiseMax(0.0).cwiseMin(1.0)), {}};
  for (const auto& a : agents) {
    detect::Detection d;
    d.frame_id = frame_id;
    d.box = {a.position.x() - r, a.position.y() - r, 2.0 * r, 2.0 * r};
    d.confidence = 1.0;
    d.class_id = 0;
    d.ped_id = a.ped_id;
    out.detections.push_back(d);
  }
  return out;
}

FlowField ground_truth_flow(const std::vector<AgentPosition>& at_t,
                            const std::vector<AgentPosition>& at_next, const SceneConfig& cfg) {
  if (at_t.size() != at_next.size()) {
    throw std::invalid_argument("ground_truth_flow: agent counts differ");
  }
  FlowField flow(cfg.width, cfg.height);
  const double r = cfg.agent_radius;
  for (Eigen::Index y = 0; y < cfg.height; ++y) {
    for (Eigen::Index x = 0; x < cfg.width; ++x) {
      const Vec2 p(static_cast<double>(x), static_cast<double>(y));
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < at_t.size(); ++i) {
        const double d = (p - at_t[i].position).norm();
        if (d <= r && d < nearest) {
          nearest = d;
          flow.set(x, y, at_next[i].position - at_t[i].position);
        }
      }
    }
  }
  return flow;
}

std::vector<std::pair<FlowField, FlowField>> Scene::flow_pairs() const {
  std::vector<std::pair<FlowField, FlowField>> out;
  for (std::size_t t = 0; t + 1 < flows.size(); ++t) out.emplace_back(flows[t], flows[t + 1]);
  return out;
}

Scene make_scene(const SceneConfig& cfg) {
  Scene s;
  s.seed = cfg.seed;
  s.tracks = simulate_agents(cfg);
  for (int f = 0; f < cfg.n_frames; ++f) {
    auto rendered = render_frame(positions_at(s.tracks, static_cast<std::size_t>(f)), cfg, f);
    s.frames.push_back(std::move(rendered.frame));
    s.detections.push_back(std::move(rendered.detections));
  }
  for (int f = 0; f + 1 < cfg.n_frames; ++f) {
    s.flows.push_back(ground_truth_flow(positions_at(s.tracks, static_cast<std::size_t>(f)),
                                        positions_at(s.tracks, static_cast<std::size_t>(f + 1)), cfg));
  }
  return s;
}

std::uint64_t scene_seed(std::uint64_t base_seed, std::size_t index) {
  // splitmix64 finaliser
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset make_dataset(const SceneConfig& cfg, std::size_t n_scenes) {
  cfg.validate();
  if (n_scenes < 10) throw std::invalid_argument("make_dataset: n_scenes must be >= 10");
  Dataset ds;
  for (std::size_t i = 0; i < n_scenes; ++i) {
    SceneConfig sc = cfg;
    sc.seed = scene_seed(cfg.seed, i);
    ds.scenes.push_back(make_scene(sc));
  }
  const mno::TrainConfig split;  // 70/20/10
  const auto perm = mno::seeded_permutation(n_scenes, cfg.seed);
  const auto counts = mno::split_counts(n_scenes, split);
  ds.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(counts.train));
  ds.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(counts.train),
                perm.begin() + static_cast<std::ptrdiff_t>(counts.train + counts.val));
  ds.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(counts.train + counts.val), perm.end());
  return ds;
}

}  // namespace flowmno::synth
