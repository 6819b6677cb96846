#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowmno/core/grid.hpp"
#include "flowmno/mno/model.hpp"

namespace flowmno::trajectory {

struct TrackPoint {
  std::int64_t frame_id = 0;
  Vec2 position = Vec2::Zero();
};

struct Track {
  std::int64_t ped_id = 0;
  std::vector<TrackPoint> points;

  /// Throws std::invalid_argument unless frame ids strictly increase and positions are finite.
  void validate() const;
};

/// Thrown when predicted and ground-truth tracks cannot be paired point by point.
class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Moves a centroid by the flow sampled (bilinear, clamped) at its position.
inline Vec2 step_centroid(const Vec2& centroid, const FlowField& predicted_flow) {
  return centroid + bilinear_sample(predicted_flow, centroid);
}

struct StartState {
  std::int64_t ped_id = 0;
  Vec2 position = Vec2::Zero();
};

/// Rolls the operator forward `horizon` steps from flow_t and advects each
/// centroid through the predicted fields. Points are stamped start_frame+1 ...
/// start_frame+horizon.
std::vector<Track> predict_tracks(const mno::MnoModel& model, const FlowField& flow_t,
                                  const std::vector<StartState>& starts, int horizon,
                                  std::int64_t start_frame = 0);

/// Same advection given precomputed fields.
std::vector<Track> advect_tracks(const std::vector<FlowField>& flows,
                                 const std::vector<StartState>& starts,
                                 std::int64_t start_frame = 0);

double ade(const Track& pred, const Track& gt);
double fde(const Track& pred, const Track& gt);

struct PedMetrics {
  std::int64_t ped_id = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct Evaluation {
  double mean_ade = 0.0;
  double mean_fde = 0.0;
  std::vector<PedMetrics> per_ped;
};

/// Pairs every predicted track with the ground truth of the same ped_id,
/// restricted to the predicted frame ids. Missing pedestrians or frames raise
/// AlignmentError naming every offender.
Evaluation evaluate(const std::vector<Track>& pred, const std::vector<Track>& gt);

}  // namespace flowmno::trajectory
