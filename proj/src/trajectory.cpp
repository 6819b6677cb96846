#include "flowmno/trajectory.hpp"

#include <map>
#include <sstream>

namespace flowmno::trajectory {

void Track::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].position.allFinite()) {
      throw std::invalid_argument("Track " + std::to_string(ped_id) + ": non-finite position");
    }
    if (i > 0 && points[i].frame_id <= points[i - 1].frame_id) {
      throw std::invalid_argument("Track " + std::to_string(ped_id) +
                                  ": frame ids must strictly increase");
    }
  }
}

std::vector<Track> advect_tracks(const std::vector<FlowField>& flows,
                                 const std::vector<StartState>& starts,
                                 std::int64_t start_frame) {
  std::vector<Track> out;
  out.reserve(starts.size());
  for (const auto& s : starts) {
    Track t{s.ped_id, {}};
    Vec2 p = s.position;
    for (std::size_t k = 0; k < flows.size(); ++k) {
      p = step_centroid(p, flows[k]);
      t.points.push_back({start_frame + static_cast<std::int64_t>(k) + 1, p});
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Track> predict_tracks(const mno::MnoModel& model, const FlowField& flow_t,
                                  const std::vector<StartState>& starts, int horizon,
                                  std::int64_t start_frame) {
  if (horizon < 1) throw std::invalid_argument("predict_tracks: horizon must be >= 1");
  std::vector<Track> out;
  for (const auto& s : starts) out.push_back({s.ped_id, {}});
  std::vector<Vec2> pos;
  for (const auto& s : starts) pos.push_back(s.position);

  FlowField current = flow_t;
  for (int k = 0; k < horizon; ++k) {
    current = mno::forward(model, current);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      pos[i] = step_centroid(pos[i], current);
      out[i].points.push_back({start_frame + k + 1, pos[i]});
    }
  }
  return out;
}

namespace {

void require_aligned(const Track& pred, const Track& gt) {
  if (pred.points.empty() || pred.points.size() != gt.points.size()) {
    throw AlignmentError("ped " + std::to_string(pred.ped_id) + ": track lengths differ or empty");
  }
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    if (pred.points[i].frame_id != gt.points[i].frame_id) {
      throw AlignmentError("ped " + std::to_string(pred.ped_id) + ": frame " +
                           std::to_string(pred.points[i].frame_id) + " vs " +
                           std::to_string(gt.points[i].frame_id));
    }
  }
}

}  // namespace

double ade(const Track& pred, const Track& gt) {
  require_aligned(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    sum += (pred.points[i].position - gt.points[i].position).norm();
  }
  return sum / static_cast<double>(pred.points.size());
}

double fde(const Track& pred, const Track& gt) {
  require_aligned(pred, gt);
  return (pred.points.back().position - gt.points.back().position).norm();
}

Evaluation evaluate(const std::vector<Track>& pred, const std::vector<Track>& gt) {
  if (pred.empty()) throw std::invalid_argument("evaluate: no predicted tracks");
  std::map<std::int64_t, const Track*> by_id;
  for (const auto& t : gt) by_id[t.ped_id] = &t;

  std::ostringstream problems;
  Evaluation ev;
  for (const auto& p : pred) {
    const auto it = by_id.find(p.ped_id);
    if (it == by_id.end()) {
      problems << " ped " << p.ped_id << ": no ground truth;";
      continue;
    }
    std::map<std::int64_t, Vec2> gt_at;
    for (const auto& pt : it->second->points) gt_at[pt.frame_id] = pt.position;
    Track aligned{p.ped_id, {}};
    bool ok = true;
    for (const auto& pt : p.points) {
      const auto g = gt_at.find(pt.frame_id);
      if (g == gt_at.end()) {
        problems << " ped " << p.ped_id << " frame " << pt.frame_id << ": missing in ground truth;";
        ok = false;
        continue;
      }
      aligned.points.push_back({pt.frame_id, g->second});
    }
    if (!ok) continue;
    ev.per_ped.push_back({p.ped_id, ade(p, aligned), fde(p, aligned)});
  }
  if (!problems.str().empty()) throw AlignmentError("evaluate:" + problems.str());
  for (const auto& m : ev.per_ped) {
    ev.mean_ade += m.ade;
    ev.mean_fde += m.fde;
  }
  ev.mean_ade /= static_cast<double>(ev.per_ped.size());
  ev.mean_fde /= static_cast<double>(ev.per_ped.size());
  return ev;
}

}  // namespace flowmno::trajectory
