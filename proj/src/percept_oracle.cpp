#include <algorithm>
#include <cmath>

#include "nlosnav/percept.hpp"

namespace nlosnav::percept {

namespace {

// Candidate yaw set, ascending so that lexicographic (x, y, yaw) tie-breaking
// falls out of the iteration order.
const double kYaws[8] = {-0.75 * kPi, -0.5 * kPi, -0.25 * kPi, 0.0,
                         0.25 * kPi,  0.5 * kPi,  0.75 * kPi,  kPi};

double residual(const std::vector<double>& counts,
                const std::vector<double>& lambda) {
  double s = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    const double d = counts[i] - lambda[i];
    s += d * d;
  }
  return s;
}

}  // namespace

CandidateBank build_candidate_bank(const world::Scene& static_scene,
                                   const world::Pose2& sensor_vehicle_pose,
                                   double candidate_grid_step,
                                   const transient::SensorConfig& config) {
  if (candidate_grid_step <= 0.0) {
    throw std::invalid_argument("candidate_grid_step must be positive");
  }
  if (static_scene.hidden_region.empty()) {
    throw world::NoHiddenRegion("scene has no hidden region");
  }
  CandidateBank bank;
  const Aabb box = static_scene.hidden_region.bbox();
  for (double x = box.lo.x; x <= box.hi.x + 1e-9; x += candidate_grid_step) {
    for (double y = box.lo.y; y <= box.hi.y + 1e-9; y += candidate_grid_step) {
      if (!static_scene.hidden_region.contains({x, y})) continue;
      for (double yaw : kYaws) bank.poses.emplace_back(x, y, yaw);
    }
  }
  if (bank.poses.empty()) {
    throw world::NoHiddenRegion("candidate grid is empty");
  }
  bank.frames.resize(bank.poses.size());
  const int n = static_cast<int>(bank.poses.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n; ++i) {
    world::Scene s = static_scene;
    s.object = world::default_hidden_object(s.scale, bank.poses[i]);
    bank.frames[i] = transient::expected_frame(s, sensor_vehicle_pose, config);
  }
  bank.no_object = transient::expected_frame(static_scene, sensor_vehicle_pose, config);
  return bank;
}

ObjectEstimate oracle_localize(const CandidateBank& bank,
                               const transient::HistogramFrame& frame,
                               double uncertainty_radius) {
  const size_t n_counts = frame.counts.size();
  if (bank.frames.empty() || bank.frames[0].lambda.size() != n_counts) {
    throw ModelShapeError("frame shape does not match the candidate bank");
  }
  std::vector<double> cost(bank.frames.size());
  const int n = static_cast<int>(bank.frames.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    cost[i] = residual(frame.counts, bank.frames[i].lambda);
  }
  size_t best = 0;
  for (size_t i = 1; i < cost.size(); ++i) {
    if (cost[i] < cost[best]) best = i;  // strict: first of a tie wins
  }
  ObjectEstimate est;
  est.x_hat = bank.poses[best].x;
  est.y_hat = bank.poses[best].y;
  est.yaw_hat = bank.poses[best].yaw;
  est.uncertainty_radius = uncertainty_radius;
  const double no_obj = residual(frame.counts, bank.no_object.lambda);
  est.low_confidence = cost[best] > 0.95 * no_obj;
  return est;
}

ObjectEstimate oracle_localize(const world::Scene& static_scene,
                               const transient::HistogramFrame& frame,
                               const world::Pose2& sensor_vehicle_pose,
                               double candidate_grid_step,
                               const transient::SensorConfig& config,
                               double uncertainty_radius) {
  CandidateBank bank = build_candidate_bank(static_scene, sensor_vehicle_pose,
                                            candidate_grid_step, config);
  return oracle_localize(bank, frame, uncertainty_radius);
}

world::OccupancyGrid estimate_to_occupancy(const ObjectEstimate& estimate,
                                           const world::OccupancyGrid& static_grid) {
  world::OccupancyGrid g = static_grid;
  const Vec2 c{estimate.x_hat, estimate.y_hat};
  const world::GridCell home = g.cell_of(c);
  if (g.in_grid(home.cx, home.cy)) {
    g.at(home.cx, home.cy) = world::CellState::kOccupied;
  }
  const double r = estimate.uncertainty_radius;
  if (r <= 0.0) return g;
  const world::GridCell lo = g.cell_of({c.x - r, c.y - r});
  const world::GridCell hi = g.cell_of({c.x + r, c.y + r});
  for (int cy = std::max(lo.cy, 0); cy <= std::min(hi.cy, g.height - 1); ++cy) {
    for (int cx = std::max(lo.cx, 0); cx <= std::min(hi.cx, g.width - 1); ++cx) {
      if (distance(g.cell_center(cx, cy), c) <= r) {
        g.at(cx, cy) = world::CellState::kOccupied;
      }
    }
  }
  return g;
}

}  // namespace nlosnav::percept
