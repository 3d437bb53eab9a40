#pragma once

#include <stdexcept>
#include <vector>

#include "nlosnav/geom.hpp"
#include "nlosnav/world.hpp"

namespace nlosnav::nav {

struct NoPath : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidEndpoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimum-cost 8-connected path (straight 1, diagonal sqrt(2)) under the
// octile heuristic. Diagonal steps require both orthogonal neighbors free,
// so paths never cut an occupied corner. Ties break on smaller heuristic,
// then row-major order.
std::vector<world::GridCell> astar(const world::OccupancyGrid& grid,
                                   world::GridCell start, world::GridCell goal);

// Cost of a cell path under the same metric.
double path_cost(const std::vector<world::GridCell>& path);

// Groups the path into Bezier control polygons of `segment_len` points
// (cubic by default); adjacent segments share endpoints.
std::vector<Vec2> smooth_bezier(const std::vector<Vec2>& grid_path,
                                int segment_len = 4);

// de Casteljau evaluation of one Bezier segment.
Vec2 bezier_point(const std::vector<Vec2>& control, double t);

struct PathPlan {
  std::vector<Vec2> grid_path;
  std::vector<Vec2> control_points;
  int segment_len = 4;
  // Dense samples along the curve for the follower.
  std::vector<Vec2> samples;
  std::vector<double> cum_len;
  std::vector<double> curvature;  // signed, left positive

  bool empty() const { return samples.empty(); }
  double length() const { return cum_len.empty() ? 0.0 : cum_len.back(); }
};

// A* + Bezier smoothing + dense sampling; the first control point is snapped
// to the vehicle position and the last to the goal. Throws NoPath or
// InvalidEndpoint from the planning stage.
PathPlan build_plan(const world::OccupancyGrid& grid, const Vec2& vehicle_pos,
                    const Vec2& goal_pos, int segment_len = 4);

struct ControlCommand {
  double throttle = 0.0;  // [-1, 1]
  double steering = 0.0;  // [-1, 1]
};

struct VehicleState {
  world::Pose2 pose;
  double speed = 0.0;
};

enum class VehicleKind { kBicycle, kDiffDrive };

struct VehicleParams {
  VehicleKind kind = VehicleKind::kBicycle;
  double wheelbase = 2.8;   // m; track length for diff drive
  double max_speed = 15.0;  // m/s
  // Bicycle: maximum steering angle (rad). Diff drive: maximum yaw rate
  // (rad/s), scaled by the steering command.
  double max_steer = 0.55;
  double mu = 0.9;          // tire friction; limits lateral acceleration
  double g = 9.81;
  double accel_limit = 4.0; // m/s^2 at full throttle
};

VehicleParams vehicle_params_defaults();
VehicleParams robot_params_defaults();

struct Gains {
  double k_p = 1.2;
  double k_ff = 0.8;
  double k_v = 1.0;
  double lookahead = 4.0;  // m along the curve
  double v_ref = 1.0;      // commanded trial speed
};

// Proportional heading control with curvature feed-forward at the lookahead
// point; throttle tracks v_ref. Pure function of its arguments.
ControlCommand next_command(const PathPlan& plan, const VehicleState& state,
                            const Gains& gains, const VehicleParams& params);

// Closed-form update over dt: speed follows throttle*accel_limit with
// clamping, position and heading integrate the exact circular arc. Lateral
// acceleration is capped at mu*g by shrinking the effective steering.
VehicleState step_vehicle(const VehicleState& state, const ControlCommand& cmd,
                          double dt, const VehicleParams& params);

// sqrt(mu * g * r): top speed a circular path of radius r can be driven at.
double max_corner_speed(double mu, double g, double r);

}  // namespace nlosnav::nav
