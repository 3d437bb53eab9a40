#include "nlosnav/nav.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace nlosnav::nav {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double octile(const world::GridCell& a, const world::GridCell& b) {
  const double dx = std::abs(a.cx - b.cx);
  const double dy = std::abs(a.cy - b.cy);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

}  // namespace

std::vector<world::GridCell> astar(const world::OccupancyGrid& grid,
                                   world::GridCell start, world::GridCell goal) {
  if (!grid.is_free(start.cx, start.cy) || !grid.is_free(goal.cx, goal.cy)) {
    throw InvalidEndpoint("start or goal cell is not free");
  }
  const int w = grid.width, h = grid.height;
  auto idx = [w](const world::GridCell& c) { return c.cy * w + c.cx; };
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<double> g_cost(n, 1e300);
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);

  // (f, h, row-major index) min-heap; the tuple order implements the
  // tie-break rule.
  using Entry = std::tuple<double, double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g_cost[idx(start)] = 0.0;
  open.emplace(octile(start, goal), octile(start, goal), idx(start));

  const int dxs[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dys[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int goal_idx = idx(goal);

  while (!open.empty()) {
    const auto [f, hh, ci] = open.top();
    open.pop();
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (ci == goal_idx) break;
    const world::GridCell cur{ci % w, ci / w};
    const double gc = g_cost[ci];
    for (int k = 0; k < 8; ++k) {
      const int nx = cur.cx + dxs[k];
      const int ny = cur.cy + dys[k];
      if (!grid.is_free(nx, ny)) continue;
      const bool diagonal = k >= 4;
      if (diagonal) {
        // No corner cutting: both orthogonal neighbors must be free.
        if (!grid.is_free(cur.cx + dxs[k], cur.cy) ||
            !grid.is_free(cur.cx, cur.cy + dys[k])) {
          continue;
        }
      }
      const int ni = ny * w + nx;
      if (closed[ni]) continue;
      const double ng = gc + (diagonal ? kSqrt2 : 1.0);
      if (ng < g_cost[ni] - 1e-12) {
        g_cost[ni] = ng;
        parent[ni] = ci;
        const double nh = octile({nx, ny}, goal);
        open.emplace(ng + nh, nh, ni);
      }
    }
  }
  if (!closed[goal_idx]) throw NoPath("no path between start and goal");

  std::vector<world::GridCell> path;
  for (int ci = goal_idx; ci != -1; ci = parent[ci]) {
    path.push_back({ci % w, ci / w});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const std::vector<world::GridCell>& path) {
  double c = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    const bool diag = path[i].cx != path[i - 1].cx && path[i].cy != path[i - 1].cy;
    c += diag ? kSqrt2 : 1.0;
  }
  return c;
}

std::vector<Vec2> smooth_bezier(const std::vector<Vec2>& grid_path,
                                int segment_len) {
  if (grid_path.size() < 2) {
    throw std::invalid_argument("need at least two path points");
  }
  segment_len = std::max(segment_len, 2);
  // Control points are the waypoints themselves; segments share endpoints.
  return grid_path;
}

Vec2 bezier_point(const std::vector<Vec2>& control, double t) {
  std::vector<Vec2> pts = control;
  for (size_t level = pts.size(); level > 1; --level) {
    for (size_t i = 0; i + 1 < level; ++i) {
      pts[i] = pts[i] * (1.0 - t) + pts[i + 1] * t;
    }
  }
  return pts[0];
}

namespace {

// Signed curvature from first and second derivatives.
double curvature_of(const Vec2& d1, const Vec2& d2) {
  const double speed = d1.norm();
  if (speed < 1e-9) return 0.0;
  return d1.cross(d2) / (speed * speed * speed);
}

void sample_segment(const std::vector<Vec2>& ctrl, int samples_per_seg,
                    bool include_start, PathPlan* plan) {
  const int deg = static_cast<int>(ctrl.size()) - 1;
  for (int j = include_start ? 0 : 1; j <= samples_per_seg; ++j) {
    const double t = static_cast<double>(j) / samples_per_seg;
    const Vec2 p = bezier_point(ctrl, t);
    // Derivatives via the control-point difference form.
    Vec2 d1{0, 0}, d2{0, 0};
    if (deg >= 1) {
      std::vector<Vec2> dc(deg);
      for (int i = 0; i < deg; ++i) dc[i] = (ctrl[i + 1] - ctrl[i]) * deg;
      d1 = bezier_point(dc, t);
      if (deg >= 2) {
        std::vector<Vec2> ddc(deg - 1);
        for (int i = 0; i + 1 < deg; ++i) ddc[i] = (dc[i + 1] - dc[i]) * (deg - 1);
        d2 = bezier_point(ddc, t);
      }
    }
    if (!plan->samples.empty()) {
      const double step = distance(plan->samples.back(), p);
      plan->cum_len.push_back(plan->cum_len.back() + step);
    } else {
      plan->cum_len.push_back(0.0);
    }
    plan->samples.push_back(p);
    plan->curvature.push_back(curvature_of(d1, d2));
  }
}

}  // namespace

PathPlan build_plan(const world::OccupancyGrid& grid, const Vec2& vehicle_pos,
                    const Vec2& goal_pos, int segment_len) {
  const world::GridCell start = grid.cell_of(vehicle_pos);
  const world::GridCell goal = grid.cell_of(goal_pos);
  const auto cells = astar(grid, start, goal);

  PathPlan plan;
  plan.segment_len = std::max(segment_len, 2);
  plan.grid_path.reserve(cells.size());
  for (const auto& c : cells) plan.grid_path.push_back(grid.cell_center(c.cx, c.cy));
  plan.control_points = smooth_bezier(plan.grid_path, plan.segment_len);
  plan.control_points.front() = vehicle_pos;
  plan.control_points.back() = goal_pos;

  const int step = plan.segment_len - 1;
  const int n = static_cast<int>(plan.control_points.size());
  const int samples_per_seg = 12;
  if (n == 1) {
    plan.samples = {plan.control_points[0]};
    plan.cum_len = {0.0};
    plan.curvature = {0.0};
    return plan;
  }
  for (int s = 0; s < n - 1; s += step) {
    const int e = std::min(s + step, n - 1);
    std::vector<Vec2> ctrl(plan.control_points.begin() + s,
                           plan.control_points.begin() + e + 1);
    sample_segment(ctrl, samples_per_seg, /*include_start=*/s == 0, &plan);
  }
  return plan;
}

VehicleParams vehicle_params_defaults() {
  VehicleParams p;
  p.kind = VehicleKind::kBicycle;
  p.wheelbase = 2.8;
  p.max_speed = 15.0;
  p.max_steer = 0.55;
  p.mu = 0.9;
  p.g = 9.81;
  p.accel_limit = 4.0;
  return p;
}

VehicleParams robot_params_defaults() {
  VehicleParams p;
  p.kind = VehicleKind::kDiffDrive;
  p.wheelbase = 0.1;
  p.max_speed = 0.8;
  p.max_steer = 2.5;  // rad/s yaw-rate cap
  p.mu = 0.9;
  p.g = 9.81;
  p.accel_limit = 1.0;
  return p;
}

ControlCommand next_command(const PathPlan& plan, const VehicleState& state,
                            const Gains& gains, const VehicleParams& params) {
  ControlCommand cmd;
  cmd.throttle = std::clamp(gains.k_v * (gains.v_ref - state.speed), -1.0, 1.0);
  if (plan.empty()) return cmd;

  const Vec2 pos = state.pose.position();
  size_t nearest = 0;
  double best = 1e300;
  for (size_t i = 0; i < plan.samples.size(); ++i) {
    const double d = (plan.samples[i] - pos).norm_sq();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  const double target_s = plan.cum_len[nearest] + gains.lookahead;
  size_t ti = nearest;
  while (ti + 1 < plan.samples.size() && plan.cum_len[ti] < target_s) ++ti;

  const Vec2 target = plan.samples[ti];
  const double heading_error =
      wrap_angle(std::atan2(target.y - pos.y, target.x - pos.x) - state.pose.yaw);
  const double kappa = plan.curvature[ti];
  double ff;
  if (params.kind == VehicleKind::kBicycle) {
    ff = std::atan(params.wheelbase * kappa) / params.max_steer;
  } else {
    ff = kappa * std::max(state.speed, 0.1) / params.max_steer;
  }
  cmd.steering = std::clamp(gains.k_p * heading_error + gains.k_ff * ff, -1.0, 1.0);
  return cmd;
}

VehicleState step_vehicle(const VehicleState& state, const ControlCommand& cmd,
                          double dt, const VehicleParams& params) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  const double throttle = std::clamp(cmd.throttle, -1.0, 1.0);
  const double steering = std::clamp(cmd.steering, -1.0, 1.0);

  const double v0 = state.speed;
  const double a = throttle * params.accel_limit;
  double v1 = std::clamp(v0 + a * dt, 0.0, params.max_speed);

  // Arc length over dt with the trapezoidal (exact for linear v) profile,
  // split at the clamp time when saturation occurs.
  double s_len;
  if (std::abs(a) < 1e-12 || v1 == v0 + a * dt) {
    s_len = 0.5 * (v0 + v1) * dt;
  } else {
    const double t_clamp = (v1 - v0) / a;
    s_len = 0.5 * (v0 + v1) * t_clamp + v1 * (dt - t_clamp);
  }

  VehicleState out = state;
  out.speed = v1;
  const double yaw = state.pose.yaw;

  if (params.kind == VehicleKind::kBicycle) {
    double delta = steering * params.max_steer;
    // Friction-limited steering: v^2 * tan|d| / L <= mu * g.
    const double v_for_limit = std::max(v0, 1e-6);
    const double tan_max = params.mu * params.g * params.wheelbase /
                           (v_for_limit * v_for_limit);
    const double delta_max = std::atan(tan_max);
    delta = std::clamp(delta, -delta_max, delta_max);
    const double kappa = std::tan(delta) / params.wheelbase;
    if (std::abs(kappa) < 1e-12) {
      out.pose = world::Pose2(state.pose.x + s_len * std::cos(yaw),
                              state.pose.y + s_len * std::sin(yaw), yaw);
    } else {
      const double dpsi = kappa * s_len;
      out.pose = world::Pose2(
          state.pose.x + (std::sin(yaw + dpsi) - std::sin(yaw)) / kappa,
          state.pose.y - (std::cos(yaw + dpsi) - std::cos(yaw)) / kappa,
          yaw + dpsi);
    }
  } else {
    double omega = steering * params.max_steer;
    const double v_for_limit = std::max(v0, 1e-6);
    const double omega_max = params.mu * params.g / v_for_limit;
    omega = std::clamp(omega, -omega_max, omega_max);
    if (std::abs(omega) < 1e-12) {
      out.pose = world::Pose2(state.pose.x + s_len * std::cos(yaw),
                              state.pose.y + s_len * std::sin(yaw), yaw);
    } else {
      // Closed-form integral of (v0 + a t)(cos, sin)(yaw + omega t) over the
      // same piecewise-linear speed profile used for s_len.
      auto integrate = [&](double t0, double t1, double vv0, double aa,
                           double* dx, double* dy) {
        const double p0 = yaw + omega * t0;
        const double p1 = yaw + omega * t1;
        const double va = vv0 + aa * (t1 - t0);
        *dx += (va * std::sin(p1) - vv0 * std::sin(p0)) / omega +
               aa * (std::cos(p1) - std::cos(p0)) / (omega * omega);
        *dy += (-va * std::cos(p1) + vv0 * std::cos(p0)) / omega +
               aa * (std::sin(p1) - std::sin(p0)) / (omega * omega);
      };
      double dx = 0.0, dy = 0.0;
      if (std::abs(a) < 1e-12 || v1 == v0 + a * dt) {
        integrate(0.0, dt, v0, a, &dx, &dy);
      } else {
        const double t_clamp = (v1 - v0) / a;
        integrate(0.0, t_clamp, v0, a, &dx, &dy);
        integrate(t_clamp, dt, v1, 0.0, &dx, &dy);
      }
      out.pose = world::Pose2(state.pose.x + dx, state.pose.y + dy,
                              yaw + omega * dt);
    }
  }
  return out;
}

double max_corner_speed(double mu, double g, double r) {
  return std::sqrt(mu * g * r);
}

}  // namespace nlosnav::nav
