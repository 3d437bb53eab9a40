#include "nlosnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "nlosnav/rng.hpp"

namespace nlosnav::sim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

world::Scene without_object(const world::Scene& scene) {
  world::Scene s = scene;
  s.object.reset();
  return s;
}

void mark_cells(world::OccupancyGrid& grid, const std::vector<world::GridCell>& cells) {
  for (const auto& c : cells) grid.at(c.cx, c.cy) = world::CellState::kOccupied;
}

// A plan must start where the vehicle is even when perception has painted
// that cell occupied; the start cell is freed for the search only.
nav::PathPlan plan_from(const world::OccupancyGrid& grid, const Vec2& pos,
                        const Vec2& goal, int segment_len) {
  const world::GridCell start = grid.cell_of(pos);
  if (grid.in_grid(start.cx, start.cy) &&
      grid.at(start.cx, start.cy) == world::CellState::kOccupied) {
    world::OccupancyGrid g = grid;
    g.at(start.cx, start.cy) = world::CellState::kFree;
    return nav::build_plan(g, pos, goal, segment_len);
  }
  return nav::build_plan(grid, pos, goal, segment_len);
}

}  // namespace

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kLos: return "los";
    case Mode::kNlos: return "nlos";
    case Mode::kPrivileged: return "privileged";
  }
  return "?";
}

Mode mode_from_name(const std::string& name) {
  if (name == "los") return Mode::kLos;
  if (name == "nlos") return Mode::kNlos;
  if (name == "privileged") return Mode::kPrivileged;
  throw ConfigError("unknown mode: " + name);
}

TrialResult run_trial(const TrialSpec& spec) {
  if (spec.dt <= 0.0 || spec.sensor_period < spec.dt) {
    throw ConfigError("need dt > 0 and sensor_period >= dt");
  }
  if (spec.v_ref <= 0.0) throw ConfigError("v_ref must be positive");
  if (spec.mode == Mode::kNlos && spec.estimator == Estimator::kCnn &&
      spec.model == nullptr) {
    throw ConfigError("NLOS+CNN trial needs a model");
  }
  if (!spec.scene.bounds.contains(spec.scene.start.position()) ||
      !spec.scene.bounds.contains(spec.scene.goal)) {
    throw ConfigError("start or goal outside scene bounds");
  }

  const world::Scene& scene = spec.scene;
  const world::Scene static_scene = without_object(scene);
  const world::OccupancyGrid static_grid =
      world::rasterize_static(scene, spec.grid_resolution);

  const double timeout =
      spec.timeout > 0.0
          ? spec.timeout
          : 3.0 * distance(scene.start.position(), scene.goal) / spec.v_ref + 20.0;
  const int steps_per_capture =
      std::max(1, static_cast<int>(std::lround(spec.sensor_period / spec.dt)));

  nav::Gains gains = spec.gains;
  gains.v_ref = spec.v_ref;

  // Precomputed object cell sets (the object never moves within a trial).
  std::vector<world::GridCell> object_cells_inflated;
  std::vector<world::GridCell> object_cells_tight;
  if (scene.object) {
    object_cells_inflated = world::object_footprint_cells(
        static_grid, *scene.object, scene.footprint_radius);
    object_cells_tight =
        world::object_footprint_cells(static_grid, *scene.object, 0.0);
  }

  nav::VehicleState state{scene.start, spec.v_ref};
  nav::PathPlan plan;
  int plan_id = -1;
  bool object_seen_los = false;
  std::optional<percept::ObjectEstimate> last_estimate;
  std::vector<percept::ObjectEstimate> accepted;

  TrialResult result;
  result.trace.reserve(static_cast<size_t>(timeout / spec.dt) + 2);

  int capture_idx = 0;
  for (int step = 0;; ++step) {
    const double t = step * spec.dt;
    if (world::footprint_collides(scene, state.pose, scene.footprint_radius)) {
      result.outcome = Outcome::kCollided;
      result.collided = true;
      result.travel_time = t;
      break;
    }
    if (distance(state.pose.position(), scene.goal) <= spec.grid_resolution) {
      result.outcome = Outcome::kReachedGoal;
      result.reached_goal = true;
      result.travel_time = t;
      break;
    }
    if (t >= timeout) {
      result.outcome = Outcome::kTimedOut;
      result.timed_out = true;
      result.travel_time = t;
      break;
    }

    std::optional<percept::ObjectEstimate> capture_estimate;
    if (step % steps_per_capture == 0) {
      world::OccupancyGrid grid = static_grid;
      const world::Pose2 sensor_pose =
          transient::sensor_origin_pose(state.pose, spec.sensor);

      if (spec.mode == Mode::kPrivileged) {
        mark_cells(grid, object_cells_inflated);
      } else if (scene.object) {
        // Line-of-sight baseline: the object enters the map once any of its
        // footprint cells is directly visible, and stays there.
        if (!object_seen_los) {
          for (const auto& c : object_cells_tight) {
            if (world::is_los_visible(scene, sensor_pose.position(),
                                      static_grid.cell_center(c.cx, c.cy))) {
              object_seen_los = true;
              break;
            }
          }
        }
        if (object_seen_los) mark_cells(grid, object_cells_inflated);
      }

      if (spec.mode == Mode::kNlos) {
        const transient::HistogramFrame frame = transient::capture(
            scene, state.pose, spec.sensor, mix_seed(spec.seed, 0xf0000u + capture_idx));
        percept::ObjectEstimate est;
        if (spec.estimator == Estimator::kCnn) {
          est = percept::cnn_forward(*spec.model, frame, state.pose);
        } else {
          est = percept::oracle_localize(static_scene, frame, state.pose,
                                         spec.oracle_grid_step, spec.sensor);
        }
        est.uncertainty_radius = spec.uncertainty_radius;
        if (spec.localization_noise_sigma) {
          Rng noise(mix_seed(spec.seed, 0xa0000u + capture_idx));
          est.x_hat += noise.normal(0.0, *spec.localization_noise_sigma);
          est.y_hat += noise.normal(0.0, *spec.localization_noise_sigma);
        }
        capture_estimate = est;
        if (!est.low_confidence) {
          last_estimate = est;
          accepted.push_back(est);
        }
      }

      if (last_estimate) {
        percept::ObjectEstimate planning_est = *last_estimate;
        // Inflate by the body radius so the planner keeps the same clearance
        // from the estimate disk as from walls.
        planning_est.uncertainty_radius += scene.footprint_radius;
        grid = percept::estimate_to_occupancy(planning_est, grid);
      }

      try {
        plan = plan_from(grid, state.pose.position(), scene.goal,
                         spec.bezier_segment_len);
        ++plan_id;
      } catch (const nav::NoPath&) {
        // Keep following the previous plan until the map opens up.
      } catch (const nav::InvalidEndpoint&) {
      }
      ++capture_idx;
    }

    result.trace.push_back({t, state, capture_estimate, plan_id});

    const nav::ControlCommand cmd = next_command(plan, state, gains, spec.vehicle);
    const nav::VehicleState next = step_vehicle(state, cmd, spec.dt, spec.vehicle);
    result.trajectory_length += distance(state.pose.position(), next.pose.position());
    state = next;
  }

  if (!accepted.empty() && scene.object) {
    result.mean_localization_error =
        percept::localization_error(accepted, scene.object->pose);
  } else {
    result.mean_localization_error = kNan;
  }
  return result;
}

ScenarioDefaults scenario_defaults(world::Scale family) {
  ScenarioDefaults d;
  d.scene = world::build_lturn_scene(family);
  if (family == world::Scale::kVehicle) {
    d.sensor = transient::vehicle_sensor_defaults();
    d.vehicle = nav::vehicle_params_defaults();
    d.gains.k_p = 1.2;
    d.gains.k_ff = 0.8;
    d.gains.k_v = 1.0;
    d.gains.lookahead = 6.0;
    d.grid_resolution = 0.5;
    d.uncertainty_radius = 1.0;
    d.dt = 0.02;
    d.sensor_period = 0.1;
    d.oracle_grid_step = 1.0;
  } else {
    d.sensor = transient::robot_sensor_defaults();
    d.vehicle = nav::robot_params_defaults();
    d.gains.k_p = 1.2;
    d.gains.k_ff = 0.8;
    d.gains.k_v = 1.0;
    d.gains.lookahead = 0.45;
    d.grid_resolution = 0.05;
    d.uncertainty_radius = 0.3;
    d.dt = 0.02;
    d.sensor_period = 0.2;
    d.oracle_grid_step = 0.25;
  }
  return d;
}

namespace {

TrialSpec campaign_trial_spec(const CampaignConfig& config,
                              const world::Pose2& object_pose, Mode mode,
                              double v_ref, uint64_t seed) {
  TrialSpec spec;
  spec.scene = config.defaults.scene;
  spec.scene.object = world::default_hidden_object(config.family, object_pose);
  spec.mode = mode;
  spec.estimator = config.estimator;
  spec.model = config.model;
  spec.oracle_grid_step = config.defaults.oracle_grid_step;
  spec.sensor = config.defaults.sensor;
  spec.vehicle = config.defaults.vehicle;
  spec.gains = config.defaults.gains;
  spec.v_ref = v_ref;
  spec.seed = seed;
  spec.dt = config.defaults.dt;
  spec.sensor_period = config.defaults.sensor_period;
  spec.grid_resolution = config.defaults.grid_resolution;
  spec.uncertainty_radius = config.defaults.uncertainty_radius;
  return spec;
}

CampaignRow summarize(int trial, Mode mode, uint64_t seed, double v_ref,
                      const world::Pose2& object_pose, const TrialResult& r) {
  CampaignRow row;
  row.trial = trial;
  row.mode = mode;
  row.seed = seed;
  row.v_ref = v_ref;
  row.object_pose = object_pose;
  row.outcome = r.outcome;
  row.travel_time = r.travel_time;
  row.trajectory_length = r.trajectory_length;
  row.mean_localization_error = r.mean_localization_error;
  return row;
}

}  // namespace

std::vector<CampaignRow> run_campaign(const CampaignConfig& config,
                                      std::ostream* csv) {
  if (config.n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (config.speed_lo <= 0.0 || config.speed_hi < config.speed_lo) {
    throw ConfigError("bad speed range");
  }
  if (csv) write_campaign_csv_header(*csv);

  const world::Scene& base = config.defaults.scene;
  std::vector<std::vector<CampaignRow>> per_trial(config.n_trials);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) ordered
#endif
  for (int i = 0; i < config.n_trials; ++i) {
    const uint64_t pair_seed = mix_seed(config.seed, i);
    const world::Pose2 object_pose = world::sample_hidden_pose(base, pair_seed);
    Rng speed_rng(mix_seed(pair_seed, 0x737064u));
    const double v_ref = speed_rng.uniform(config.speed_lo, config.speed_hi);

    std::vector<CampaignRow> rows;
    for (Mode mode : config.modes) {
      TrialSpec spec = campaign_trial_spec(config, object_pose, mode, v_ref, pair_seed);
      rows.push_back(summarize(i, mode, pair_seed, v_ref, object_pose,
                               run_trial(spec)));
    }
    per_trial[i] = rows;
#ifdef _OPENMP
#pragma omp ordered
#endif
    {
      if (csv) {
        for (const CampaignRow& row : per_trial[i]) write_campaign_row(*csv, row);
        csv->flush();
      }
    }
  }

  std::vector<CampaignRow> out;
  for (const auto& rows : per_trial) {
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

void write_campaign_csv_header(std::ostream& out) {
  out << "trial,mode,seed,v_ref,object_x,object_y,object_yaw,outcome,collided,"
         "reached_goal,timed_out,travel_time,trajectory_length,"
         "mean_localization_error\n";
}

void write_campaign_row(std::ostream& out, const CampaignRow& row) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << row.trial << "," << mode_name(row.mode) << "," << row.seed << ","
     << row.v_ref << "," << row.object_pose.x << "," << row.object_pose.y
     << "," << row.object_pose.yaw << ",";
  switch (row.outcome) {
    case Outcome::kCollided: ss << "collided,1,0,0,"; break;
    case Outcome::kReachedGoal: ss << "reached_goal,0,1,0,"; break;
    case Outcome::kTimedOut: ss << "timeout,0,0,1,"; break;
  }
  ss << row.travel_time << "," << row.trajectory_length << ",";
  if (std::isnan(row.mean_localization_error)) {
    ss << "";
  } else {
    ss << row.mean_localization_error;
  }
  out << ss.str() << "\n";
}

std::vector<CampaignRow> read_campaign_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open campaign file: " + path);
  std::string line;
  std::getline(in, line);
  std::vector<CampaignRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() < 13) throw std::runtime_error("malformed campaign row");
    CampaignRow row;
    row.trial = std::stoi(c[0]);
    row.mode = mode_from_name(c[1]);
    row.seed = std::stoull(c[2]);
    row.v_ref = std::stod(c[3]);
    row.object_pose = world::Pose2(std::stod(c[4]), std::stod(c[5]), std::stod(c[6]));
    if (c[7] == "collided") row.outcome = Outcome::kCollided;
    else if (c[7] == "reached_goal") row.outcome = Outcome::kReachedGoal;
    else row.outcome = Outcome::kTimedOut;
    row.travel_time = std::stod(c[11]);
    row.trajectory_length = std::stod(c[12]);
    row.mean_localization_error =
        c.size() > 13 && !c[13].empty() ? std::stod(c[13]) : kNan;
    out.push_back(row);
  }
  return out;
}

std::vector<RateBin> collision_rate_by_speed(const std::vector<CampaignRow>& rows,
                                             const std::vector<double>& bin_edges) {
  if (rows.empty()) throw std::invalid_argument("no campaign rows");
  if (bin_edges.size() < 2) throw std::invalid_argument("need at least one bin");
  std::vector<RateBin> out;
  for (size_t b = 0; b + 1 < bin_edges.size(); ++b) {
    for (Mode mode : {Mode::kLos, Mode::kNlos, Mode::kPrivileged}) {
      int n = 0, hits = 0;
      for (const CampaignRow& r : rows) {
        if (r.mode != mode) continue;
        if (r.v_ref <= bin_edges[b] || r.v_ref > bin_edges[b + 1]) continue;
        ++n;
        if (r.outcome == Outcome::kCollided) ++hits;
      }
      if (n == 0) continue;  // empty bins are absent, not zero
      out.push_back({bin_edges[b], bin_edges[b + 1], mode, n,
                     static_cast<double>(hits) / n});
    }
  }
  return out;
}

EfficiencyReport efficiency_report(const TrialResult& los,
                                   const TrialResult& nlos) {
  if (!los.reached_goal || !nlos.reached_goal) {
    throw NotComparable("both trials must reach the goal");
  }
  return {los.travel_time / nlos.travel_time,
          los.trajectory_length / nlos.trajectory_length};
}

std::vector<SweepRow> localization_sweep(const CampaignConfig& config,
                                         const std::vector<double>& sigmas,
                                         int n_trials, double v_ref,
                                         uint64_t seed, std::ostream* csv) {
  if (sigmas.empty()) throw std::invalid_argument("no sigmas");
  if (csv) *csv << "sigma,n_trials,mean_localization_error,collision_rate\n";
  const world::Scene& base = config.defaults.scene;
  std::vector<SweepRow> out;

  for (size_t si = 0; si < sigmas.size(); ++si) {
    const double sigma = sigmas[si];
    int collided = 0;
    double err_sum = 0.0;
    long err_n = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : collided, err_sum, err_n)
#endif
    for (int i = 0; i < n_trials; ++i) {
      // Trial worlds and noise streams shared across sigmas, so a larger
      // sigma scales the same perturbations rather than redrawing them.
      const uint64_t pair_seed = mix_seed(seed, i);
      const world::Pose2 object_pose = world::sample_hidden_pose(base, pair_seed);
      TrialSpec spec = campaign_trial_spec(config, object_pose, Mode::kNlos,
                                           v_ref, pair_seed);
      if (sigma > 0.0) spec.localization_noise_sigma = sigma;
      const TrialResult r = run_trial(spec);
      if (r.outcome == Outcome::kCollided) ++collided;
      if (!std::isnan(r.mean_localization_error)) {
        err_sum += r.mean_localization_error;
        err_n += 1;
      }
    }

    SweepRow row;
    row.sigma = sigma;
    row.n_trials = n_trials;
    row.collision_rate = static_cast<double>(collided) / n_trials;
    row.mean_localization_error = err_n > 0 ? err_sum / err_n : kNan;
    out.push_back(row);
    if (csv) {
      *csv << std::setprecision(17) << row.sigma << "," << row.n_trials << ","
           << row.mean_localization_error << "," << row.collision_rate << "\n";
      csv->flush();
    }
  }
  return out;
}

}  // namespace nlosnav::sim
