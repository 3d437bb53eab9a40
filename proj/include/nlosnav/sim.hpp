#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlosnav/nav.hpp"
#include "nlosnav/percept.hpp"
#include "nlosnav/transient.hpp"
#include "nlosnav/world.hpp"

namespace nlosnav::sim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotComparable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { kLos, kNlos, kPrivileged };
enum class Estimator { kCnn, kOracle };
enum class Outcome { kCollided, kReachedGoal, kTimedOut };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct TrialSpec {
  world::Scene scene;
  Mode mode = Mode::kNlos;
  Estimator estimator = Estimator::kOracle;
  const percept::CnnModel* model = nullptr;  // required for kCnn
  double oracle_grid_step = 0.4;
  transient::SensorConfig sensor;
  nav::VehicleParams vehicle;
  nav::Gains gains;  // v_ref is overwritten from the field below
  double v_ref = 1.0;
  uint64_t seed = 0;
  double dt = 0.02;
  double sensor_period = 0.1;
  double timeout = 0.0;  // <= 0: 3 * (straight-line distance / v_ref) + 20
  std::optional<double> localization_noise_sigma;
  double grid_resolution = 0.5;
  double uncertainty_radius = 1.0;  // perception radius for estimates
  int bezier_segment_len = 4;
};

struct TraceRow {
  double t = 0.0;
  nav::VehicleState state;
  std::optional<percept::ObjectEstimate> estimate;
  int plan_id = -1;
};

struct TrialResult {
  Outcome outcome = Outcome::kTimedOut;
  bool collided = false;
  bool reached_goal = false;
  bool timed_out = false;
  double travel_time = 0.0;
  double trajectory_length = 0.0;
  double mean_localization_error = 0.0;  // NaN when no estimates were made
  std::vector<TraceRow> trace;
};

// Sense -> perceive -> plan -> act loop at dt, captures every sensor_period.
// Deterministic per spec + seed.
TrialResult run_trial(const TrialSpec& spec);

// Per-family bundles of the scene and the configs the paper's experiments
// imply; campaign and CLI defaults start from these.
struct ScenarioDefaults {
  world::Scene scene;  // no object placed
  transient::SensorConfig sensor;
  nav::VehicleParams vehicle;
  nav::Gains gains;
  double grid_resolution = 0.5;
  double uncertainty_radius = 1.0;
  double dt = 0.02;
  double sensor_period = 0.1;
  double oracle_grid_step = 0.4;
};

ScenarioDefaults scenario_defaults(world::Scale family);

struct CampaignConfig {
  world::Scale family = world::Scale::kVehicle;
  std::vector<Mode> modes = {Mode::kLos, Mode::kNlos};
  int n_trials = 200;
  double speed_lo = 7.0;
  double speed_hi = 12.0;
  uint64_t seed = 1;
  Estimator estimator = Estimator::kCnn;
  const percept::CnnModel* model = nullptr;
  ScenarioDefaults defaults;  // scenario_defaults(family) unless overridden
};

struct CampaignRow {
  int trial = 0;
  Mode mode = Mode::kLos;
  uint64_t seed = 0;
  double v_ref = 0.0;
  world::Pose2 object_pose;
  Outcome outcome = Outcome::kTimedOut;
  double travel_time = 0.0;
  double trajectory_length = 0.0;
  double mean_localization_error = 0.0;
};

// Object pose and v_ref are drawn from the pair seed, so every mode of trial
// i sees the same world. Rows stream to `csv` in trial order when given.
std::vector<CampaignRow> run_campaign(const CampaignConfig& config,
                                      std::ostream* csv = nullptr);

void write_campaign_csv_header(std::ostream& out);
void write_campaign_row(std::ostream& out, const CampaignRow& row);
std::vector<CampaignRow> read_campaign_csv(const std::string& path);

struct RateBin {
  double lo = 0.0;
  double hi = 0.0;
  Mode mode = Mode::kLos;
  int n = 0;
  double rate = 0.0;  // fraction of collided trials
};

// Collision rate per speed bin per mode; empty bins are absent from the
// output, not reported as zero.
std::vector<RateBin> collision_rate_by_speed(const std::vector<CampaignRow>& rows,
                                             const std::vector<double>& bin_edges);

struct EfficiencyReport {
  double time_ratio = 0.0;    // los / nlos
  double length_ratio = 0.0;  // los / nlos
};

// Throws NotComparable unless both trials reached the goal.
EfficiencyReport efficiency_report(const TrialResult& los,
                                   const TrialResult& nlos);

struct SweepRow {
  double sigma = 0.0;
  int n_trials = 0;
  double mean_localization_error = 0.0;
  double collision_rate = 0.0;
};

// NLOS trials with injected isotropic position noise per sigma; trial worlds
// are shared across sigmas so rates are comparable down the column.
std::vector<SweepRow> localization_sweep(const CampaignConfig& config,
                                         const std::vector<double>& sigmas,
                                         int n_trials, double v_ref,
                                         uint64_t seed,
                                         std::ostream* csv = nullptr);

}  // namespace nlosnav::sim
