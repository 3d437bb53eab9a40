#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlosnav/geom.hpp"
#include "nlosnav/world.hpp"

namespace nlosnav::transient {

// Deterministic stratified sampling densities for the quadrature over
// surfaces. Doubling these roughly quadruples relay samples per surface.
struct SamplingConfig {
  int relay_u = 32;            // samples along a surface (or floor x)
  int relay_v = 32;            // samples across wall height (or floor y)
  int object_boundary = 64;    // samples around the object footprint
  double object_height = 0.3;  // m, vertical extent of the hidden object
};

// Sensor mount relative to the vehicle body frame.
struct MountConfig {
  double dx = 0.0;
  double dy = 0.0;
  double dyaw = 0.0;
  double height = 0.25;  // m above the floor
  double pitch = 0.0;    // radians, positive pitches the boresight down
};

struct SensorConfig {
  int zones_x = 3;
  int zones_y = 3;
  double fov_h = deg2rad(41.0);
  double fov_v = deg2rad(52.0);
  int n_bins = 128;
  double max_path = 10.0;  // m, total optical path budget
  MountConfig mount;
  double photon_scale = 1.0;  // expected photons per unit throughput
  double ambient_rate = 0.05; // expected ambient photons per bin
  int exposures = 10;
  SamplingConfig sampling;

  int n_zones() const { return zones_x * zones_y; }
  double bin_width() const { return max_path / n_bins; }
};

SensorConfig robot_sensor_defaults();
SensorConfig vehicle_sensor_defaults();

// Stable hash of the fields that determine frame shape and photon statistics;
// embedded in dataset and model files to catch mismatched pipelines.
uint64_t config_hash(const SensorConfig& config);

struct ExpectedFrame {
  int zones_x = 0;
  int zones_y = 0;
  int n_bins = 0;
  std::vector<double> lambda;  // index (row * zones_x + col) * n_bins + bin
  world::Pose2 sensor_pose;    // sensor origin in the world, planar part

  double& at(int zone, int bin) { return lambda[zone * n_bins + bin]; }
  double at(int zone, int bin) const { return lambda[zone * n_bins + bin]; }
  double total() const;
};

struct HistogramFrame {
  int zones_x = 0;
  int zones_y = 0;
  int n_bins = 0;
  std::vector<double> counts;  // exposure-averaged photon counts
  world::Pose2 sensor_pose;
  double capture_time = 0.0;

  double at(int zone, int bin) const { return counts[zone * n_bins + bin]; }
};

// World-space sensor basis derived from the vehicle pose and the mount.
struct SensorBasis {
  Vec3 origin;
  Vec3 fwd;    // boresight
  Vec3 right;
  Vec3 up;
};

SensorBasis sensor_basis(const world::Pose2& vehicle_pose,
                         const SensorConfig& config);

// Planar pose of the sensor origin (for frame metadata and LOS queries).
world::Pose2 sensor_origin_pose(const world::Pose2& vehicle_pose,
                                const SensorConfig& config);

// Time-of-flight bin for a total path length; nullopt at or past max_path.
std::optional<int> tof_bin(double path_length, const SensorConfig& config);

// Zone (col, row) hit by a unit direction expressed in the sensor basis
// (x right, y up, z boresight); nullopt outside the field of view.
struct ZoneIndex {
  int col = 0;
  int row = 0;
};
std::optional<ZoneIndex> zone_of_direction(const Vec3& dir,
                                           const SensorConfig& config);

// One-bounce expected transient off every visible surface (walls and floor),
// plus ambient_rate in every bin.
ExpectedFrame expected_direct(const world::Scene& scene,
                              const world::Pose2& vehicle_pose,
                              const SensorConfig& config);

// Three-bounce expected transient via relay surfaces and the hidden object.
// Zero frame when the scene has no object. No ambient term.
ExpectedFrame expected_three_bounce(const world::Scene& scene,
                                    const world::Pose2& vehicle_pose,
                                    const SensorConfig& config);

// direct + three-bounce.
ExpectedFrame expected_frame(const world::Scene& scene,
                             const world::Pose2& vehicle_pose,
                             const SensorConfig& config);

// Mean of `exposures` Poisson draws around the expected frame.
HistogramFrame capture(const world::Scene& scene,
                       const world::Pose2& vehicle_pose,
                       const SensorConfig& config, uint64_t rng_seed);

// Noiseless counts equal to the expected frame (oracle and test helper).
HistogramFrame expected_as_frame(const world::Scene& scene,
                                 const world::Pose2& vehicle_pose,
                                 const SensorConfig& config);

// Naive serial implementations kept as the reference for the parallel
// kernels; used by tests and the benchmark, not by the pipeline.
namespace reference {
ExpectedFrame expected_direct(const world::Scene& scene,
                              const world::Pose2& vehicle_pose,
                              const SensorConfig& config);
ExpectedFrame expected_three_bounce(const world::Scene& scene,
                                    const world::Pose2& vehicle_pose,
                                    const SensorConfig& config);
}  // namespace reference

// Frame dump format: one CSV row per capture with poses, config hash and the
// flattened counts array.
void write_frames_csv(const std::string& path,
                      const std::vector<HistogramFrame>& frames,
                      const std::vector<world::Pose2>& robot_poses,
                      uint64_t hash);
struct FrameRecord {
  HistogramFrame frame;
  world::Pose2 robot_pose;
};
std::vector<FrameRecord> read_frames_csv(const std::string& path,
                                         uint64_t* hash_out = nullptr);

}  // namespace nlosnav::transient
