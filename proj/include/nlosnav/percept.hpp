#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlosnav/transient.hpp"
#include "nlosnav/world.hpp"

namespace nlosnav::percept {

struct ModelShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  int epoch = -1;
  DivergenceError(const std::string& what, int ep)
      : std::runtime_error(what), epoch(ep) {}
};

struct TrainingSample {
  transient::HistogramFrame frame;
  world::Pose2 robot_pose;
  world::Pose2 target;  // hidden object x, y, yaw
};

struct ObjectEstimate {
  double x_hat = 0.0;
  double y_hat = 0.0;
  double yaw_hat = 0.0;
  double uncertainty_radius = 0.0;
  bool low_confidence = false;  // set by the oracle when no object is evident
};

// Network shape: two 1-D convolutions over the time axis (zones as input
// channels), then two dense layers on the flattened features concatenated
// with the normalized robot pose. Output is (x, y, cos yaw, sin yaw) in
// normalized coordinates.
struct ModelSpec {
  int zones_x = 3;
  int zones_y = 3;
  int n_bins = 128;
  int pose_dim = 3;
  int conv1_ch = 16;
  int conv1_k = 7;
  int conv1_stride = 3;
  int conv2_ch = 32;
  int conv2_k = 5;
  int conv2_stride = 3;
  int hidden = 128;
  // Affine normalization of poses/targets: (x - cx) / hx, (y - cy) / hy.
  double cx = 0.0, cy = 0.0, hx = 1.0, hy = 1.0;
  uint64_t config_hash = 0;

  int in_ch() const { return zones_x * zones_y; }
  int conv1_out_len() const { return (n_bins - conv1_k) / conv1_stride + 1; }
  int conv2_out_len() const {
    return (conv1_out_len() - conv2_k) / conv2_stride + 1;
  }
  int flat_len() const { return conv2_ch * conv2_out_len(); }
  int fc1_in() const { return flat_len() + pose_dim; }
  size_t param_count() const;
  void validate() const;  // throws ModelShapeError if layers do not chain
};

struct CnnModel {
  ModelSpec spec;
  std::vector<double> params;  // conv1 w,b | conv2 w,b | fc1 w,b | fc2 w,b
};

CnnModel make_model(const ModelSpec& spec, uint64_t seed);

// Input featurization shared by training and inference: counts divided by
// the frame max, pose mapped through the spec's affine normalization.
std::vector<double> normalize_frame(const ModelSpec& spec,
                                    const transient::HistogramFrame& frame);
std::array<double, 3> normalize_pose(const ModelSpec& spec,
                                     const world::Pose2& pose);
std::array<double, 4> encode_target(const ModelSpec& spec,
                                    const world::Pose2& target);

ObjectEstimate cnn_forward(const CnnModel& model,
                           const transient::HistogramFrame& frame,
                           const world::Pose2& robot_pose);

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> eval_loss;   // per epoch (on the held-out split)
};

// Mini-batch SGD with momentum 0.9 on the mean squared error of the encoded
// target. The dataset is split 80/20 by a seeded permutation; both losses
// are recorded per epoch. Throws DivergenceError on a non-finite loss.
TrainResult train(CnnModel& model, const std::vector<TrainingSample>& dataset,
                  int batch_size, double learning_rate, int epochs,
                  uint64_t seed);

// Indices of the train/eval split used by train() for a given seed.
void split_dataset(size_t n, uint64_t seed, std::vector<size_t>* train_idx,
                   std::vector<size_t>* eval_idx);

// Max relative error between analytic gradients and central finite
// differences of the loss for one sample; model must stay small.
double gradient_check(const CnnModel& model, const TrainingSample& sample);

struct SceneFamilyTag {
  world::Scale scale;
};

// Cartesian product of sampled hidden-object poses and approach sensor
// poses, frames rendered with exposure averaging. Deterministic per seed.
std::vector<TrainingSample> generate_dataset(world::Scale scene_family,
                                             int n_object_poses,
                                             int n_sensor_poses,
                                             const transient::SensorConfig& config,
                                             uint64_t seed);

// Expected frames rendered for every candidate pose on a grid over the
// hidden region (8 yaw values per position). Reusable across captures taken
// from the same sensor pose.
struct CandidateBank {
  std::vector<world::Pose2> poses;
  std::vector<transient::ExpectedFrame> frames;
  transient::ExpectedFrame no_object;  // static-scene expectation
};

CandidateBank build_candidate_bank(const world::Scene& static_scene,
                                   const world::Pose2& sensor_vehicle_pose,
                                   double candidate_grid_step,
                                   const transient::SensorConfig& config);

ObjectEstimate oracle_localize(const CandidateBank& bank,
                               const transient::HistogramFrame& frame,
                               double uncertainty_radius);

ObjectEstimate oracle_localize(const world::Scene& static_scene,
                               const transient::HistogramFrame& frame,
                               const world::Pose2& sensor_vehicle_pose,
                               double candidate_grid_step,
                               const transient::SensorConfig& config,
                               double uncertainty_radius = 0.0);

// Copy of the grid with every cell within uncertainty_radius of the estimate
// marked OCCUPIED (plus the cell containing the estimate itself).
world::OccupancyGrid estimate_to_occupancy(const ObjectEstimate& estimate,
                                           const world::OccupancyGrid& static_grid);

// Mean Euclidean position error of a series of estimates against the truth.
double localization_error(const std::vector<ObjectEstimate>& estimates,
                          const world::Pose2& truth);

// Model file round trip (flat parameter list with a shape header and config
// hash; loading validates shape chaining).
void save_model(const CnnModel& model, const std::string& path);
CnnModel load_model(const std::string& path);

// Dataset directory round trip: frames.csv plus manifest.csv.
void save_dataset(const std::vector<TrainingSample>& dataset,
                  const std::string& dir, uint64_t hash);
std::vector<TrainingSample> load_dataset(const std::string& dir,
                                         uint64_t* hash_out = nullptr);

}  // namespace nlosnav::percept
