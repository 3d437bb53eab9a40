#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nlosnav/nav.hpp"
#include "nlosnav/percept.hpp"
#include "nlosnav/rng.hpp"

namespace nlosnav::percept {

namespace {

// Robot protocol: fixed capture poses spaced along the approach arm.
std::vector<world::Pose2> corridor_sensor_poses(int n) {
  std::vector<world::Pose2> poses;
  if (n == 1) {
    poses.emplace_back(0.9, 1.0, 0.0);
    return poses;
  }
  for (int i = 0; i < n; ++i) {
    poses.emplace_back(0.4 + 1.0 * i / (n - 1), 1.0, 0.0);
  }
  return poses;
}

// Vehicle protocol: poses sampled along the path a privileged controller
// would drive (ground-truth object occupancy), spread over the approach and
// the corner.
std::vector<world::Pose2> lturn_trajectory_poses(const world::Scene& scene,
                                                 int n) {
  world::OccupancyGrid grid = world::rasterize_static(scene, 0.5);
  if (scene.object) {
    for (const auto& c : world::object_footprint_cells(
             grid, *scene.object, scene.footprint_radius)) {
      grid.at(c.cx, c.cy) = world::CellState::kOccupied;
    }
  }
  nav::PathPlan plan =
      nav::build_plan(grid, scene.start.position(), scene.goal);
  std::vector<world::Pose2> poses;
  const double total = plan.length();
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.3 : 0.05 + 0.60 * i / (n - 1);
    const double s = frac * total;
    size_t k = 0;
    while (k + 1 < plan.cum_len.size() && plan.cum_len[k + 1] < s) ++k;
    const Vec2 p = plan.samples[k];
    const Vec2 q = plan.samples[std::min(k + 1, plan.samples.size() - 1)];
    const double yaw = (q - p).norm() > 1e-9 ? std::atan2(q.y - p.y, q.x - p.x)
                                             : scene.start.yaw;
    poses.emplace_back(p.x, p.y, yaw);
  }
  return poses;
}

}  // namespace

std::vector<TrainingSample> generate_dataset(world::Scale scene_family,
                                             int n_object_poses,
                                             int n_sensor_poses,
                                             const transient::SensorConfig& config,
                                             uint64_t seed) {
  if (n_object_poses < 1 || n_sensor_poses < 1) {
    throw std::invalid_argument("pose counts must be at least 1");
  }
  const world::Scene base = world::build_lturn_scene(scene_family);
  std::vector<TrainingSample> out;
  out.reserve(static_cast<size_t>(n_object_poses) * n_sensor_poses);

  for (int oi = 0; oi < n_object_poses; ++oi) {
    const world::Pose2 obj_pose =
        world::sample_hidden_pose(base, mix_seed(seed, 0x6f626au + oi));
    world::Scene scene = base;
    scene.object = world::default_hidden_object(scene_family, obj_pose);

    const std::vector<world::Pose2> sensor_poses =
        scene_family == world::Scale::kRobot
            ? corridor_sensor_poses(n_sensor_poses)
            : lturn_trajectory_poses(scene, n_sensor_poses);

    for (int si = 0; si < n_sensor_poses; ++si) {
      TrainingSample s;
      s.robot_pose = sensor_poses[si];
      s.target = obj_pose;
      s.frame = transient::capture(
          scene, s.robot_pose, config,
          mix_seed(mix_seed(seed, oi), 0x73656e73u + si));
      s.frame.capture_time = 0.0;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void save_dataset(const std::vector<TrainingSample>& dataset,
                  const std::string& dir, uint64_t hash) {
  std::filesystem::create_directories(dir);
  std::vector<transient::HistogramFrame> frames;
  std::vector<world::Pose2> robot_poses;
  frames.reserve(dataset.size());
  robot_poses.reserve(dataset.size());
  for (const TrainingSample& s : dataset) {
    frames.push_back(s.frame);
    robot_poses.push_back(s.robot_pose);
  }
  transient::write_frames_csv(dir + "/frames.csv", frames, robot_poses, hash);

  std::ofstream out(dir + "/manifest.csv");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << std::setprecision(17);
  out << "sample_id,robot_x,robot_y,robot_yaw,target_x,target_y,target_yaw\n";
  for (size_t i = 0; i < dataset.size(); ++i) {
    const TrainingSample& s = dataset[i];
    out << i << "," << s.robot_pose.x << "," << s.robot_pose.y << ","
        << s.robot_pose.yaw << "," << s.target.x << "," << s.target.y << ","
        << s.target.yaw << "\n";
  }
}

std::vector<TrainingSample> load_dataset(const std::string& dir,
                                         uint64_t* hash_out) {
  auto records = transient::read_frames_csv(dir + "/frames.csv", hash_out);
  std::ifstream in(dir + "/manifest.csv");
  if (!in) throw std::runtime_error("cannot open manifest in " + dir);
  std::string line;
  std::getline(in, line);  // header
  std::vector<TrainingSample> out;
  out.reserve(records.size());
  size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    std::getline(ss, cell, ',');  // sample_id
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 6 || i >= records.size()) {
      throw std::runtime_error("manifest/frames mismatch in " + dir);
    }
    TrainingSample s;
    s.frame = std::move(records[i].frame);
    s.robot_pose = world::Pose2(vals[0], vals[1], vals[2]);
    s.target = world::Pose2(vals[3], vals[4], vals[5]);
    out.push_back(std::move(s));
    ++i;
  }
  if (i != records.size()) throw std::runtime_error("manifest shorter than frames");
  return out;
}

}  // namespace nlosnav::percept
