#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlosnav/geom.hpp"

namespace nlosnav::world {

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // wrapped to (-pi, pi]

  Pose2() = default;
  Pose2(double px, double py, double pyaw) : x(px), y(py), yaw(wrap_angle(pyaw)) {}
  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return {std::cos(yaw), std::sin(yaw)}; }
};

// A vertical wall in the 2.5-D world: a 2-D segment extruded to wall_height.
struct Segment {
  Vec2 a;
  Vec2 b;
  double albedo = 0.5;    // in [0, 1]
  bool is_relay = false;  // participates in three-bounce relaying

  Vec2 dir() const { return (b - a).normalized(); }
  double length() const { return distance(a, b); }
};

struct HiddenObject {
  Pose2 pose;
  double half_length = 0.15;       // m, along heading
  double half_width = 0.075;       // m
  double reflectivity_gain = 20.0; // retro-reflective boost over Lambertian

  OrientedRect footprint() const {
    return {pose.position(), pose.yaw, half_length, half_width};
  }
};

enum class Scale { kVehicle, kRobot };

struct Scene {
  std::vector<Segment> segments;
  std::optional<HiddenObject> object;
  Aabb bounds;
  Vec2 goal;
  Pose2 start;

  // Scenario metadata (documented in the scene JSON schema).
  Polygon hidden_region;        // where the hidden object may be placed
  double wall_height = 2.5;     // m, extrusion of all segments
  double floor_albedo = 0.5;    // 0 disables the floor as a surface
  double footprint_radius = 0.2;  // robot/vehicle body disk, also wall inflation
  Scale scale = Scale::kRobot;
};

enum class CellState : uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

struct GridCell {
  int cx = 0;
  int cy = 0;
  bool operator==(const GridCell&) const = default;
};

struct OccupancyGrid {
  Vec2 origin;             // world position of cell (0,0)'s lower-left corner
  double resolution = 0.1; // m per cell
  int width = 0;
  int height = 0;
  std::vector<CellState> cells;  // row-major, index cy * width + cx

  CellState at(int cx, int cy) const { return cells[cy * width + cx]; }
  CellState& at(int cx, int cy) { return cells[cy * width + cx]; }
  bool in_grid(int cx, int cy) const {
    return cx >= 0 && cx < width && cy >= 0 && cy < height;
  }
  bool is_free(int cx, int cy) const {
    return in_grid(cx, cy) && at(cx, cy) == CellState::kFree;
  }
  Vec2 cell_center(int cx, int cy) const {
    return {origin.x + (cx + 0.5) * resolution, origin.y + (cy + 0.5) * resolution};
  }
  GridCell cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
            static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }
};

struct InvalidObjectPose : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoHiddenRegion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// L-turn street (kVehicle, 50x50 m, inner corner radius 15 m) or L-corridor
// (kRobot, 2 m arms inside 5x5 m). The region past the corner is hidden from
// the start pose. Throws InvalidObjectPose if object_pose lies outside the
// scene's hidden region.
Scene build_lturn_scene(Scale scale,
                        const std::optional<Pose2>& object_pose = std::nullopt);

// Default hidden-object dimensions for a scale (cyclist-sized box for the
// vehicle scenes, arrow target for the robot corridor).
HiddenObject default_hidden_object(Scale scale, const Pose2& pose);

// Uniform pose over the hidden region, yaw uniform in (-pi, pi].
Pose2 sample_hidden_pose(const Scene& scene, uint64_t rng_seed);

// True iff the open segment pq crosses no wall segment.
bool is_los_visible(const Scene& scene, const Vec2& p, const Vec2& q);

// Static occupancy: cells whose center lies within scene.footprint_radius of
// any wall segment are OCCUPIED; everything else FREE. The hidden object is
// not rasterized here; it enters through perception.
OccupancyGrid rasterize_static(const Scene& scene, double resolution);
OccupancyGrid rasterize_static(const Scene& scene, double resolution,
                               double inflation);

// Disk-vs-scene collision, tangency included. Checks wall segments and the
// hidden object footprint.
bool footprint_collides(const Scene& scene, const Pose2& pose,
                        double footprint_radius);

// Cells covered by the object footprint inflated by `inflation` (for the
// line-of-sight baseline and the privileged controller).
std::vector<GridCell> object_footprint_cells(const OccupancyGrid& grid,
                                             const HiddenObject& object,
                                             double inflation);

// Scene JSON round trip (schema documented in the README).
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
Scene load_scene(const std::string& path);
void save_scene(const Scene& scene, const std::string& path);

}  // namespace nlosnav::world
