#include "nlosnav/world.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nlosnav/rng.hpp"

namespace nlosnav::world {

namespace {

void add_wall(Scene& s, Vec2 a, Vec2 b, double albedo = 0.5) {
  Segment seg;
  seg.a = a;
  seg.b = b;
  seg.albedo = albedo;
  seg.is_relay = true;
  s.segments.push_back(seg);
}

// Polyline approximation of a circular arc from angle a0 to a1 (radians).
void add_arc(Scene& s, Vec2 center, double radius, double a0, double a1,
             int pieces, double albedo = 0.5) {
  for (int i = 0; i < pieces; ++i) {
    double t0 = a0 + (a1 - a0) * i / pieces;
    double t1 = a0 + (a1 - a0) * (i + 1) / pieces;
    add_wall(s, {center.x + radius * std::cos(t0), center.y + radius * std::sin(t0)},
             {center.x + radius * std::cos(t1), center.y + radius * std::sin(t1)},
             albedo);
  }
}

Scene vehicle_lturn() {
  Scene s;
  s.scale = Scale::kVehicle;
  s.bounds = {{0.0, 0.0}, {50.0, 50.0}};
  s.wall_height = 2.5;
  s.floor_albedo = 0.3;
  s.footprint_radius = 1.0;
  // Vertical street x in [5,15], horizontal street y in [35,45].
  add_wall(s, {5.0, 0.0}, {5.0, 45.0});     // west outer
  add_wall(s, {5.0, 45.0}, {45.0, 45.0});   // north outer (main relay)
  add_wall(s, {45.0, 35.0}, {45.0, 45.0});  // east cap behind the goal
  add_wall(s, {5.0, 0.0}, {15.0, 0.0});     // south cap behind the start
  add_wall(s, {15.0, 0.0}, {15.0, 20.0});   // inner, approach side
  add_arc(s, {30.0, 20.0}, 15.0, kPi, kPi / 2.0, 12);  // inner corner, r = 15
  add_wall(s, {30.0, 35.0}, {45.0, 35.0});  // inner, exit side
  s.start = Pose2(10.0, 4.0, kPi / 2.0);
  s.goal = {42.0, 40.0};
  s.hidden_region.pts = {{24.0, 36.5}, {40.0, 36.5}, {40.0, 43.5}, {24.0, 43.5}};
  return s;
}

Scene robot_corridor() {
  Scene s;
  s.scale = Scale::kRobot;
  s.bounds = {{-0.25, -0.25}, {4.25, 4.25}};
  s.wall_height = 2.5;
  s.floor_albedo = 0.5;
  s.footprint_radius = 0.2;
  // Approach arm x in [0,4], y in [0,2]; exit arm x in [2,4], y in [0,4].
  add_wall(s, {0.0, 0.0}, {4.0, 0.0});  // south outer
  add_wall(s, {4.0, 0.0}, {4.0, 4.0});  // east outer (main relay)
  add_wall(s, {0.0, 0.0}, {0.0, 2.0});  // west cap behind the start
  add_wall(s, {0.0, 2.0}, {2.0, 2.0});  // inner, approach side
  add_wall(s, {2.0, 2.0}, {2.0, 4.0});  // inner, exit side
  add_wall(s, {2.0, 4.0}, {4.0, 4.0});  // north cap behind the goal
  s.start = Pose2(0.5, 1.0, 0.0);
  s.goal = {3.0, 3.6};
  s.hidden_region.pts = {{2.2, 2.2}, {3.8, 2.2}, {3.8, 3.2}, {2.2, 3.2}};
  return s;
}

}  // namespace

HiddenObject default_hidden_object(Scale scale, const Pose2& pose) {
  HiddenObject o;
  o.pose = pose;
  if (scale == Scale::kVehicle) {
    o.half_length = 1.0;  // cyclist-sized bounding box, 2 m long
    o.half_width = 0.3;
  } else {
    o.half_length = 0.15;
    o.half_width = 0.075;
  }
  o.reflectivity_gain = 20.0;
  return o;
}

Scene build_lturn_scene(Scale scale, const std::optional<Pose2>& object_pose) {
  Scene s = scale == Scale::kVehicle ? vehicle_lturn() : robot_corridor();
  if (object_pose) {
    if (!s.hidden_region.contains(object_pose->position())) {
      throw InvalidObjectPose("object pose outside the hidden region");
    }
    s.object = default_hidden_object(scale, *object_pose);
  }
  return s;
}

Pose2 sample_hidden_pose(const Scene& scene, uint64_t rng_seed) {
  if (scene.hidden_region.empty()) {
    throw NoHiddenRegion("scene has no hidden region");
  }
  Rng rng(mix_seed(rng_seed, 0x68696464u));
  Aabb box = scene.hidden_region.bbox();
  for (int i = 0; i < 100000; ++i) {
    Vec2 p{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y)};
    double yaw = rng.uniform(-kPi, kPi);
    if (scene.hidden_region.contains(p)) {
      return Pose2(p.x, p.y, yaw == -kPi ? kPi : yaw);
    }
  }
  throw NoHiddenRegion("hidden region rejection sampling failed");
}

bool is_los_visible(const Scene& scene, const Vec2& p, const Vec2& q) {
  if (distance(p, q) <= 0.0) return true;
  for (const Segment& seg : scene.segments) {
    if (segment_blocks(p, q, seg.a, seg.b)) return false;
  }
  return true;
}

OccupancyGrid rasterize_static(const Scene& scene, double resolution,
                               double inflation) {
  OccupancyGrid g;
  g.origin = scene.bounds.lo;
  g.resolution = resolution;
  g.width = static_cast<int>(std::ceil(scene.bounds.width() / resolution));
  g.height = static_cast<int>(std::ceil(scene.bounds.height() / resolution));
  g.cells.assign(static_cast<size_t>(g.width) * g.height, CellState::kFree);
  for (int cy = 0; cy < g.height; ++cy) {
    for (int cx = 0; cx < g.width; ++cx) {
      Vec2 c = g.cell_center(cx, cy);
      for (const Segment& seg : scene.segments) {
        if (dist_point_segment(c, seg.a, seg.b) <= inflation) {
          g.at(cx, cy) = CellState::kOccupied;
          break;
        }
      }
    }
  }
  return g;
}

OccupancyGrid rasterize_static(const Scene& scene, double resolution) {
  return rasterize_static(scene, resolution, scene.footprint_radius);
}

bool footprint_collides(const Scene& scene, const Pose2& pose,
                        double footprint_radius) {
  Vec2 p = pose.position();
  for (const Segment& seg : scene.segments) {
    if (dist_point_segment(p, seg.a, seg.b) <= footprint_radius) return true;
  }
  if (scene.object && scene.object->footprint().distance(p) <= footprint_radius) {
    return true;
  }
  return false;
}

std::vector<GridCell> object_footprint_cells(const OccupancyGrid& grid,
                                             const HiddenObject& object,
                                             double inflation) {
  std::vector<GridCell> out;
  OrientedRect rect = object.footprint();
  Aabb box{{1e300, 1e300}, {-1e300, -1e300}};
  for (const Vec2& c : rect.corners()) {
    box.lo.x = std::min(box.lo.x, c.x - inflation);
    box.lo.y = std::min(box.lo.y, c.y - inflation);
    box.hi.x = std::max(box.hi.x, c.x + inflation);
    box.hi.y = std::max(box.hi.y, c.y + inflation);
  }
  GridCell lo = grid.cell_of(box.lo);
  GridCell hi = grid.cell_of(box.hi);
  for (int cy = std::max(lo.cy, 0); cy <= std::min(hi.cy, grid.height - 1); ++cy) {
    for (int cx = std::max(lo.cx, 0); cx <= std::min(hi.cx, grid.width - 1); ++cx) {
      if (rect.distance(grid.cell_center(cx, cy)) <= inflation) {
        out.push_back({cx, cy});
      }
    }
  }
  return out;
}

namespace {

using nlohmann::json;

json vec2_json(const Vec2& v) { return json{{"x", v.x}, {"y", v.y}}; }
Vec2 vec2_from(const json& j) { return {j.at("x").get<double>(), j.at("y").get<double>()}; }

json pose_json(const Pose2& p) {
  return json{{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}};
}
Pose2 pose_from(const json& j) {
  return Pose2(j.at("x").get<double>(), j.at("y").get<double>(),
               j.at("yaw").get<double>());
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  json j;
  j["scale"] = scene.scale == Scale::kVehicle ? "vehicle" : "robot";
  j["bounds"] = {{"lo", vec2_json(scene.bounds.lo)}, {"hi", vec2_json(scene.bounds.hi)}};
  j["start"] = pose_json(scene.start);
  j["goal"] = vec2_json(scene.goal);
  j["wall_height"] = scene.wall_height;
  j["floor_albedo"] = scene.floor_albedo;
  j["footprint_radius"] = scene.footprint_radius;
  j["segments"] = json::array();
  for (const Segment& s : scene.segments) {
    j["segments"].push_back(json{{"a", vec2_json(s.a)},
                                 {"b", vec2_json(s.b)},
                                 {"albedo", s.albedo},
                                 {"is_relay", s.is_relay}});
  }
  j["hidden_region"] = json::array();
  for (const Vec2& p : scene.hidden_region.pts) j["hidden_region"].push_back(vec2_json(p));
  if (scene.object) {
    j["object"] = json{{"pose", pose_json(scene.object->pose)},
                       {"half_length", scene.object->half_length},
                       {"half_width", scene.object->half_width},
                       {"reflectivity_gain", scene.object->reflectivity_gain}};
  }
  return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
  json j = json::parse(text);
  Scene s;
  s.scale = j.at("scale").get<std::string>() == "vehicle" ? Scale::kVehicle
                                                          : Scale::kRobot;
  s.bounds = {vec2_from(j.at("bounds").at("lo")), vec2_from(j.at("bounds").at("hi"))};
  s.start = pose_from(j.at("start"));
  s.goal = vec2_from(j.at("goal"));
  s.wall_height = j.value("wall_height", 2.5);
  s.floor_albedo = j.value("floor_albedo", 0.5);
  s.footprint_radius = j.value("footprint_radius", 0.2);
  for (const json& sj : j.at("segments")) {
    Segment seg;
    seg.a = vec2_from(sj.at("a"));
    seg.b = vec2_from(sj.at("b"));
    seg.albedo = sj.value("albedo", 0.5);
    seg.is_relay = sj.value("is_relay", false);
    s.segments.push_back(seg);
  }
  if (j.contains("hidden_region")) {
    for (const json& pj : j.at("hidden_region")) s.hidden_region.pts.push_back(vec2_from(pj));
  }
  if (j.contains("object")) {
    HiddenObject o;
    o.pose = pose_from(j.at("object").at("pose"));
    o.half_length = j.at("object").value("half_length", 0.15);
    o.half_width = j.at("object").value("half_width", 0.075);
    o.reflectivity_gain = j.at("object").value("reflectivity_gain", 20.0);
    s.object = o;
  }
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json(ss.str());
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out << scene_to_json(scene) << "\n";
}

}  // namespace nlosnav::world
