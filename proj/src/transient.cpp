#include "nlosnav/transient.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nlosnav/rng.hpp"

namespace nlosnav::transient {

namespace {

constexpr double kEps = 1e-12;

// Occluder segments for visibility tests: walls plus (when present) the
// hidden object's footprint edges. Rays never clear a wall vertically in the
// 2.5-D model, so occlusion reduces to 2-D segment crossing.
struct Occluders {
  std::vector<std::pair<Vec2, Vec2>> segs;
};

Occluders build_occluders(const world::Scene& scene, bool include_object) {
  Occluders occ;
  occ.segs.reserve(scene.segments.size() + 4);
  for (const world::Segment& s : scene.segments) occ.segs.push_back({s.a, s.b});
  if (include_object && scene.object) {
    auto c = scene.object->footprint().corners();
    for (int i = 0; i < 4; ++i) occ.segs.push_back({c[i], c[(i + 1) % 4]});
  }
  return occ;
}

bool visible2d(const Occluders& occ, const Vec2& p, const Vec2& q) {
  for (const auto& [a, b] : occ.segs) {
    if (segment_blocks(p, q, a, b)) return false;
  }
  return true;
}

// One quadrature point on a wall, the floor, or the object boundary.
struct SurfacePoint {
  Vec3 p;
  Vec3 n;
  double albedo = 0.0;
  double area = 0.0;
};

// Relay/visible-surface samples with the sensor-side factors precomputed.
struct SensorSidePoints {
  std::vector<Vec3> p;
  std::vector<Vec3> n;
  std::vector<double> g;     // albedo * cos_s * cos_w * dA / r^2
  std::vector<double> r;     // sensor leg length
  std::vector<double> rsq;
  std::vector<int> zone;
  size_t size() const { return p.size(); }
};

int flat_zone(const ZoneIndex& z, const SensorConfig& c) {
  return z.row * c.zones_x + z.col;
}

// Clips segment [a,b] to the horizontal field-of-view wedge around the
// sensor plus the max-range disk. Returns false if nothing remains. A small
// angular margin keeps boundary samples for the exact per-sample test.
bool clip_to_wedge(const Vec2& s, double bearing, double half_fov, double range,
                   const Vec2& a, const Vec2& b, Vec2* ca, Vec2* cb) {
  double lo = 0.0, hi = 1.0;
  const double margin = deg2rad(2.0);
  const Vec2 d = b - a;
  // Half-plane constraints cross(dir_right, w - s) >= 0 and
  // cross(w - s, dir_left) >= 0 for the wedge boundaries.
  const Vec2 dl{std::cos(bearing + half_fov + margin), std::sin(bearing + half_fov + margin)};
  const Vec2 dr{std::cos(bearing - half_fov - margin), std::sin(bearing - half_fov - margin)};
  auto clip_halfplane = [&](auto value_at) {
    double va = value_at(0.0), vb = value_at(1.0);
    if (va < 0.0 && vb < 0.0) return false;
    if (va < 0.0 || vb < 0.0) {
      double t = va / (va - vb);
      if (va < 0.0) lo = std::max(lo, t);
      else hi = std::min(hi, t);
    }
    return true;
  };
  auto wa = a - s;
  if (!clip_halfplane([&](double t) { return dr.cross(wa + d * t); })) return false;
  if (!clip_halfplane([&](double t) { return (wa + d * t).cross(dl); })) return false;
  // Range disk |wa + d t| <= range.
  double A = d.norm_sq();
  if (A > kEps) {
    double B = 2.0 * wa.dot(d);
    double C = wa.norm_sq() - range * range;
    double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return false;
    double sq = std::sqrt(disc);
    lo = std::max(lo, (-B - sq) / (2.0 * A));
    hi = std::min(hi, (-B + sq) / (2.0 * A));
  } else if (wa.norm_sq() > range * range) {
    return false;
  }
  if (hi - lo < 1e-9) return false;
  *ca = a + d * lo;
  *cb = a + d * hi;
  return true;
}

// Stratified quadrature points over every requested surface, clipped to the
// sensor frustum where that is cheap to do exactly.
std::vector<SurfacePoint> sample_surfaces(const world::Scene& scene,
                                          const SensorBasis& basis,
                                          const SensorConfig& config,
                                          bool relay_only) {
  std::vector<SurfacePoint> out;
  const Vec2 s2 = basis.origin.xy();
  const double bearing = std::atan2(basis.fwd.y, basis.fwd.x);
  const double range = config.max_path * 0.5;
  const int nu = config.sampling.relay_u;
  const int nv = config.sampling.relay_v;

  for (const world::Segment& seg : scene.segments) {
    if (relay_only && !seg.is_relay) continue;
    if (seg.albedo <= 0.0) continue;
    Vec2 ca, cb;
    if (!clip_to_wedge(s2, bearing, config.fov_h * 0.5, range, seg.a, seg.b, &ca, &cb)) {
      continue;
    }
    const Vec2 d2 = cb - ca;
    const double len = d2.norm();
    if (len < kEps) continue;
    const double da = len * scene.wall_height / (nu * nv);
    const Vec2 perp = seg.dir().perp();
    for (int iu = 0; iu < nu; ++iu) {
      Vec2 w2 = ca + d2 * ((iu + 0.5) / nu);
      // Normal sign: the face toward the sensor is the lit one.
      Vec2 n2 = perp;
      if (n2.dot(s2 - w2) < 0.0) n2 = n2 * -1.0;
      for (int iv = 0; iv < nv; ++iv) {
        SurfacePoint sp;
        sp.p = {w2.x, w2.y, scene.wall_height * (iv + 0.5) / nv};
        sp.n = {n2.x, n2.y, 0.0};
        sp.albedo = seg.albedo;
        sp.area = da;
        out.push_back(sp);
      }
    }
  }

  if (scene.floor_albedo > 0.0) {
    // Bounding box of the frustum's floor footprint: corner/edge rays hit the
    // floor plane or get capped at the range limit.
    Aabb box{{1e300, 1e300}, {-1e300, -1e300}};
    bool any = false;
    for (double fh : {-0.5, 0.0, 0.5}) {
      for (double fv : {-0.5, 0.0, 0.5}) {
        Vec3 dir = (basis.fwd + basis.right * std::tan(fh * config.fov_h) +
                    basis.up * std::tan(fv * config.fov_v))
                       .normalized();
        Vec2 pt;
        if (dir.z < -1e-9) {
          double t = std::min(basis.origin.z / -dir.z, range);
          pt = basis.origin.xy() + dir.xy() * t;
        } else {
          Vec2 h = dir.xy();
          double hn = h.norm();
          if (hn < kEps) continue;
          pt = basis.origin.xy() + h * (range / hn);
        }
        box.lo.x = std::min(box.lo.x, pt.x);
        box.lo.y = std::min(box.lo.y, pt.y);
        box.hi.x = std::max(box.hi.x, pt.x);
        box.hi.y = std::max(box.hi.y, pt.y);
        any = true;
      }
    }
    if (any) {
      box.lo.x = std::max(box.lo.x, scene.bounds.lo.x);
      box.lo.y = std::max(box.lo.y, scene.bounds.lo.y);
      box.hi.x = std::min(box.hi.x, scene.bounds.hi.x);
      box.hi.y = std::min(box.hi.y, scene.bounds.hi.y);
      if (box.hi.x - box.lo.x > kEps && box.hi.y - box.lo.y > kEps) {
        const double da =
            (box.hi.x - box.lo.x) * (box.hi.y - box.lo.y) / (nu * nv);
        for (int iu = 0; iu < nu; ++iu) {
          for (int iv = 0; iv < nv; ++iv) {
            SurfacePoint sp;
            sp.p = {box.lo.x + (box.hi.x - box.lo.x) * (iu + 0.5) / nu,
                    box.lo.y + (box.hi.y - box.lo.y) * (iv + 0.5) / nv, 0.0};
            sp.n = {0.0, 0.0, 1.0};
            sp.albedo = scene.floor_albedo;
            sp.area = da;
            out.push_back(sp);
          }
        }
      }
    }
  }
  return out;
}

// Filters surface points down to those inside the frustum and visible from
// the sensor, attaching the sensor-side throughput factors.
SensorSidePoints build_sensor_side(const std::vector<SurfacePoint>& pts,
                                   const SensorBasis& basis,
                                   const SensorConfig& config,
                                   const Occluders& occ) {
  SensorSidePoints out;
  const Vec2 s2 = basis.origin.xy();
  for (const SurfacePoint& sp : pts) {
    Vec3 to_w = sp.p - basis.origin;
    double r = to_w.norm();
    if (r < 1e-6) continue;
    Vec3 dir = to_w * (1.0 / r);
    Vec3 in_frame{dir.dot(basis.right), dir.dot(basis.up), dir.dot(basis.fwd)};
    auto zone = zone_of_direction(in_frame, config);
    if (!zone) continue;
    double cos_s = dir.dot(basis.fwd);
    double cos_w = sp.n.dot(to_w * -1.0) * (1.0 / r);
    if (cos_s <= kEps || cos_w <= kEps) continue;
    if (!visible2d(occ, s2, sp.p.xy())) continue;
    out.p.push_back(sp.p);
    out.n.push_back(sp.n);
    out.g.push_back(sp.albedo * cos_s * cos_w * sp.area / (r * r));
    out.r.push_back(r);
    out.rsq.push_back(r * r);
    out.zone.push_back(flat_zone(*zone, config));
  }
  return out;
}

std::vector<SurfacePoint> sample_object_boundary(const world::HiddenObject& obj,
                                                 const SensorConfig& config) {
  std::vector<SurfacePoint> out;
  const OrientedRect rect = obj.footprint();
  const auto corners = rect.corners();
  double perimeter = 0.0;
  std::array<double, 4> edge_len{};
  for (int e = 0; e < 4; ++e) {
    edge_len[e] = distance(corners[e], corners[(e + 1) % 4]);
    perimeter += edge_len[e];
  }
  if (perimeter < kEps) return out;
  const int n = config.sampling.object_boundary;
  const double h = config.sampling.object_height;
  const double da = perimeter * h / n;
  for (int k = 0; k < n; ++k) {
    double arc = perimeter * (k + 0.5) / n;
    int e = 0;
    while (e < 3 && arc > edge_len[e]) arc -= edge_len[e++];
    const Vec2 a = corners[e];
    const Vec2 b = corners[(e + 1) % 4];
    const Vec2 d = (b - a).normalized();
    const Vec2 p2 = a + d * arc;
    const Vec2 n2{d.y, -d.x};  // outward for CCW corner order
    SurfacePoint sp;
    sp.p = {p2.x, p2.y, 0.5 * h};
    sp.n = {n2.x, n2.y, 0.0};
    sp.albedo = obj.reflectivity_gain;
    sp.area = da;
    out.push_back(sp);
  }
  return out;
}

ExpectedFrame make_frame(const world::Pose2& sensor_pose, const SensorConfig& c) {
  ExpectedFrame f;
  f.zones_x = c.zones_x;
  f.zones_y = c.zones_y;
  f.n_bins = c.n_bins;
  f.lambda.assign(static_cast<size_t>(c.n_zones()) * c.n_bins, 0.0);
  f.sensor_pose = sensor_pose;
  return f;
}

}  // namespace

double ExpectedFrame::total() const {
  double s = 0.0;
  for (double v : lambda) s += v;
  return s;
}

SensorConfig robot_sensor_defaults() {
  SensorConfig c;
  c.zones_x = 3;
  c.zones_y = 3;
  c.fov_h = deg2rad(41.0);
  c.fov_v = deg2rad(52.0);
  c.n_bins = 128;
  c.max_path = 10.0;
  c.mount.height = 0.25;
  c.mount.pitch = 0.0;
  c.photon_scale = 1.2e5;
  c.ambient_rate = 0.05;
  c.exposures = 10;
  c.sampling.object_height = 0.3;
  return c;
}

SensorConfig vehicle_sensor_defaults() {
  SensorConfig c;
  c.zones_x = 8;
  c.zones_y = 8;
  c.fov_h = deg2rad(90.0);
  c.fov_v = deg2rad(40.0);
  c.n_bins = 128;
  c.max_path = 100.0;
  c.mount.height = 1.5;
  c.mount.pitch = 0.0;
  c.photon_scale = 2.0e9;
  c.ambient_rate = 0.05;
  c.exposures = 10;
  c.sampling.object_height = 1.8;
  return c;
}

uint64_t config_hash(const SensorConfig& c) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d|%d|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|"
                "%.17g|%d|%d|%d|%d|%.17g",
                c.zones_x, c.zones_y, c.fov_h, c.fov_v, c.n_bins, c.max_path,
                c.mount.dx, c.mount.dy, c.mount.dyaw, c.mount.height,
                c.mount.pitch, c.photon_scale, c.ambient_rate, c.exposures,
                c.sampling.relay_u, c.sampling.relay_v,
                c.sampling.object_boundary, c.sampling.object_height);
  uint64_t h = 1469598103934665603ull;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

SensorBasis sensor_basis(const world::Pose2& vehicle_pose,
                         const SensorConfig& config) {
  const MountConfig& m = config.mount;
  const double c = std::cos(vehicle_pose.yaw), s = std::sin(vehicle_pose.yaw);
  const double psi = wrap_angle(vehicle_pose.yaw + m.dyaw);
  const double th = m.pitch;
  SensorBasis b;
  b.origin = {vehicle_pose.x + c * m.dx - s * m.dy,
              vehicle_pose.y + s * m.dx + c * m.dy, m.height};
  b.fwd = {std::cos(psi) * std::cos(th), std::sin(psi) * std::cos(th),
           -std::sin(th)};
  b.right = {std::sin(psi), -std::cos(psi), 0.0};
  b.up = b.right.cross(b.fwd);
  return b;
}

world::Pose2 sensor_origin_pose(const world::Pose2& vehicle_pose,
                                const SensorConfig& config) {
  SensorBasis b = sensor_basis(vehicle_pose, config);
  return world::Pose2(b.origin.x, b.origin.y,
                      wrap_angle(vehicle_pose.yaw + config.mount.dyaw));
}

std::optional<int> tof_bin(double path_length, const SensorConfig& config) {
  if (path_length >= config.max_path) return std::nullopt;
  const double bw = config.max_path / config.n_bins;
  return static_cast<int>(path_length / bw);
}

std::optional<ZoneIndex> zone_of_direction(const Vec3& dir,
                                           const SensorConfig& config) {
  if (dir.z <= 0.0) return std::nullopt;
  const double h = std::atan2(dir.x, dir.z);
  const double v = std::atan2(dir.y, dir.z);
  if (std::abs(h) > config.fov_h * 0.5 || std::abs(v) > config.fov_v * 0.5) {
    return std::nullopt;
  }
  ZoneIndex z;
  z.col = std::min(static_cast<int>((h / config.fov_h + 0.5) * config.zones_x),
                   config.zones_x - 1);
  z.row = std::min(static_cast<int>((v / config.fov_v + 0.5) * config.zones_y),
                   config.zones_y - 1);
  return z;
}

ExpectedFrame expected_direct(const world::Scene& scene,
                              const world::Pose2& vehicle_pose,
                              const SensorConfig& config) {
  const SensorBasis basis = sensor_basis(vehicle_pose, config);
  ExpectedFrame frame = make_frame(sensor_origin_pose(vehicle_pose, config), config);
  const Occluders occ = build_occluders(scene, true);
  const auto pts = sample_surfaces(scene, basis, config, /*relay_only=*/false);
  const SensorSidePoints vis = build_sensor_side(pts, basis, config, occ);
  const double bw = config.max_path / config.n_bins;
  // g already holds albedo*cos_s*cos_w*dA/r^2; one more r^2 for the return.
  for (size_t i = 0; i < vis.size(); ++i) {
    const double path = 2.0 * vis.r[i];
    if (path >= config.max_path) continue;
    const int bin = static_cast<int>(path / bw);
    frame.lambda[vis.zone[i] * config.n_bins + bin] +=
        config.photon_scale * vis.g[i] / (kPi * vis.rsq[i]);
  }
  for (double& v : frame.lambda) v += config.ambient_rate;
  return frame;
}

ExpectedFrame expected_three_bounce(const world::Scene& scene,
                                    const world::Pose2& vehicle_pose,
                                    const SensorConfig& config) {
  const SensorBasis basis = sensor_basis(vehicle_pose, config);
  ExpectedFrame frame = make_frame(sensor_origin_pose(vehicle_pose, config), config);
  if (!scene.object) return frame;

  const Occluders occ_sensor = build_occluders(scene, true);
  const Occluders occ_walls = build_occluders(scene, false);
  const auto surf = sample_surfaces(scene, basis, config, /*relay_only=*/true);
  const SensorSidePoints relay = build_sensor_side(surf, basis, config, occ_sensor);
  const auto obj = sample_object_boundary(*scene.object, config);
  if (relay.size() == 0 || obj.empty()) return frame;

  const double bw = config.max_path / config.n_bins;
  const double max_path = config.max_path;
  const int n_bins = config.n_bins;
  const size_t frame_sz = frame.lambda.size();
  const int n_obj = static_cast<int>(obj.size());
  const int n_relay = static_cast<int>(relay.size());

  // One partial frame per object sample; the ordered reduction below makes
  // the result bitwise independent of the thread count.
  std::vector<double> partials(static_cast<size_t>(n_obj) * frame_sz, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int oi = 0; oi < n_obj; ++oi) {
    const SurfacePoint& op = obj[oi];
    const double k_o =
        config.photon_scale * op.albedo * op.area / (kPi * kPi * kPi);
    std::vector<double> d, v;
    std::vector<int> zn;
    d.reserve(n_relay);
    v.reserve(n_relay);
    zn.reserve(n_relay);
    for (int i = 0; i < n_relay; ++i) {
      const Vec3 wo = op.p - relay.p[i];
      const double rwo = wo.norm();
      if (rwo < 1e-6) continue;
      const double cos_w = relay.n[i].dot(wo) / rwo;
      if (cos_w <= kEps) continue;
      const double cos_o = op.n.dot(wo * -1.0) / rwo;
      if (cos_o <= kEps) continue;
      const double delay = relay.r[i] + rwo;
      if (delay >= max_path) continue;
      if (!visible2d(occ_walls, relay.p[i].xy(), op.p.xy())) continue;
      d.push_back(delay);
      v.push_back(relay.g[i] * cos_w * cos_o / (rwo * rwo));
      zn.push_back(relay.zone[i]);
    }
    double* partial = partials.data() + static_cast<size_t>(oi) * frame_sz;
    const int m = static_cast<int>(d.size());
    for (int j = 0; j < m; ++j) {
      const double kj = k_o * v[j];
      const double dj = d[j];
      double* row = partial + static_cast<size_t>(zn[j]) * n_bins;
      for (int i = 0; i < m; ++i) {
        const double path = d[i] + dj;
        if (path < max_path) {
          row[static_cast<int>(path / bw)] += kj * v[i];
        }
      }
    }
  }

  for (int oi = 0; oi < n_obj; ++oi) {
    const double* partial = partials.data() + static_cast<size_t>(oi) * frame_sz;
    for (size_t k = 0; k < frame_sz; ++k) frame.lambda[k] += partial[k];
  }
  return frame;
}

ExpectedFrame expected_frame(const world::Scene& scene,
                             const world::Pose2& vehicle_pose,
                             const SensorConfig& config) {
  ExpectedFrame f = expected_direct(scene, vehicle_pose, config);
  ExpectedFrame tb = expected_three_bounce(scene, vehicle_pose, config);
  for (size_t i = 0; i < f.lambda.size(); ++i) f.lambda[i] += tb.lambda[i];
  return f;
}

HistogramFrame capture(const world::Scene& scene,
                       const world::Pose2& vehicle_pose,
                       const SensorConfig& config, uint64_t rng_seed) {
  const ExpectedFrame ef = expected_frame(scene, vehicle_pose, config);
  HistogramFrame hf;
  hf.zones_x = ef.zones_x;
  hf.zones_y = ef.zones_y;
  hf.n_bins = ef.n_bins;
  hf.sensor_pose = ef.sensor_pose;
  hf.counts.assign(ef.lambda.size(), 0.0);
  const uint64_t base = mix_seed(rng_seed, 0x63617074u);
  for (size_t i = 0; i < ef.lambda.size(); ++i) {
    Rng rng(mix_seed(base, i));
    double sum = 0.0;
    for (int e = 0; e < config.exposures; ++e) {
      sum += static_cast<double>(rng.poisson(ef.lambda[i]));
    }
    hf.counts[i] = sum / config.exposures;
  }
  return hf;
}

HistogramFrame expected_as_frame(const world::Scene& scene,
                                 const world::Pose2& vehicle_pose,
                                 const SensorConfig& config) {
  const ExpectedFrame ef = expected_frame(scene, vehicle_pose, config);
  HistogramFrame hf;
  hf.zones_x = ef.zones_x;
  hf.zones_y = ef.zones_y;
  hf.n_bins = ef.n_bins;
  hf.sensor_pose = ef.sensor_pose;
  hf.counts = ef.lambda;
  return hf;
}

namespace reference {

ExpectedFrame expected_direct(const world::Scene& scene,
                              const world::Pose2& vehicle_pose,
                              const SensorConfig& config) {
  const SensorBasis basis = sensor_basis(vehicle_pose, config);
  ExpectedFrame frame = make_frame(sensor_origin_pose(vehicle_pose, config), config);
  const Occluders occ = build_occluders(scene, true);
  const auto pts = sample_surfaces(scene, basis, config, false);
  for (const SurfacePoint& sp : pts) {
    const Vec3 to_w = sp.p - basis.origin;
    const double r = to_w.norm();
    if (r < 1e-6) continue;
    const Vec3 dir = to_w * (1.0 / r);
    auto zone = zone_of_direction(
        {dir.dot(basis.right), dir.dot(basis.up), dir.dot(basis.fwd)}, config);
    if (!zone) continue;
    const double cos_s = dir.dot(basis.fwd);
    const double cos_w = sp.n.dot(to_w * -1.0) / r;
    if (cos_s <= kEps || cos_w <= kEps) continue;
    if (!visible2d(occ, basis.origin.xy(), sp.p.xy())) continue;
    auto bin = tof_bin(2.0 * r, config);
    if (!bin) continue;
    frame.at(flat_zone(*zone, config), *bin) +=
        config.photon_scale * sp.albedo * cos_w * cos_s * sp.area /
        (kPi * r * r * r * r);
  }
  for (double& v : frame.lambda) v += config.ambient_rate;
  return frame;
}

ExpectedFrame expected_three_bounce(const world::Scene& scene,
                                    const world::Pose2& vehicle_pose,
                                    const SensorConfig& config) {
  const SensorBasis basis = sensor_basis(vehicle_pose, config);
  ExpectedFrame frame = make_frame(sensor_origin_pose(vehicle_pose, config), config);
  if (!scene.object) return frame;
  const Occluders occ_sensor = build_occluders(scene, true);
  const Occluders occ_walls = build_occluders(scene, false);
  const auto surf = sample_surfaces(scene, basis, config, true);
  const auto obj = sample_object_boundary(*scene.object, config);
  const Vec2 s2 = basis.origin.xy();

  for (const SurfacePoint& op : obj) {
    for (const SurfacePoint& w1 : surf) {
      const Vec3 sw1 = w1.p - basis.origin;
      const double r1 = sw1.norm();
      if (r1 < 1e-6) continue;
      const Vec3 dir1 = sw1 * (1.0 / r1);
      if (!zone_of_direction({dir1.dot(basis.right), dir1.dot(basis.up),
                              dir1.dot(basis.fwd)}, config)) {
        continue;
      }
      const double cos_s1 = dir1.dot(basis.fwd);
      const double cos_w1s = w1.n.dot(sw1 * -1.0) / r1;
      if (cos_s1 <= kEps || cos_w1s <= kEps) continue;
      if (!visible2d(occ_sensor, s2, w1.p.xy())) continue;
      const Vec3 w1o = op.p - w1.p;
      const double r2 = w1o.norm();
      if (r2 < 1e-6) continue;
      const double cos_w1o = w1.n.dot(w1o) / r2;
      const double cos_ow1 = op.n.dot(w1o * -1.0) / r2;
      if (cos_w1o <= kEps || cos_ow1 <= kEps) continue;
      if (!visible2d(occ_walls, w1.p.xy(), op.p.xy())) continue;
      for (const SurfacePoint& w2 : surf) {
        const Vec3 sw2 = w2.p - basis.origin;
        const double r4 = sw2.norm();
        if (r4 < 1e-6) continue;
        const Vec3 dir2 = sw2 * (1.0 / r4);
        auto zone = zone_of_direction({dir2.dot(basis.right), dir2.dot(basis.up),
                                       dir2.dot(basis.fwd)}, config);
        if (!zone) continue;
        const double cos_s2 = dir2.dot(basis.fwd);
        const double cos_w2s = w2.n.dot(sw2 * -1.0) / r4;
        if (cos_s2 <= kEps || cos_w2s <= kEps) continue;
        const Vec3 ow2 = w2.p - op.p;
        const double r3 = ow2.norm();
        if (r3 < 1e-6) continue;
        const double cos_ow2 = op.n.dot(ow2) / r3;
        const double cos_w2o = w2.n.dot(ow2 * -1.0) / r3;
        if (cos_ow2 <= kEps || cos_w2o <= kEps) continue;
        const double path = r1 + r2 + r3 + r4;
        auto bin = tof_bin(path, config);
        if (!bin) continue;
        if (!visible2d(occ_sensor, s2, w2.p.xy())) continue;
        if (!visible2d(occ_walls, op.p.xy(), w2.p.xy())) continue;
        const double throughput =
            config.photon_scale * op.albedo * w1.albedo * w2.albedo * cos_s1 *
            cos_w1s * cos_w1o * cos_ow1 * cos_ow2 * cos_w2o * cos_w2s * cos_s2 *
            w1.area * w2.area * op.area /
            (kPi * kPi * kPi * r1 * r1 * r2 * r2 * r3 * r3 * r4 * r4);
        frame.at(flat_zone(*zone, config), *bin) += throughput;
      }
    }
  }
  return frame;
}

}  // namespace reference

void write_frames_csv(const std::string& path,
                      const std::vector<HistogramFrame>& frames,
                      const std::vector<world::Pose2>& robot_poses,
                      uint64_t hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write frames file: " + path);
  out << std::setprecision(17);
  out << "sample_id,capture_time,sensor_x,sensor_y,sensor_yaw,robot_x,robot_y,"
         "robot_yaw,config_hash,zones_x,zones_y,n_bins";
  if (!frames.empty()) {
    for (size_t i = 0; i < frames[0].counts.size(); ++i) out << ",c" << i;
  }
  out << "\n";
  for (size_t k = 0; k < frames.size(); ++k) {
    const HistogramFrame& f = frames[k];
    const world::Pose2& rp = robot_poses[k];
    out << k << "," << f.capture_time << "," << f.sensor_pose.x << ","
        << f.sensor_pose.y << "," << f.sensor_pose.yaw << "," << rp.x << ","
        << rp.y << "," << rp.yaw << "," << hash << "," << f.zones_x << ","
        << f.zones_y << "," << f.n_bins;
    for (double c : f.counts) out << "," << c;
    out << "\n";
  }
}

std::vector<FrameRecord> read_frames_csv(const std::string& path,
                                         uint64_t* hash_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frames file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty frames file");
  std::vector<FrameRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 12) throw std::runtime_error("malformed frames row");
    FrameRecord rec;
    rec.frame.capture_time = std::stod(cols[1]);
    rec.frame.sensor_pose = world::Pose2(std::stod(cols[2]), std::stod(cols[3]),
                                         std::stod(cols[4]));
    rec.robot_pose = world::Pose2(std::stod(cols[5]), std::stod(cols[6]),
                                  std::stod(cols[7]));
    if (hash_out) *hash_out = std::stoull(cols[8]);
    rec.frame.zones_x = std::stoi(cols[9]);
    rec.frame.zones_y = std::stoi(cols[10]);
    rec.frame.n_bins = std::stoi(cols[11]);
    const size_t n = static_cast<size_t>(rec.frame.zones_x) *
                     rec.frame.zones_y * rec.frame.n_bins;
    if (cols.size() != 12 + n) throw std::runtime_error("frame size mismatch");
    rec.frame.counts.resize(n);
    for (size_t i = 0; i < n; ++i) rec.frame.counts[i] = std::stod(cols[12 + i]);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace nlosnav::transient
