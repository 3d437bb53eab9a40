#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace nlosnav {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
  Vec2 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
  }
  Vec2 perp() const { return {-y, x}; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 0.0};
  }
  Vec2 xy() const { return {x, y}; }
};

// Distance from point p to the closed segment [a, b].
inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len_sq = ab.norm_sq();
  if (len_sq <= 0.0) return distance(p, a);
  double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return distance(p, a + ab * t);
}

// True if the wall segment [a, b] blocks sight along the open segment (p, q).
// The wall is treated as closed; touching the wall at p or q itself does not
// block (so a sample lying on its own wall stays visible from elsewhere).
inline bool segment_blocks(const Vec2& p, const Vec2& q, const Vec2& a,
                           const Vec2& b) {
  const Vec2 d1 = q - p;
  const Vec2 d2 = b - a;
  const double denom = d1.cross(d2);
  const double scale = d1.norm() * d2.norm() + 1e-300;
  const double kTol = 1e-9;
  if (std::abs(denom) < kTol * scale) {
    // Parallel. Blocks only if collinear and overlapping the open interval.
    if (std::abs((a - p).cross(d1)) > kTol * scale) return false;
    double len_sq = d1.norm_sq();
    if (len_sq <= 0.0) return false;
    double ta = (a - p).dot(d1) / len_sq;
    double tb = (b - p).dot(d1) / len_sq;
    if (ta > tb) std::swap(ta, tb);
    return std::max(ta, kTol) < std::min(tb, 1.0 - kTol);
  }
  const Vec2 ap = a - p;
  const double t = ap.cross(d2) / denom;  // along pq
  const double u = ap.cross(d1) / denom;  // along ab
  return t > kTol && t < 1.0 - kTol && u >= -kTol && u <= 1.0 + kTol;
}

// True if closed segments [p1,p2] and [q1,q2] intersect (touching counts).
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                               const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    double v = (b - a).cross(c - a);
    double s = (b - a).norm() * (c - a).norm() + 1e-300;
    if (v > 1e-12 * s) return 1;
    if (v < -1e-12 * s) return -1;
    return 0;
  };
  auto on_seg = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a.x, b.x) - 1e-12 <= c.x && c.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= c.y && c.y <= std::max(a.y, b.y) + 1e-12;
  };
  int o1 = orient(p1, p2, q1);
  int o2 = orient(p1, p2, q2);
  int o3 = orient(q1, q2, p1);
  int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

struct Aabb {
  Vec2 lo;
  Vec2 hi;

  bool contains(const Vec2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  Vec2 center() const { return (lo + hi) * 0.5; }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

// Simple polygon (CCW or CW), used for hidden-region containment and sampling.
struct Polygon {
  std::vector<Vec2> pts;

  bool empty() const { return pts.size() < 3; }

  bool contains(const Vec2& p) const {
    if (empty()) return false;
    bool in = false;
    for (size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      const Vec2& a = pts[i];
      const Vec2& b = pts[j];
      if ((a.y > p.y) != (b.y > p.y) &&
          p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
        in = !in;
      }
    }
    return in;
  }

  double area() const {
    double s = 0.0;
    for (size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++)
      s += pts[j].cross(pts[i]);
    return 0.5 * s;
  }

  Vec2 centroid() const {
    double a = 0.0;
    Vec2 c{0.0, 0.0};
    for (size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      double w = pts[j].cross(pts[i]);
      a += w;
      c = c + (pts[j] + pts[i]) * w;
    }
    a *= 0.5;
    return c / (6.0 * a);
  }

  Aabb bbox() const {
    Aabb b{{1e300, 1e300}, {-1e300, -1e300}};
    for (const Vec2& p : pts) {
      b.lo.x = std::min(b.lo.x, p.x);
      b.lo.y = std::min(b.lo.y, p.y);
      b.hi.x = std::max(b.hi.x, p.x);
      b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
  }
};

// Oriented rectangle given by center pose and half extents.
struct OrientedRect {
  Vec2 center;
  double yaw = 0.0;
  double half_length = 0.0;  // along local x
  double half_width = 0.0;   // along local y

  std::array<Vec2, 4> corners() const {
    double c = std::cos(yaw), s = std::sin(yaw);
    Vec2 ex{c, s}, ey{-s, c};
    return {center + ex * half_length + ey * half_width,
            center - ex * half_length + ey * half_width,
            center - ex * half_length - ey * half_width,
            center + ex * half_length - ey * half_width};
  }

  // Local coordinates of p (x along length axis).
  Vec2 to_local(const Vec2& p) const {
    Vec2 d = p - center;
    double c = std::cos(yaw), s = std::sin(yaw);
    return {d.x * c + d.y * s, -d.x * s + d.y * c};
  }

  bool contains(const Vec2& p) const {
    Vec2 l = to_local(p);
    return std::abs(l.x) <= half_length && std::abs(l.y) <= half_width;
  }

  // Euclidean distance from p to the rectangle (0 inside).
  double distance(const Vec2& p) const {
    Vec2 l = to_local(p);
    double dx = std::max(std::abs(l.x) - half_length, 0.0);
    double dy = std::max(std::abs(l.y) - half_width, 0.0);
    return std::hypot(dx, dy);
  }
};

}  // namespace nlosnav
