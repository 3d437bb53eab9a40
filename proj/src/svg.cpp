#include "nlosnav/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlosnav::svg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

Canvas::Canvas(double width_px, double height_px, const Aabb& world)
    : width_px_(width_px), height_px_(height_px), world_(world) {
  const double sx = width_px / std::max(world.width(), 1e-9);
  const double sy = height_px / std::max(world.height(), 1e-9);
  scale_ = std::min(sx, sy);
}

Vec2 Canvas::to_px(const Vec2& w) const {
  return {(w.x - world_.lo.x) * scale_,
          height_px_ - (w.y - world_.lo.y) * scale_};
}

void Canvas::line(const Vec2& a, const Vec2& b, const std::string& color,
                  double width) {
  const Vec2 pa = to_px(a), pb = to_px(b);
  std::ostringstream ss;
  ss << "<line x1=\"" << fmt(pa.x) << "\" y1=\"" << fmt(pa.y) << "\" x2=\""
     << fmt(pb.x) << "\" y2=\"" << fmt(pb.y) << "\" stroke=\"" << color
     << "\" stroke-width=\"" << fmt(width) << "\"/>";
  elems_.push_back(ss.str());
}

void Canvas::polyline(const std::vector<Vec2>& pts, const std::string& color,
                      double width) {
  if (pts.size() < 2) return;
  std::ostringstream ss;
  ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
     << fmt(width) << "\" points=\"";
  for (const Vec2& p : pts) {
    const Vec2 q = to_px(p);
    ss << fmt(q.x) << "," << fmt(q.y) << " ";
  }
  ss << "\"/>";
  elems_.push_back(ss.str());
}

void Canvas::circle(const Vec2& c, double world_radius, const std::string& fill,
                    const std::string& stroke) {
  const Vec2 p = to_px(c);
  std::ostringstream ss;
  ss << "<circle cx=\"" << fmt(p.x) << "\" cy=\"" << fmt(p.y) << "\" r=\""
     << fmt(std::max(world_radius * scale_, 1.0)) << "\" fill=\"" << fill
     << "\" stroke=\"" << stroke << "\"/>";
  elems_.push_back(ss.str());
}

void Canvas::rect(const Vec2& lo, const Vec2& hi, const std::string& fill,
                  double opacity) {
  const Vec2 a = to_px({lo.x, hi.y});
  const Vec2 b = to_px({hi.x, lo.y});
  std::ostringstream ss;
  ss << "<rect x=\"" << fmt(a.x) << "\" y=\"" << fmt(a.y) << "\" width=\""
     << fmt(b.x - a.x) << "\" height=\"" << fmt(b.y - a.y) << "\" fill=\""
     << fill << "\" fill-opacity=\"" << fmt(opacity) << "\"/>";
  elems_.push_back(ss.str());
}

void Canvas::polygon(const std::vector<Vec2>& pts, const std::string& fill,
                     double opacity) {
  std::ostringstream ss;
  ss << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << fmt(opacity)
     << "\" points=\"";
  for (const Vec2& p : pts) {
    const Vec2 q = to_px(p);
    ss << fmt(q.x) << "," << fmt(q.y) << " ";
  }
  ss << "\"/>";
  elems_.push_back(ss.str());
}

void Canvas::text(const Vec2& at, const std::string& s, double size_px,
                  const std::string& color) {
  const Vec2 p = to_px(at);
  std::ostringstream ss;
  ss << "<text x=\"" << fmt(p.x) << "\" y=\"" << fmt(p.y) << "\" font-size=\""
     << fmt(size_px) << "\" font-family=\"sans-serif\" fill=\"" << color
     << "\">" << s << "</text>";
  elems_.push_back(ss.str());
}

void Canvas::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write svg file: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_px_)
      << "\" height=\"" << fmt(height_px_) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const std::string& e : elems_) out << e << "\n";
  out << "</svg>\n";
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
  Aabb box{{1e300, 1e300}, {-1e300, -1e300}};
  for (const Series& s : series) {
    for (const Vec2& p : s.points) {
      box.lo.x = std::min(box.lo.x, p.x);
      box.lo.y = std::min(box.lo.y, p.y);
      box.hi.x = std::max(box.hi.x, p.x);
      box.hi.y = std::max(box.hi.y, p.y);
    }
  }
  if (box.lo.x > box.hi.x) box = {{0, 0}, {1, 1}};
  const double mx = std::max(box.width(), 1e-9) * 0.08;
  const double my = std::max(box.height(), 1e-9) * 0.12;
  box.lo.x -= mx;
  box.hi.x += mx;
  box.lo.y -= my;
  box.hi.y += my;

  Canvas c(640, 420, box);
  c.line({box.lo.x, 0.0 >= box.lo.y && 0.0 <= box.hi.y ? 0.0 : box.lo.y},
         {box.hi.x, 0.0 >= box.lo.y && 0.0 <= box.hi.y ? 0.0 : box.lo.y},
         "#bbbbbb", 1.0);
  for (const Series& s : series) {
    c.polyline(s.points, s.color, 2.0);
    for (const Vec2& p : s.points) c.circle(p, box.width() * 0.004, s.color);
  }
  c.text({box.lo.x + mx * 0.5, box.hi.y - my * 0.25}, title, 14.0, "#000000");
  c.text({box.lo.x + mx * 0.5, box.lo.y + my * 0.3}, x_label, 11.0);
  c.text({box.lo.x + mx * 0.5, box.hi.y - my * 0.7}, y_label, 11.0);
  double ty = box.hi.y - my * 1.2;
  for (const Series& s : series) {
    c.text({box.hi.x - box.width() * 0.22, ty}, s.label, 11.0, s.color);
    ty -= box.height() * 0.05;
  }
  c.save(path);
}

}  // namespace nlosnav::svg
