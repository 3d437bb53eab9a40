#pragma once

#include <string>
#include <vector>

#include "nlosnav/geom.hpp"

namespace nlosnav::svg {

// Minimal deterministic SVG canvas: world coordinates map through a fixed
// viewport so identical inputs reproduce identical files.
class Canvas {
 public:
  Canvas(double width_px, double height_px, const Aabb& world);

  void line(const Vec2& a, const Vec2& b, const std::string& color,
            double width = 1.0);
  void polyline(const std::vector<Vec2>& pts, const std::string& color,
                double width = 1.5);
  void circle(const Vec2& c, double world_radius, const std::string& fill,
              const std::string& stroke = "none");
  void rect(const Vec2& lo, const Vec2& hi, const std::string& fill,
            double opacity = 1.0);
  void polygon(const std::vector<Vec2>& pts, const std::string& fill,
               double opacity = 1.0);
  void text(const Vec2& at, const std::string& s, double size_px = 12.0,
            const std::string& color = "#333333");
  void save(const std::string& path) const;

 private:
  Vec2 to_px(const Vec2& w) const;
  double scale_;
  double width_px_, height_px_;
  Aabb world_;
  std::vector<std::string> elems_;
};

// Simple labeled XY line chart; one polyline per series.
struct Series {
  std::string label;
  std::string color;
  std::vector<Vec2> points;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace nlosnav::svg
