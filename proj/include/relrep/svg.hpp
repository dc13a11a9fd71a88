#pragma once

#include <string>
#include <vector>

namespace relrep {

/// Minimal SVG 1.1 writer.  A panel maps data coordinates to a pixel box
/// with y growing upwards: px = left + (x - x0)/(x1 - x0) * width,
/// py = top + (1 - (y - y0)/(y1 - y0)) * height.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  struct Panel {
    double left, top, width, height;
    double x0, x1, y0, y1;

    double px(double x) const;
    double py(double y) const;
  };

  /// Frame, ticks (5 per axis) and title.
  Panel add_panel(double left, double top, double width, double height, double x0, double x1,
                  double y0, double y1, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel);

  void line(const Panel& p, double x0, double y0, double x1, double y1, const std::string& color,
            double stroke_width = 1.0, bool dashed = false);
  /// Arrow from (x, y) along (dx, dy) in data units.
  void arrow(const Panel& p, double x, double y, double dx, double dy, const std::string& color);
  void polyline(const Panel& p, const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, double stroke_width = 1.5);
  void cross(const Panel& p, double x, double y, const std::string& color);
  void text(double x, double y, const std::string& content, double size = 11.0,
            const std::string& anchor = "middle");

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

}  // namespace relrep
