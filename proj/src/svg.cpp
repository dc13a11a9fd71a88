#include "relrep/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relrep {

namespace {

std::string num(double v) {
  // Two decimals keeps the files small and diffable.
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << (std::abs(v) < 0.005 ? 0.0 : v);
  return out.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream out;
  out.precision(3);
  out << (std::abs(v) < 1e-12 ? 0.0 : v);
  return out.str();
}

}  // namespace

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

double SvgDocument::Panel::px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
double SvgDocument::Panel::py(double y) const { return top + (1.0 - (y - y0) / (y1 - y0)) * height; }

SvgDocument::Panel SvgDocument::add_panel(double left, double top, double width, double height, double x0,
                                          double x1, double y0, double y1, const std::string& title,
                                          const std::string& xlabel, const std::string& ylabel) {
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  Panel p{left, top, width, height, x0, x1, y0, y1};
  body_ += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(width) + "\" height=\"" +
           num(height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    const double tx = p.px(xv);
    const double ty = p.py(yv);
    body_ += "<line x1=\"" + num(tx) + "\" y1=\"" + num(top + height) + "\" x2=\"" + num(tx) + "\" y2=\"" +
             num(top + height + 4) + "\" stroke=\"black\"/>\n";
    text(tx, top + height + 16, tick_label(xv), 9.0);
    body_ += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(ty) + "\" x2=\"" + num(left) + "\" y2=\"" +
             num(ty) + "\" stroke=\"black\"/>\n";
    text(left - 6, ty + 3, tick_label(yv), 9.0, "end");
  }
  text(left + width / 2, top - 8, title, 12.0);
  text(left + width / 2, top + height + 32, xlabel, 11.0);
  body_ += "<text x=\"" + num(left - 40) + "\" y=\"" + num(top + height / 2) +
           "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 " +
           num(left - 40) + " " + num(top + height / 2) + ")\">" + escape(ylabel) + "</text>\n";
  return p;
}

void SvgDocument::line(const Panel& p, double x0, double y0, double x1, double y1, const std::string& color,
                       double stroke_width, bool dashed) {
  body_ += "<line x1=\"" + num(p.px(x0)) + "\" y1=\"" + num(p.py(y0)) + "\" x2=\"" + num(p.px(x1)) +
           "\" y2=\"" + num(p.py(y1)) + "\" stroke=\"" + color + "\" stroke-width=\"" + num(stroke_width) + "\"" +
           (dashed ? " stroke-dasharray=\"4 3\"" : "") + "/>\n";
}

void SvgDocument::arrow(const Panel& p, double x, double y, double dx, double dy, const std::string& color) {
  const double ax = p.px(x), ay = p.py(y);
  const double bx = p.px(x + dx), by = p.py(y + dy);
  const double len = std::hypot(bx - ax, by - ay);
  body_ += "<line x1=\"" + num(ax) + "\" y1=\"" + num(ay) + "\" x2=\"" + num(bx) + "\" y2=\"" + num(by) +
           "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
  if (len < 1e-9) return;
  const double ux = (bx - ax) / len, uy = (by - ay) / len;
  const double head = std::min(4.0, 0.4 * len);
  const double lx = bx - head * ux + 0.5 * head * uy, ly = by - head * uy - 0.5 * head * ux;
  const double rx = bx - head * ux - 0.5 * head * uy, ry = by - head * uy + 0.5 * head * ux;
  body_ += "<polygon points=\"" + num(bx) + "," + num(by) + " " + num(lx) + "," + num(ly) + " " + num(rx) + "," +
           num(ry) + "\" fill=\"" + color + "\"/>\n";
}

void SvgDocument::polyline(const Panel& p, const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& color, double stroke_width) {
  std::string points;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if (!points.empty()) points += ' ';
    points += num(p.px(xs[i])) + "," + num(p.py(ys[i]));
  }
  body_ += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           num(stroke_width) + "\"/>\n";
}

void SvgDocument::cross(const Panel& p, double x, double y, const std::string& color) {
  const double cx = p.px(x), cy = p.py(y);
  body_ += "<path d=\"M" + num(cx - 5) + "," + num(cy - 5) + " L" + num(cx + 5) + "," + num(cy + 5) + " M" +
           num(cx - 5) + "," + num(cy + 5) + " L" + num(cx + 5) + "," + num(cy - 5) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
}

void SvgDocument::text(double x, double y, const std::string& content, double size, const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(content) + "</text>\n";
}

std::string SvgDocument::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

}  // namespace relrep
