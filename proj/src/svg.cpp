#include "kdecomp/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include "kdecomp/data.hpp"
#include "kdecomp/errors.hpp"

namespace kdecomp {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                                 "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

double parse_number(const std::string& text, std::size_t line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw RowError(line, "cannot parse number '" + text + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  std::string s(buf, ptr);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

CurveSet read_curves(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("curve file is empty (no header)");
  ++line_no;
  const auto header = split_csv_line(line);
  const bool density_layout = header.size() >= 2 && header[0] == "x" && header[1] == "pdf";
  const bool long_layout = header.size() >= 3 && header[0] == "component" && header[1] == "x";
  if (!density_layout && !long_layout) {
    throw SchemaError("curve file header must start with 'x,pdf' or 'component,x,pdf'");
  }

  CurveSet set;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw RowError(line_no, "wrong number of fields");
    if (density_layout) {
      if (set.components.empty()) set.components.push_back({"density", {}, {}});
      set.components[0].x.push_back(parse_number(f[0], line_no));
      set.components[0].y.push_back(parse_number(f[1], line_no));
      continue;
    }
    const double x = parse_number(f[1], line_no);
    const double y = parse_number(f[2], line_no);
    if (f[0] == kCompositeLabel) {
      if (set.composite.empty()) set.composite.push_back({f[0], {}, {}});
      set.composite[0].x.push_back(x);
      set.composite[0].y.push_back(y);
      continue;
    }
    auto it = index.find(f[0]);
    if (it == index.end()) {
      it = index.emplace(f[0], set.components.size()).first;
      set.components.push_back({f[0], {}, {}});
    }
    set.components[it->second].x.push_back(x);
    set.components[it->second].y.push_back(y);
  }
  for (const auto& c : set.components) {
    if (c.x != set.components.front().x) throw SchemaError("curve file: component '" + c.name + "' uses a different grid");
    if (c.y.end() != std::find_if(c.y.begin(), c.y.end(), [](double v) { return v < 0; })) {
      throw SchemaError("curve file: negative density in '" + c.name + "'");
    }
  }
  return set;
}

std::string render_svg(const CurveSet& curves, int width, int height) {
  const double left = 70, right = 170, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_max = 0;
  std::vector<double> stacked;
  if (!curves.components.empty()) stacked.assign(curves.components.front().x.size(), 0.0);
  for (const auto& c : curves.components) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x_min = std::min(x_min, c.x[i]);
      x_max = std::max(x_max, c.x[i]);
      stacked[i] += c.y[i];
      y_max = std::max(y_max, stacked[i]);
    }
  }
  for (const auto& c : curves.composite) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x_min = std::min(x_min, c.x[i]);
      x_max = std::max(x_max, c.x[i]);
      y_max = std::max(y_max, c.y[i]);
    }
  }
  const bool empty = !std::isfinite(x_min);
  if (empty) {
    x_min = 0;
    x_max = 1;
  }
  if (x_max == x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (!(y_max > 0)) y_max = 1;
  y_max *= 1.05;

  auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double y) { return top + plot_h - y / y_max * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  // axes
  svg << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(left + plot_w) << "\" y2=\""
      << fmt(top + plot_h) << "\"/>\n"
      << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\""
      << fmt(top + plot_h) << "\"/>\n";
  constexpr int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double xv = x_min + (x_max - x_min) * t / ticks;
    const double yv = y_max * t / ticks;
    svg << "<line x1=\"" << fmt(sx(xv)) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(sx(xv)) << "\" y2=\""
        << fmt(top + plot_h + 5) << "\"/>\n"
        << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(sy(yv)) << "\" x2=\"" << fmt(left) << "\" y2=\""
        << fmt(sy(yv)) << "\"/>\n";
  }
  svg << "</g>\n<g id=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int t = 0; t <= ticks; ++t) {
    const double xv = x_min + (x_max - x_min) * t / ticks;
    const double yv = y_max * t / ticks;
    svg << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + plot_h + 18) << "\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n"
        << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
        << "</text>\n";
  }
  svg << "</g>\n";

  if (!curves.components.empty()) {
    svg << "<g id=\"components\" stroke=\"none\">\n";
    std::vector<double> base(stacked.size(), 0.0);
    for (std::size_t c = 0; c < curves.components.size(); ++c) {
      const auto& comp = curves.components[c];
      std::vector<double> upper(base);
      for (std::size_t i = 0; i < upper.size(); ++i) upper[i] += comp.y[i];
      svg << "<path fill=\"" << kPalette[c % kPalette.size()] << "\" fill-opacity=\"0.8\" d=\"";
      for (std::size_t i = 0; i < comp.x.size(); ++i) {
        svg << (i == 0 ? "M" : " L") << fmt(sx(comp.x[i])) << ',' << fmt(sy(upper[i]));
      }
      for (std::size_t i = comp.x.size(); i-- > 0;) svg << " L" << fmt(sx(comp.x[i])) << ',' << fmt(sy(base[i]));
      svg << " Z\"/>\n";
      base = std::move(upper);
    }
    svg << "</g>\n";
  }
  for (const auto& comp : curves.composite) {
    svg << "<path id=\"composite\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" d=\"";
    for (std::size_t i = 0; i < comp.x.size(); ++i) {
      svg << (i == 0 ? "M" : " L") << fmt(sx(comp.x[i])) << ',' << fmt(sy(comp.y[i]));
    }
    svg << "\"/>\n";
  }

  if (!curves.components.empty()) {
    svg << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t c = 0; c < curves.components.size(); ++c) {
      const double y = top + 10 + 18.0 * static_cast<double>(c);
      svg << "<rect x=\"" << fmt(left + plot_w + 15) << "\" y=\"" << fmt(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
          << kPalette[c % kPalette.size()] << "\"/>\n"
          << "<text x=\"" << fmt(left + plot_w + 32) << "\" y=\"" << fmt(y + 1) << "\">"
          << escape_xml(curves.components[c].name) << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace kdecomp
