#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdecomp {

// Component name used for the composite curve in long-format curve files.
inline constexpr const char* kCompositeLabel = "(composite)";

struct Curve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Curves parsed from either a density file (x,pdf,cdf) or a decomposition
/// file (component,x,pdf).
struct CurveSet {
  std::vector<Curve> components;  // stacked areas, in file order
  std::vector<Curve> composite;   // zero or one outline
};

CurveSet read_curves(std::istream& in);

/// Standalone SVG 1.1 chart: stacked component areas plus the composite
/// outline. Output depends only on the input curves.
std::string render_svg(const CurveSet& curves, int width = 800, int height = 500);

}  // namespace kdecomp
