#ifndef VMA_TESTS_HELPERS_HPP_
#define VMA_TESTS_HELPERS_HPP_

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vma/vma.hpp"

namespace th {

using namespace vma;

inline MapElement line(std::string id, Polyline pts, std::string semantic = "curb", AttributeSet attrs = {},
                       double confidence = 1.0) {
  return MapElement(std::move(id), GeomKind::Line, Semantic::parse(semantic), std::move(pts), std::move(attrs),
                    confidence);
}

/// Axis-aligned box with corners in the required clockwise order.
inline MapElement box(std::string id, double cx, double cy, double w, double h, std::string semantic = "arrow",
                      AttributeSet attrs = {}, double confidence = 1.0) {
  Polyline pts{{cx - w / 2, cy + h / 2}, {cx + w / 2, cy + h / 2}, {cx + w / 2, cy - h / 2}, {cx - w / 2, cy - h / 2}};
  return MapElement(std::move(id), GeomKind::Discrete, Semantic::parse(semantic), std::move(pts), std::move(attrs),
                    confidence);
}

inline MapElement area(std::string id, Polyline ring, std::string semantic = "crosswalk") {
  return MapElement(std::move(id), GeomKind::Area, Semantic::parse(semantic), std::move(ring));
}

inline Polyline square(double x0, double y0, double side) {
  return {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
}

inline Polyline straight(double x0, double x1, double y, double step) {
  Polyline pts;
  const int n = static_cast<int>(std::lround((x1 - x0) / step));
  for (int i = 0; i <= n; ++i) pts.push_back({x0 + (x1 - x0) * i / n, y});
  return pts;
}

inline VectorizedMap global(std::vector<MapElement> elements) {
  return VectorizedMap(Frame::global(), std::move(elements));
}

inline std::vector<const MapElement*> ptrs(const VectorizedMap& m) {
  std::vector<const MapElement*> out;
  for (const auto& e : m.elements()) out.push_back(&e);
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vma-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random polyline with distinct consecutive points (a jittered walk).
inline Polyline random_walk(std::mt19937_64& rng, std::size_t n, double step = 1.0) {
  std::normal_distribution<double> turn(0.0, 0.6);
  std::uniform_real_distribution<double> len(0.2 * step, step);
  Polyline pts{{0.0, 0.0}};
  double heading = 0.0;
  while (pts.size() < n) {
    heading += turn(rng);
    const double l = len(rng);
    pts.push_back({pts.back().x + l * std::cos(heading), pts.back().y + l * std::sin(heading)});
  }
  return pts;
}

}  // namespace th

#endif  // VMA_TESTS_HELPERS_HPP_
