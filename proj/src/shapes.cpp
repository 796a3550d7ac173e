#include "measurezip/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace measurezip::shapes {

TriangleMesh tetrahedron() {
  TriangleMesh m;
  m.vertices = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  m.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return m;
}

TriangleMesh cube() {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) m.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  // Consistently oriented outward.
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

TriangleMesh icosphere(int level) {
  if (level < 0) throw InvalidArgument("icosphere level must be non-negative");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const Vec3 p = (m.vertices[static_cast<std::size_t>(a)] + m.vertices[static_cast<std::size_t>(b)]).normalized();
      m.vertices.push_back(p);
      const int idx = static_cast<int>(m.vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const int a = mid(tri[0], tri[1]);
      const int b = mid(tri[1], tri[2]);
      const int c = mid(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  return m;
}

TriangleMesh graded_sphere(int n_lat, int n_lon, double grading) {
  if (n_lat < 2 || n_lon < 3 || !(grading > 0.0)) throw InvalidArgument("graded_sphere needs n_lat >= 2, n_lon >= 3");
  TriangleMesh m;
  m.vertices.emplace_back(0, 0, 1);
  for (int k = 1; k < n_lat; ++k) {
    const double theta = std::numbers::pi * std::pow(static_cast<double>(k) / n_lat, grading);
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / n_lon;
      m.vertices.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    }
  }
  m.vertices.emplace_back(0, 0, -1);
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int k, int j) { return 1 + (k - 1) * n_lon + (j % n_lon); };
  for (int j = 0; j < n_lon; ++j) m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int k = 1; k + 1 < n_lat; ++k) {
    for (int j = 0; j < n_lon; ++j) {
      m.triangles.push_back({ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)});
      m.triangles.push_back({ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)});
    }
  }
  for (int j = 0; j < n_lon; ++j) m.triangles.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)});
  return m;
}

TriangleMesh scaled(const TriangleMesh& mesh, const Vec3& axes) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = v.cwiseProduct(axes);
  return out;
}

}  // namespace measurezip::shapes
