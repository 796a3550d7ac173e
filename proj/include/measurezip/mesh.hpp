#pragma once

#include "measurezip/types.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace measurezip {

using Triangle = std::array<int, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }

  // Throws InvalidArgument if indices are out of range, a coordinate is not
  // finite, or there are no triangles.
  void validate() const;
};

enum class MeshFormat { Obj, Ply, Off };

std::optional<MeshFormat> mesh_format_from_name(std::string_view name);
// Infers the format from the file extension (case-insensitive).
std::optional<MeshFormat> mesh_format_from_path(const std::filesystem::path& path);

// Quads are fan-triangulated at their first vertex; larger polygons are
// rejected. Errors are ParseError carrying the offending line number.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriangleMesh load_mesh(const std::filesystem::path& path);

TriangleMesh read_obj(std::istream& in);
TriangleMesh read_off(std::istream& in);
TriangleMesh read_ply(std::istream& in);

// ASCII OBJ, 17 significant digits, so coordinates round-trip exactly.
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

struct TriangleFrame {
  Vec3 centroid;
  // Half the cross product of two edges; its norm is the triangle area.
  Vec3 normal;
};

std::vector<TriangleFrame> triangle_geometry(const TriangleMesh& mesh);

struct BoundingBox {
  Vec3 lo;
  Vec3 hi;
  [[nodiscard]] Vec3 extent() const { return hi - lo; }
};

BoundingBox bounding_box(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);

// Moves the vertex mean to the origin and scales uniformly so the largest
// bounding-box edge equals target_extent.
TriangleMesh center_and_scale(const TriangleMesh& mesh, double target_extent);

namespace shapes {

TriangleMesh tetrahedron();
TriangleMesh cube();
// Loop-style subdivision of an icosahedron projected to the unit sphere;
// 20 * 4^level triangles.
TriangleMesh icosphere(int level);
// Latitude/longitude sphere whose latitude rings are packed toward the north
// pole with the given exponent (1 = uniform in angle). Triangle count is
// 2 * n_lon * (n_lat - 1).
TriangleMesh graded_sphere(int n_lat, int n_lon, double grading);
TriangleMesh scaled(const TriangleMesh& mesh, const Vec3& axes);

}  // namespace shapes

}  // namespace measurezip
