#include "measurezip/measures.hpp"

#include <cmath>
#include <iostream>

namespace measurezip {

BaseSpace BaseSpace::euclidean(int d) {
  if (d != 2 && d != 3) throw InvalidArgument("base space dimension must be 2 or 3");
  return {Kind::Euclidean, d};
}

BaseSpace BaseSpace::oriented(int d) {
  if (d != 2 && d != 3) throw InvalidArgument("base space dimension must be 2 or 3");
  return {Kind::Oriented, d};
}

std::string BaseSpace::name() const {
  return (kind == Kind::Euclidean ? "euclidean(" : "oriented(") + std::to_string(dim) + ")";
}

void DiracMeasure::validate() const {
  if (space.dim != 2 && space.dim != 3) throw InvalidArgument("base space dimension must be 2 or 3");
  if (points.rows() == 0) throw InvalidArgument("measure has no atoms");
  if (points.rows() != weights.rows()) throw InvalidArgument("measure points and weights differ in count");
  if (points.cols() != space.point_width()) {
    throw InvalidArgument("measure point width " + std::to_string(points.cols()) + " does not match space " +
                          space.name());
  }
  if (weights.cols() < 1) throw InvalidArgument("measure weights must have at least one column");
  if (!points.allFinite() || !weights.allFinite()) throw InvalidArgument("measure has non-finite entries");
  if (space.kind == BaseSpace::Kind::Oriented) {
    for (Index i = 0; i < points.rows(); ++i) {
      const double norm = points.row(i).tail(space.dim).norm();
      if (std::abs(norm - 1.0) > 1e-12) {
        throw InvalidArgument("oriented atom " + std::to_string(i) + " has non-unit direction");
      }
    }
  }
}

DiracMeasure DiracMeasure::select(const std::vector<Index>& indices) const {
  DiracMeasure out{space, PointMatrix(static_cast<Index>(indices.size()), points.cols()),
                   PointMatrix(static_cast<Index>(indices.size()), weights.cols())};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    if (i < 0 || i >= size()) throw InvalidArgument("atom index " + std::to_string(i) + " out of range");
    out.points.row(static_cast<Index>(k)) = points.row(i);
    out.weights.row(static_cast<Index>(k)) = weights.row(i);
  }
  return out;
}

DiracMeasure current_of_mesh(const TriangleMesh& mesh) {
  mesh.validate();
  const auto frames = triangle_geometry(mesh);
  const auto n = static_cast<Index>(frames.size());
  DiracMeasure mu{BaseSpace::euclidean(3), PointMatrix(n, 3), PointMatrix(n, 3)};
  for (Index i = 0; i < n; ++i) {
    mu.points.row(i) = frames[static_cast<std::size_t>(i)].centroid.transpose();
    mu.weights.row(i) = frames[static_cast<std::size_t>(i)].normal.transpose();
  }
  return mu;
}

VarifoldBuild build_varifold(const TriangleMesh& mesh) {
  mesh.validate();
  const auto frames = triangle_geometry(mesh);
  VarifoldBuild out;
  out.source_triangles.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].normal.norm() > 0.0) {
      out.source_triangles.push_back(static_cast<Index>(t));
    } else {
      ++out.skipped_degenerate;
    }
  }
  if (out.source_triangles.empty()) throw InvalidArgument("every triangle is degenerate; varifold would be empty");

  const auto n = static_cast<Index>(out.source_triangles.size());
  out.measure = DiracMeasure{BaseSpace::oriented(3), PointMatrix(n, 6), PointMatrix(n, 1)};
  for (Index k = 0; k < n; ++k) {
    const auto& f = frames[static_cast<std::size_t>(out.source_triangles[static_cast<std::size_t>(k)])];
    const double area = f.normal.norm();
    out.measure.points.row(k).head(3) = f.centroid.transpose();
    out.measure.points.row(k).tail(3) = (f.normal / area).transpose();
    out.measure.weights(k, 0) = area;
  }
  return out;
}

DiracMeasure varifold_of_mesh(const TriangleMesh& mesh) {
  auto built = build_varifold(mesh);
  if (built.skipped_degenerate > 0) {
    std::cerr << "warning: skipped " << built.skipped_degenerate << " degenerate triangle(s) building varifold\n";
  }
  return std::move(built.measure);
}

double total_mass(const DiracMeasure& mu) {
  double mass = 0.0;
  for (Index i = 0; i < mu.size(); ++i) mass += mu.weights.row(i).norm();
  return mass;
}

}  // namespace measurezip
