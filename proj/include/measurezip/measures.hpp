#pragma once

#include "measurezip/mesh.hpp"
#include "measurezip/types.hpp"

#include <string>
#include <vector>

namespace measurezip {

// Euclidean(d): points are R^d. Oriented(d): points are R^d x S^{d-1},
// stored as 2d coordinates (position followed by unit direction).
struct BaseSpace {
  enum class Kind { Euclidean, Oriented };
  Kind kind = Kind::Euclidean;
  int dim = 3;

  static BaseSpace euclidean(int d);
  static BaseSpace oriented(int d);

  [[nodiscard]] int point_width() const { return kind == Kind::Oriented ? 2 * dim : dim; }
  [[nodiscard]] std::string name() const;
  friend bool operator==(const BaseSpace&, const BaseSpace&) = default;
};

// mu = sum_i delta_{x_i} alpha_i. Weight width is 3 for surface currents,
// 1 for varifolds, and anything >= 1 for general measures.
struct DiracMeasure {
  BaseSpace space;
  PointMatrix points;   // n x point_width
  PointMatrix weights;  // n x w

  [[nodiscard]] Index size() const { return points.rows(); }
  [[nodiscard]] Index weight_width() const { return weights.cols(); }

  // Throws InvalidArgument when shapes disagree, n == 0, or an oriented
  // direction is not unit length (within 1e-12).
  void validate() const;

  // Subset of atoms in the given order.
  [[nodiscard]] DiracMeasure select(const std::vector<Index>& indices) const;
};

DiracMeasure current_of_mesh(const TriangleMesh& mesh);

struct VarifoldBuild {
  DiracMeasure measure;
  // triangle index of each atom; degenerate triangles are absent.
  std::vector<Index> source_triangles;
  std::size_t skipped_degenerate = 0;
};

VarifoldBuild build_varifold(const TriangleMesh& mesh);
// Convenience wrapper; logs skipped degenerate triangles to stderr.
DiracMeasure varifold_of_mesh(const TriangleMesh& mesh);

double total_mass(const DiracMeasure& mu);

}  // namespace measurezip
