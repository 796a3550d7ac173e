#pragma once

#include "measurezip/kernels.hpp"
#include "measurezip/measures.hpp"
#include "measurezip/mesh.hpp"
#include "measurezip/nystrom.hpp"

#include <optional>
#include <string>
#include <vector>

namespace measurezip {

enum class Representation { Current, Varifold };

std::string representation_name(Representation rep);
std::optional<Representation> representation_from_name(std::string_view name);

// Current or varifold of a mesh. Varifolds require every triangle to be
// non-degenerate here, so atom i is always triangle i.
DiracMeasure mesh_measure(const TriangleMesh& mesh, Representation rep);

enum class StepRule { Fixed, Backtracking };

struct DeformationConfig {
  KernelSpec kernel_v = KernelSpec::gaussian(0.5);  // must be spatial
  int n_steps = 10;
  double lambda_match = 100.0;
  int max_iters = 500;
  StepRule step_rule = StepRule::Backtracking;
  double fixed_eta = 1e-3;  // used by StepRule::Fixed
  double rel_tol = 1e-6;

  void validate() const;
};

// Trajectories at times 0, dt, ..., 1 (n_steps + 1 entries each).
struct ShootingState {
  std::vector<PointMatrix> q;
  std::vector<PointMatrix> p;
  double energy = 0.0;  // left-endpoint sum of dt * p^T K p
};

// Forward Euler on the geodesic equations of the deformation kernel.
ShootingState shoot(const PointMatrix& q0, const PointMatrix& p0, const DeformationConfig& cfg);

// Carries arbitrary points along the flow of a shooting state.
PointMatrix flow_points(const PointMatrix& x0, const ShootingState& state, const DeformationConfig& cfg);

// Velocity sum_j k(x_i, q_j) p_j; shared by shoot and flow_points.
PointMatrix flow_velocity(const KernelSpec& kernel_v, const PointMatrix& x, const PointMatrix& q,
                          const PointMatrix& p);

struct MatchProblem {
  TriangleMesh template_mesh;
  Representation rep = Representation::Varifold;
  KernelSpec kernel_w = KernelSpec::gaussian(0.5);
  DiracMeasure target;
  // Template triangles whose transported atoms span the projection subspace.
  // Empty disables the projection and compares the full deformed measure.
  std::vector<Index> controls;
  PointMatrix carriers;  // initial momentum carrier positions, n_q x 3
  DeformationConfig cfg;
};

// Carriers at the centroids of the given template triangles.
PointMatrix carrier_positions(const TriangleMesh& mesh, const std::vector<Index>& triangles);

struct ObjectiveValue {
  double total = 0.0;
  double energy = 0.0;
  double data = 0.0;  // unweighted squared dual distance
  PointMatrix gradient;  // d total / d p0, empty unless requested
};

ObjectiveValue objective(const PointMatrix& p0, const MatchProblem& problem, bool with_gradient = true);

struct IterationRecord {
  double energy = 0.0;
  double data = 0.0;
  double total = 0.0;
  double step = 0.0;
};

struct MatchOptions {
  Representation rep = Representation::Varifold;
  KernelSpec kernel_w = KernelSpec::gaussian(0.5);
  // Unset sizes mean no compression on that side.
  std::optional<Index> m_template;
  std::optional<Index> m_target;
  SamplerKind sampler = SamplerKind::RecursiveRLS;
  SamplerConfig sampler_config;
  std::uint64_t seed = 1;
};

struct MatchResult {
  PointMatrix p0;
  PointMatrix carriers;
  std::vector<Index> control_triangles;
  std::vector<IterationRecord> trajectory;  // entry 0 is the starting point
  TriangleMesh deformed_template;
  std::optional<double> hausdorff;
  double wall_time = 0.0;
  double setup_time = 0.0;
  int iterations = 0;
  std::string stop_reason;

  [[nodiscard]] double seconds_per_iteration() const;
};

MatchResult compressed_match(const TriangleMesh& template_mesh, const TriangleMesh& target,
                             const DeformationConfig& cfg, const MatchOptions& options);
MatchResult compressed_match(const TriangleMesh& template_mesh, const DiracMeasure& target,
                             const DeformationConfig& cfg, const MatchOptions& options);

// Symmetric Hausdorff distance between point sets (rows are 3-D points).
double hausdorff_distance(const PointMatrix& a, const PointMatrix& b);
double hausdorff_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace measurezip
