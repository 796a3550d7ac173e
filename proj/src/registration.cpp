#include "measurezip/registration.hpp"

#include "measurezip/cholesky.hpp"
#include "measurezip/compress.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace measurezip {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Radial profile of a (sum of) Gaussian deformation kernel as a function of
// r2 = |x - y|^2, with its first two derivatives in r2.
struct Radial {
  std::vector<double> c2;  // 1 / (2 sigma^2) per component

  explicit Radial(const KernelSpec& spec) {
    if (!spec.is_spatial()) throw InvalidArgument("deformation kernel must be gaussian or sum_of_gaussians");
    for (double s : spec.bandwidths()) c2.push_back(1.0 / (2.0 * s * s));
  }

  [[nodiscard]] double value(double r2) const {
    double k = 0.0;
    for (double c : c2) k += std::exp(-r2 * c);
    return k;
  }

  // k, dk/dr2, d2k/dr2^2
  void eval(double r2, double& k, double& slope, double& curv) const {
    k = slope = curv = 0.0;
    for (double c : c2) {
      const double e = std::exp(-r2 * c);
      k += e;
      slope -= c * e;
      curv += c * c * e;
    }
  }
};

inline double dist2(const PointMatrix& a, Index i, const PointMatrix& b, Index j) {
  const double d0 = a(i, 0) - b(j, 0), d1 = a(i, 1) - b(j, 1), d2 = a(i, 2) - b(j, 2);
  return d0 * d0 + d1 * d1 + d2 * d2;
}

void require_points3(const PointMatrix& x, const char* what) {
  if (x.cols() != 3) throw InvalidArgument(std::string(what) + " must have 3 columns");
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite entries");
}

void check_finite_step(const PointMatrix& m, int step, const char* what) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "shooting diverged: non-finite " << what << " at step " << step;
    throw NumericalError(os.str());
  }
}

PointMatrix mesh_vertices(const TriangleMesh& mesh) {
  PointMatrix v(static_cast<Index>(mesh.vertices.size()), 3);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) v.row(static_cast<Index>(i)) = mesh.vertices[i].transpose();
  return v;
}

TriangleMesh with_vertices(const TriangleMesh& mesh, const PointMatrix& v) {
  TriangleMesh out;
  out.triangles = mesh.triangles;
  out.vertices.resize(static_cast<std::size_t>(v.rows()));
  for (Index i = 0; i < v.rows(); ++i) out.vertices[static_cast<std::size_t>(i)] = v.row(i).transpose();
  return out;
}

std::vector<PointMatrix> flow_trajectory(const PointMatrix& x0, const ShootingState& state,
                                         const DeformationConfig& cfg) {
  const double dt = 1.0 / cfg.n_steps;
  std::vector<PointMatrix> xs;
  xs.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  xs.push_back(x0);
  for (int t = 0; t < cfg.n_steps; ++t) {
    const auto& x = xs.back();
    const PointMatrix v = flow_velocity(cfg.kernel_v, x, state.q[static_cast<std::size_t>(t)],
                                        state.p[static_cast<std::size_t>(t)]);
    PointMatrix next = x + dt * v;
    check_finite_step(next, t + 1, "point positions");
    xs.push_back(std::move(next));
  }
  return xs;
}

// out_i += sum_j coef(i, j) grad_1 k(a_i, b_j)
void accumulate_first_gradient(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b, const Matrix& coef,
                               PointMatrix& out) {
  const auto w = static_cast<std::size_t>(a.cols());
#pragma omp parallel
  {
    std::vector<double> grad(w);
#pragma omp for schedule(static)
    for (Index i = 0; i < a.rows(); ++i) {
      const std::span<const double> xi(a.row(i).data(), w);
      for (Index j = 0; j < b.rows(); ++j) {
        const double c = coef(i, j);
        if (c == 0.0) continue;
        spec.value_and_gradient(xi, std::span<const double>(b.row(j).data(), w), grad);
        for (std::size_t d = 0; d < w; ++d) out(i, static_cast<Index>(d)) += c * grad[d];
      }
    }
  }
}

struct DataTerm {
  double value = 0.0;
  PointMatrix g_points;
  PointMatrix g_weights;
};

// ||target - P mu||^2 with P the projection onto the control atoms of mu, or
// the identity when controls is empty.
DataTerm data_term(const DiracMeasure& mu, const DiracMeasure& target, const std::vector<Index>& controls,
                   const KernelSpec& spec, bool with_gradient) {
  DataTerm out;
  const Matrix alpha = mu.weights;
  const Matrix gamma = target.weights;
  const double tt = dual_norm2(target, spec);

  if (controls.empty()) {
    const Matrix kxx = kernel_matrix(spec, mu.points);
    const Matrix kxt = kernel_matrix(spec, mu.points, target.points);
    const Matrix ka = kxx * alpha;
    const Matrix kg = kxt * gamma;
    out.value = tt + (alpha.array() * ka.array()).sum() - 2.0 * (alpha.array() * kg.array()).sum();
    if (!with_gradient) return out;
    out.g_weights = 2.0 * (ka - kg);
    out.g_points = PointMatrix::Zero(mu.size(), mu.points.cols());
    accumulate_first_gradient(spec, mu.points, mu.points, 2.0 * alpha * alpha.transpose(), out.g_points);
    accumulate_first_gradient(spec, mu.points, target.points, -2.0 * alpha * gamma.transpose(), out.g_points);
    return out;
  }

  PointMatrix xc(static_cast<Index>(controls.size()), mu.points.cols());
  for (std::size_t a = 0; a < controls.size(); ++a) xc.row(static_cast<Index>(a)) = mu.points.row(controls[a]);
  const Matrix g = kernel_matrix(spec, xc);
  const Matrix kcx = kernel_matrix(spec, xc, mu.points);
  const Matrix kct = kernel_matrix(spec, xc, target.points);
  RegularizedCholesky chol;
  try {
    chol = RegularizedCholesky(g);
  } catch (const NumericalError& err) {
    throw NumericalError(std::string("projection onto transported controls is singular: ") + err.what());
  }
  const Matrix y = kcx * alpha;
  const Matrix beta = chol.solve(y);
  const Matrix h = kct * gamma;
  const Matrix gb = g * beta;
  out.value = tt + (beta.array() * gb.array()).sum() - 2.0 * (beta.array() * h.array()).sum();
  if (!with_gradient) return out;

  const Matrix s = chol.solve(Matrix(gb - h));
  const Matrix sb = s * beta.transpose();
  const Matrix w = beta * beta.transpose() - sb - sb.transpose();
  const Matrix v = 2.0 * s * alpha.transpose();

  out.g_weights = 2.0 * kcx.transpose() * s;
  PointMatrix gc = PointMatrix::Zero(xc.rows(), xc.cols());
  accumulate_first_gradient(spec, xc, xc, 2.0 * w, gc);
  accumulate_first_gradient(spec, xc, mu.points, v, gc);
  accumulate_first_gradient(spec, xc, target.points, -2.0 * beta * gamma.transpose(), gc);
  out.g_points = PointMatrix::Zero(mu.size(), mu.points.cols());
  accumulate_first_gradient(spec, mu.points, xc, Matrix(v.transpose()), out.g_points);
  for (std::size_t a = 0; a < controls.size(); ++a) out.g_points.row(controls[a]) += gc.row(static_cast<Index>(a));
  return out;
}

// Pulls atom gradients back to mesh vertex gradients.
PointMatrix vertex_gradient(const TriangleMesh& mesh, Representation rep, const DataTerm& d) {
  PointMatrix gv = PointMatrix::Zero(static_cast<Index>(mesh.vertices.size()), 3);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& v1 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Vec3& v2 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Vec3& v3 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    const Vec3 a = v3 - v2;
    const Vec3 b = v2 - v1;
    const auto i = static_cast<Index>(t);
    const Vec3 g_cent = d.g_points.row(i).head<3>().transpose();
    Vec3 g_nu;
    if (rep == Representation::Current) {
      g_nu = d.g_weights.row(i).head<3>().transpose();
    } else {
      const Vec3 nu = 0.5 * a.cross(b);
      const double area = nu.norm();
      const Vec3 u = nu / area;
      const Vec3 g_u = d.g_points.row(i).tail<3>().transpose();
      g_nu = (g_u - u * u.dot(g_u)) / area + u * d.g_weights(i, 0);
    }
    const Vec3 g_a = 0.5 * b.cross(g_nu);
    const Vec3 g_b = 0.5 * g_nu.cross(a);
    gv.row(tri[2]) += (g_a + g_cent / 3.0).transpose();
    gv.row(tri[1]) += (g_b - g_a + g_cent / 3.0).transpose();
    gv.row(tri[0]) += (g_cent / 3.0 - g_b).transpose();
  }
  return gv;
}

}  // namespace

std::string representation_name(Representation rep) { return rep == Representation::Current ? "current" : "varifold"; }

std::optional<Representation> representation_from_name(std::string_view name) {
  if (name == "current") return Representation::Current;
  if (name == "varifold") return Representation::Varifold;
  return std::nullopt;
}

DiracMeasure mesh_measure(const TriangleMesh& mesh, Representation rep) {
  if (rep == Representation::Current) return current_of_mesh(mesh);
  auto built = build_varifold(mesh);
  if (built.skipped_degenerate > 0) {
    throw NumericalError("mesh has " + std::to_string(built.skipped_degenerate) +
                         " degenerate triangle(s); varifold matching needs every normal defined");
  }
  return std::move(built.measure);
}

void DeformationConfig::validate() const {
  if (!kernel_v.is_spatial()) throw InvalidArgument("deformation kernel must be gaussian or sum_of_gaussians");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  if (!(lambda_match >= 0.0)) throw InvalidArgument("lambda_match must be non-negative");
  if (max_iters < 0) throw InvalidArgument("max_iters must be non-negative");
  if (step_rule == StepRule::Fixed && !(fixed_eta > 0.0)) throw InvalidArgument("fixed step size must be positive");
  if (!(rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be non-negative");
}

PointMatrix flow_velocity(const KernelSpec& kernel_v, const PointMatrix& x, const PointMatrix& q,
                          const PointMatrix& p) {
  const Radial radial(kernel_v);
  PointMatrix v = PointMatrix::Zero(x.rows(), 3);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < x.rows(); ++i) {
    double v0 = 0.0, v1 = 0.0, v2 = 0.0;
    for (Index j = 0; j < q.rows(); ++j) {
      const double k = radial.value(dist2(x, i, q, j));
      v0 += k * p(j, 0);
      v1 += k * p(j, 1);
      v2 += k * p(j, 2);
    }
    v(i, 0) = v0;
    v(i, 1) = v1;
    v(i, 2) = v2;
  }
  return v;
}

ShootingState shoot(const PointMatrix& q0, const PointMatrix& p0, const DeformationConfig& cfg) {
  cfg.validate();
  require_points3(q0, "carrier positions");
  require_points3(p0, "momenta");
  if (q0.rows() != p0.rows() || q0.rows() == 0) throw InvalidArgument("need as many momenta as carriers (>= 1)");

  const Radial radial(cfg.kernel_v);
  const double dt = 1.0 / cfg.n_steps;
  const Index nq = q0.rows();
  ShootingState state;
  state.q.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  state.p.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  state.q.push_back(q0);
  state.p.push_back(p0);

  for (int t = 0; t < cfg.n_steps; ++t) {
    const PointMatrix& q = state.q.back();
    const PointMatrix& p = state.p.back();
    const PointMatrix v = flow_velocity(cfg.kernel_v, q, q, p);
    state.energy += dt * (p.array() * v.array()).sum();

    PointMatrix force = PointMatrix::Zero(nq, 3);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < nq; ++i) {
      for (Index j = 0; j < nq; ++j) {
        if (j == i) continue;
        double k, slope, curv;
        radial.eval(dist2(q, i, q, j), k, slope, curv);
        const double c = 2.0 * slope * p.row(i).dot(p.row(j));
        force.row(i) += c * (q.row(i) - q.row(j));
      }
    }
    PointMatrix q_next = q + dt * v;
    PointMatrix p_next = p - dt * force;
    check_finite_step(q_next, t + 1, "carrier positions");
    check_finite_step(p_next, t + 1, "momenta");
    state.q.push_back(std::move(q_next));
    state.p.push_back(std::move(p_next));
  }
  if (!std::isfinite(state.energy)) throw NumericalError("shooting diverged: non-finite energy");
  return state;
}

PointMatrix flow_points(const PointMatrix& x0, const ShootingState& state, const DeformationConfig& cfg) {
  cfg.validate();
  require_points3(x0, "points");
  if (state.q.size() != static_cast<std::size_t>(cfg.n_steps) + 1) {
    throw InvalidArgument("shooting state does not match the configured number of steps");
  }
  return flow_trajectory(x0, state, cfg).back();
}

PointMatrix carrier_positions(const TriangleMesh& mesh, const std::vector<Index>& triangles) {
  mesh.validate();
  PointMatrix q(static_cast<Index>(triangles.size()), 3);
  for (std::size_t k = 0; k < triangles.size(); ++k) {
    const Index t = triangles[k];
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.triangles.size()) {
      throw InvalidArgument("carrier triangle index out of range");
    }
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Vec3 c = (mesh.vertices[static_cast<std::size_t>(tri[0])] + mesh.vertices[static_cast<std::size_t>(tri[1])] +
                    mesh.vertices[static_cast<std::size_t>(tri[2])]) /
                   3.0;
    q.row(static_cast<Index>(k)) = c.transpose();
  }
  return q;
}

ObjectiveValue objective(const PointMatrix& p0, const MatchProblem& problem, bool with_gradient) {
  const auto& cfg = problem.cfg;
  const ShootingState state = shoot(problem.carriers, p0, cfg);
  const std::vector<PointMatrix> xs = flow_trajectory(mesh_vertices(problem.template_mesh), state, cfg);
  const TriangleMesh deformed = with_vertices(problem.template_mesh, xs.back());
  const DiracMeasure mu = mesh_measure(deformed, problem.rep);
  require_compatible(mu, problem.target, problem.kernel_w);

  ObjectiveValue out;
  out.energy = state.energy;
  const bool need_data = cfg.lambda_match > 0.0;
  const DataTerm data = data_term(mu, problem.target, problem.controls, problem.kernel_w, with_gradient && need_data);
  out.data = data.value;
  out.total = out.energy + cfg.lambda_match * out.data;
  if (!with_gradient) return out;

  const Radial radial(cfg.kernel_v);
  const double dt = 1.0 / cfg.n_steps;
  const Index nq = p0.rows();
  const Index nx = xs.front().rows();

  PointMatrix gx = need_data ? PointMatrix(cfg.lambda_match * vertex_gradient(deformed, problem.rep, data))
                             : PointMatrix(PointMatrix::Zero(nx, 3));
  PointMatrix gq = PointMatrix::Zero(nq, 3);
  PointMatrix gp = PointMatrix::Zero(nq, 3);

  for (int t = cfg.n_steps - 1; t >= 0; --t) {
    const PointMatrix& q = state.q[static_cast<std::size_t>(t)];
    const PointMatrix& p = state.p[static_cast<std::size_t>(t)];
    const PointMatrix& x = xs[static_cast<std::size_t>(t)];
    PointMatrix nx_adj = gx;
    PointMatrix nq_adj = gq;
    PointMatrix np_adj = gp;

    // Point step x' = x + dt sum_j k(x, q_j) p_j.
    for (Index i = 0; i < nx; ++i) {
      for (Index j = 0; j < nq; ++j) {
        double k, slope, curv;
        radial.eval(dist2(x, i, q, j), k, slope, curv);
        const Eigen::RowVector3d g1 = 2.0 * slope * (x.row(i) - q.row(j));
        const double xp = gx.row(i).dot(p.row(j));
        nx_adj.row(i) += dt * xp * g1;
        nq_adj.row(j) -= dt * xp * g1;
        np_adj.row(j) += dt * k * gx.row(i);
      }
    }

    // Carrier and momentum steps, plus the energy contribution at time t.
    for (Index i = 0; i < nq; ++i) {
      for (Index j = 0; j < nq; ++j) {
        double k, slope, curv;
        const Eigen::RowVector3d r = q.row(i) - q.row(j);
        radial.eval(r.squaredNorm(), k, slope, curv);
        const Eigen::RowVector3d g_ij = 2.0 * slope * r;
        const double pp = p.row(i).dot(p.row(j));

        nq_adj.row(i) += dt * (gq.row(i).dot(p.row(j)) + gq.row(j).dot(p.row(i))) * g_ij;
        np_adj.row(i) += dt * k * gq.row(j);

        const double c_ij = gp.row(i).dot(g_ij);
        const double c_ji = -gp.row(j).dot(g_ij);
        np_adj.row(i) -= dt * (c_ij + c_ji) * p.row(j);
        const Eigen::RowVector3d dp = gp.row(i) - gp.row(j);
        // Hessian of k in its first argument: 2 slope I + 4 curv r r^T.
        const Eigen::RowVector3d h_dp = 2.0 * slope * dp + 4.0 * curv * r.dot(dp) * r;
        nq_adj.row(i) -= dt * pp * h_dp;

        nq_adj.row(i) += dt * 2.0 * pp * g_ij;
        np_adj.row(i) += dt * 2.0 * k * p.row(j);
      }
    }
    gx = std::move(nx_adj);
    gq = std::move(nq_adj);
    gp = std::move(np_adj);
  }
  out.gradient = std::move(gp);
  return out;
}

double MatchResult::seconds_per_iteration() const {
  return iterations > 0 ? (wall_time - setup_time) / iterations : 0.0;
}

namespace {

MatchResult run_match(const TriangleMesh& template_mesh, DiracMeasure target_full,
                      const std::optional<TriangleMesh>& target_mesh, const DeformationConfig& cfg,
                      const MatchOptions& options) {
  const auto start = Clock::now();
  cfg.validate();
  options.sampler_config.validate();

  MatchProblem problem;
  problem.template_mesh = template_mesh;
  problem.rep = options.rep;
  problem.kernel_w = options.kernel_w;
  problem.cfg = cfg;

  const DiracMeasure mu_template = mesh_measure(template_mesh, options.rep);
  options.kernel_w.require_space(mu_template.space);
  require_compatible(mu_template, target_full, options.kernel_w);

  const Rng seeds(options.seed);
  MatchResult result;
  if (options.m_template) {
    SamplerConfig sc = options.sampler_config;
    sc.m_exact = *options.m_template;
    sc.rank = rank_for_sample_size(*options.m_template, sc.delta);
    const ControlSet c = sample_controls(options.sampler, options.kernel_w, mu_template.points, sc,
                                         seeds.split(1).key());
    problem.controls = c.indices;
    result.control_triangles = c.indices;
  } else {
    result.control_triangles.resize(template_mesh.triangles.size());
    for (std::size_t t = 0; t < result.control_triangles.size(); ++t) result.control_triangles[t] = static_cast<Index>(t);
  }
  problem.carriers = carrier_positions(template_mesh, result.control_triangles);

  if (options.m_target) {
    SamplerConfig sc = options.sampler_config;
    sc.m_exact = *options.m_target;
    sc.rank = rank_for_sample_size(*options.m_target, sc.delta);
    const ControlSet c = sample_controls(options.sampler, options.kernel_w, target_full.points, sc,
                                         seeds.split(2).key());
    problem.target = project_measure(target_full, c, options.kernel_w);
  } else {
    problem.target = std::move(target_full);
  }

  const double scale = std::max(1.0, cfg.lambda_match * dual_norm2(problem.target, options.kernel_w));
  PointMatrix p = PointMatrix::Zero(problem.carriers.rows(), 3);
  ObjectiveValue f = objective(p, problem, true);
  result.trajectory.push_back({f.energy, f.data, f.total, 0.0});
  result.setup_time = seconds_since(start);

  double eta = 0.0;
  result.stop_reason = "max_iters";
  while (result.iterations < cfg.max_iters) {
    const double ginf = f.gradient.cwiseAbs().maxCoeff();
    if (ginf <= 1e-12 * scale || f.total <= 1e-14 * scale) {
      result.stop_reason = "stationary";
      break;
    }
    PointMatrix trial;
    ObjectiveValue ft;
    double used = 0.0;
    if (cfg.step_rule == StepRule::Fixed) {
      used = cfg.fixed_eta;
      trial = p - used * f.gradient;
      ft = objective(trial, problem, true);
    } else {
      if (eta == 0.0) eta = 0.1 / ginf;
      const double gg = f.gradient.squaredNorm();
      bool accepted = false;
      for (int attempt = 0; attempt < 60; ++attempt) {
        trial = p - eta * f.gradient;
        try {
          ft = objective(trial, problem, true);
          if (ft.total <= f.total - 1e-4 * eta * gg) {
            accepted = true;
            break;
          }
        } catch (const NumericalError&) {
          // Diverged trial step; shrink and retry.
        }
        eta *= 0.5;
      }
      if (!accepted) {
        result.stop_reason = "line_search_failed";
        break;
      }
      used = eta;
      eta *= 2.0;
    }
    const double previous = f.total;
    p = std::move(trial);
    f = std::move(ft);
    ++result.iterations;
    result.trajectory.push_back({f.energy, f.data, f.total, used});
    if (std::abs(previous - f.total) <= cfg.rel_tol * std::abs(previous)) {
      result.stop_reason = "converged";
      break;
    }
  }

  const ShootingState state = shoot(problem.carriers, p, cfg);
  result.deformed_template = with_vertices(template_mesh, flow_points(mesh_vertices(template_mesh), state, cfg));
  if (target_mesh) result.hausdorff = hausdorff_distance(result.deformed_template.vertices, target_mesh->vertices);
  result.p0 = std::move(p);
  result.carriers = problem.carriers;
  result.wall_time = seconds_since(start);
  return result;
}

}  // namespace

MatchResult compressed_match(const TriangleMesh& template_mesh, const TriangleMesh& target,
                             const DeformationConfig& cfg, const MatchOptions& options) {
  return run_match(template_mesh, mesh_measure(target, options.rep), target, cfg, options);
}

MatchResult compressed_match(const TriangleMesh& template_mesh, const DiracMeasure& target,
                             const DeformationConfig& cfg, const MatchOptions& options) {
  target.validate();
  return run_match(template_mesh, target, std::nullopt, cfg, options);
}

}  // namespace measurezip
