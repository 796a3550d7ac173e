#pragma once

// Instance generators and brute-force oracles shared by the unit tests and the
// acceptance binary. Oracles deliberately avoid the library's linear algebra
// and kernel code: everything is scalar loops in long double.

#include "measurezip/compress.hpp"
#include "measurezip/kernels.hpp"
#include "measurezip/measures.hpp"
#include "measurezip/mesh.hpp"
#include "measurezip/registration.hpp"
#include "measurezip/rng.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace mzt {

using namespace measurezip;
using ld = long double;
using LdMatrix = std::vector<std::vector<ld>>;

// ---------------------------------------------------------------- generators

inline PointMatrix random_points(Rng& rng, Index n, int dim, double scale = 1.0) {
  PointMatrix p(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) p(i, d) = scale * rng.normal();
  }
  return p;
}

inline Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-6) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

// Random measure on euclidean(3) (width-3 weights) or oriented(3) (scalar weights).
inline DiracMeasure random_measure(Rng& rng, Index n, bool oriented, double spread = 1.0) {
  if (!oriented) {
    return DiracMeasure{BaseSpace::euclidean(3), random_points(rng, n, 3, spread), random_points(rng, n, 3, 1.0)};
  }
  DiracMeasure mu{BaseSpace::oriented(3), PointMatrix(n, 6), PointMatrix(n, 1)};
  for (Index i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) mu.points(i, d) = spread * rng.normal();
    mu.points.row(i).tail(3) = random_unit(rng).transpose();
    mu.weights(i, 0) = 0.1 + rng.uniform();
  }
  return mu;
}

inline KernelSpec varifold_kernel(double sigma = 0.5, double sigma_s = 0.5) {
  return KernelSpec::product(KernelSpec::gaussian(sigma), KernelSpec::spherical_gaussian(sigma_s));
}

// Closed mesh with jittered vertices; triangle counts 20..320 depending on the draw.
inline TriangleMesh random_mesh(Rng& rng, double jitter = 0.05) {
  TriangleMesh mesh;
  switch (rng.below(4)) {
    case 0: mesh = shapes::icosphere(static_cast<int>(rng.below(3))); break;
    case 1: mesh = shapes::graded_sphere(4 + static_cast<int>(rng.below(6)), 6 + static_cast<int>(rng.below(10)),
                                         1.0 + 2.0 * rng.uniform());
      break;
    case 2: mesh = shapes::cube(); break;
    default: mesh = shapes::tetrahedron(); break;
  }
  const Vec3 axes(0.6 + rng.uniform(), 0.6 + rng.uniform(), 0.6 + rng.uniform());
  mesh = shapes::scaled(mesh, axes);
  for (auto& v : mesh.vertices) v += jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
  return mesh;
}

// Eight points: three far apart and five clustered around the first, so the
// size-3 DPP concentrates on a handful of subsets.
inline PointMatrix clustered_eight(Rng& rng, double spread = 0.05) {
  PointMatrix p = PointMatrix::Zero(8, 3);
  p(1, 0) = 3.0;
  p(2, 1) = 3.0;
  for (Index i = 3; i < 8; ++i) p.row(i) = spread * Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
  return p;
}

// Dense long double determinant by elimination with partial pivoting.
inline ld det_ld(LdMatrix a) {
  const std::size_t n = a.size();
  ld det = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0) return 0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const ld f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

inline LdMatrix sub(const LdMatrix& k, const std::vector<Index>& s) {
  LdMatrix out(s.size(), std::vector<ld>(s.size()));
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = 0; b < s.size(); ++b) out[a][b] = k[static_cast<std::size_t>(s[a])][static_cast<std::size_t>(s[b])];
  }
  return out;
}

inline std::vector<std::vector<Index>> subsets(Index n, Index m) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur;
  auto rec = [&](auto&& self, Index start) -> void {
    if (static_cast<Index>(cur.size()) == m) {
      out.push_back(cur);
      return;
    }
    for (Index i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("measurezip_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ------------------------------------------------------------------- oracles

// Kernel parameters read through the public accessors, evaluated independently.
struct OracleKernel {
  KernelSpec::Kind kind;
  std::vector<ld> sigmas;
  std::vector<OracleKernel> parts;  // spatial, spherical for a product

  explicit OracleKernel(const KernelSpec& k) : kind(k.kind()) {
    for (double s : k.bandwidths()) sigmas.push_back(s);
    if (kind == KernelSpec::Kind::Product) {
      parts.emplace_back(k.spatial());
      parts.emplace_back(k.spherical());
    }
  }

  ld operator()(const ld* x, const ld* y, int width) const {
    switch (kind) {
      case KernelSpec::Kind::Gaussian:
      case KernelSpec::Kind::SumOfGaussians: {
        ld r2 = 0;
        for (int c = 0; c < width; ++c) r2 += (x[c] - y[c]) * (x[c] - y[c]);
        ld k = 0;
        for (ld s : sigmas) k += std::exp(-r2 / (2 * s * s));
        return k;
      }
      case KernelSpec::Kind::SphericalGaussian: {
        ld r2 = 0;  // |s - r|^2 = 2 - 2 <s, r> on the sphere
        ld dot = 0;
        for (int c = 0; c < width; ++c) dot += x[c] * y[c];
        r2 = 2 - 2 * dot;
        return std::exp(-r2 / (2 * sigmas[0] * sigmas[0]));
      }
      case KernelSpec::Kind::LinearSpherical: {
        ld dot = 0;
        for (int c = 0; c < width; ++c) dot += x[c] * y[c];
        return dot;
      }
      case KernelSpec::Kind::Product: {
        const int d = width / 2;
        return parts[0](x, y, d) * parts[1](x + d, y + d, d);
      }
    }
    return 0;
  }
};

inline std::vector<ld> row_ld(const PointMatrix& m, Index i) {
  std::vector<ld> r(static_cast<std::size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c) r[static_cast<std::size_t>(c)] = m(i, c);
  return r;
}

inline LdMatrix kernel_ld(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b) {
  const OracleKernel k(spec);
  LdMatrix out(static_cast<std::size_t>(a.rows()), std::vector<ld>(static_cast<std::size_t>(b.rows())));
  for (Index i = 0; i < a.rows(); ++i) {
    const auto x = row_ld(a, i);
    for (Index j = 0; j < b.rows(); ++j) {
      const auto y = row_ld(b, j);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = k(x.data(), y.data(), static_cast<int>(a.cols()));
    }
  }
  return out;
}

inline ld dual_inner_ld(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec) {
  const auto k = kernel_ld(spec, mu.points, kappa.points);
  ld s = 0;
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index j = 0; j < kappa.size(); ++j) {
      ld dot = 0;
      for (Index c = 0; c < mu.weights.cols(); ++c) dot += static_cast<ld>(mu.weights(i, c)) * kappa.weights(j, c);
      s += k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * dot;
    }
  }
  return s;
}

inline ld dual_distance2_ld(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec) {
  return dual_inner_ld(mu, mu, spec) - 2 * dual_inner_ld(mu, kappa, spec) + dual_inner_ld(kappa, kappa, spec);
}

// Solves A X = B for symmetric positive definite A by a textbook Cholesky.
inline LdMatrix spd_solve_ld(LdMatrix a, LdMatrix b) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    ld d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      ld s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  const std::size_t cols = b.empty() ? 0 : b[0].size();
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      ld s = b[i][c];
      for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * b[k][c];
      b[i][c] = s / a[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
      ld s = b[i][c];
      for (std::size_t k = i + 1; k < n; ++k) s -= a[k][i] * b[k][c];
      b[i][c] = s / a[i][i];
    }
  }
  return b;
}

// The library regularizes K_CC by 1e-10 * mean(diag) before factoring; the
// trace oracle applies the same shift so both compute the same quantity.
inline void add_library_jitter(LdMatrix& kcc) {
  ld mean = 0;
  for (std::size_t i = 0; i < kcc.size(); ++i) mean += kcc[i][i];
  mean /= static_cast<ld>(kcc.size());
  const ld eps = static_cast<ld>(1e-10 * static_cast<double>(mean));
  for (std::size_t i = 0; i < kcc.size(); ++i) kcc[i][i] += eps;
}

inline PointMatrix gather(const PointMatrix& p, const std::vector<Index>& idx) {
  PointMatrix out(static_cast<Index>(idx.size()), p.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = p.row(idx[k]);
  return out;
}

inline ld trace_error_ld(const KernelSpec& spec, const PointMatrix& points, const std::vector<Index>& controls) {
  const auto kxx = kernel_ld(spec, points, points);
  ld tr = 0;
  for (std::size_t i = 0; i < kxx.size(); ++i) tr += kxx[i][i];
  if (controls.empty()) return tr;
  const PointMatrix c = gather(points, controls);
  auto kcc = kernel_ld(spec, c, c);
  add_library_jitter(kcc);
  const auto kcx = kernel_ld(spec, c, points);
  const auto sol = spd_solve_ld(kcc, kcx);
  ld captured = 0;
  for (std::size_t a = 0; a < kcx.size(); ++a) {
    for (std::size_t i = 0; i < kcx[a].size(); ++i) captured += kcx[a][i] * sol[a][i];
  }
  return std::max<ld>(0, tr - captured);
}

// Projection weights K_CC^{-1} K_CX alpha, without any regularization.
inline LdMatrix project_ld(const DiracMeasure& mu, const std::vector<Index>& controls, const KernelSpec& spec) {
  const PointMatrix c = gather(mu.points, controls);
  const auto kcc = kernel_ld(spec, c, c);
  const auto kcx = kernel_ld(spec, c, mu.points);
  LdMatrix y(controls.size(), std::vector<ld>(static_cast<std::size_t>(mu.weights.cols()), 0));
  for (std::size_t a = 0; a < controls.size(); ++a) {
    for (Index i = 0; i < mu.size(); ++i) {
      for (Index w = 0; w < mu.weights.cols(); ++w) {
        y[a][static_cast<std::size_t>(w)] += kcx[a][static_cast<std::size_t>(i)] * mu.weights(i, w);
      }
    }
  }
  return spd_solve_ld(kcc, y);
}

inline double hausdorff_brute(const PointMatrix& a, const PointMatrix& b) {
  auto directed = [](const PointMatrix& x, const PointMatrix& y) {
    double worst = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
      double best = INFINITY;
      for (Index j = 0; j < y.rows(); ++j) {
        const double d0 = x(i, 0) - y(j, 0), d1 = x(i, 1) - y(j, 1), d2 = x(i, 2) - y(j, 2);
        best = std::min(best, d0 * d0 + d1 * d1 + d2 * d2);
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

// Scalar-loop forward Euler for the geodesic equations and the point flow.
struct OracleFlow {
  std::vector<std::vector<std::array<ld, 3>>> q, p;
  ld energy = 0;
  std::vector<std::array<ld, 3>> x;
};

inline OracleFlow oracle_shoot(const PointMatrix& q0, const PointMatrix& p0, const PointMatrix& x0,
                               const std::vector<double>& sigmas, int steps) {
  auto kern = [&](const std::array<ld, 3>& a, const std::array<ld, 3>& b, std::array<ld, 3>* grad_a) {
    ld r2 = 0;
    for (int d = 0; d < 3; ++d) r2 += (a[d] - b[d]) * (a[d] - b[d]);
    ld k = 0, dk = 0;
    for (double s : sigmas) {
      const ld e = std::exp(-r2 / (2 * static_cast<ld>(s) * s));
      k += e;
      dk += -e / (static_cast<ld>(s) * s);
    }
    if (grad_a) {
      for (int d = 0; d < 3; ++d) (*grad_a)[d] = dk * (a[d] - b[d]);
    }
    return k;
  };
  auto to_ld = [](const PointMatrix& m) {
    std::vector<std::array<ld, 3>> v(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1), m(i, 2)};
    return v;
  };
  OracleFlow f;
  f.q.push_back(to_ld(q0));
  f.p.push_back(to_ld(p0));
  f.x = to_ld(x0);
  const ld dt = 1.0L / steps;
  const std::size_t n = f.q[0].size();
  for (int t = 0; t < steps; ++t) {
    const auto q = f.q.back(), p = f.p.back();
    auto qn = q, pn = p;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        std::array<ld, 3> g{};
        const ld k = kern(q[i], q[j], &g);
        const ld pp = p[i][0] * p[j][0] + p[i][1] * p[j][1] + p[i][2] * p[j][2];
        f.energy += dt * k * pp;
        for (int d = 0; d < 3; ++d) {
          qn[i][d] += dt * k * p[j][d];
          pn[i][d] -= dt * g[d] * pp;
        }
      }
    }
    for (auto& xi : f.x) {
      std::array<ld, 3> v{};
      for (std::size_t j = 0; j < n; ++j) {
        const ld k = kern(xi, q[j], nullptr);
        for (int d = 0; d < 3; ++d) v[d] += k * p[j][d];
      }
      for (int d = 0; d < 3; ++d) xi[d] += dt * v[d];
    }
    f.q.push_back(qn);
    f.p.push_back(pn);
  }
  return f;
}

inline double rel_diff(ld a, ld b, ld scale) {
  return static_cast<double>(std::fabs(a - b) / std::max<ld>(scale, 1e-300L));
}

}  // namespace mzt
