#include "measurezip/nystrom.hpp"

#include "measurezip/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace measurezip {

namespace {

constexpr Index kTraceBlock = 256;
constexpr Index kDenseEigenLimit = 300;

PointMatrix gather_rows(const PointMatrix& points, std::span<const Index> rows) {
  PointMatrix out(static_cast<Index>(rows.size()), points.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = points.row(rows[k]);
  return out;
}

void require_points(const PointMatrix& points) {
  if (points.rows() == 0) throw InvalidArgument("no atoms to sample from");
}

// Ridge parameter for a (weighted) kernel sketch: the tail eigenvalue mass
// beyond the target rank, spread over the rank.
double resolve_lambda(const SamplerConfig& cfg, const Matrix& weighted_k, Rng& rng) {
  if (cfg.lambda_reg > 0.0) return cfg.lambda_reg;
  const double trace = weighted_k.trace();
  const double floor = 1e-8 * std::max(trace / static_cast<double>(weighted_k.rows()), 1e-300);
  if (cfg.rank >= weighted_k.rows()) return std::max(1e-6 * trace / static_cast<double>(weighted_k.rows()), floor);
  const double tail = trace - top_eigenvalue_sum(weighted_k, cfg.rank, rng);
  return std::max(tail / static_cast<double>(cfg.rank), floor);
}

ControlSet make_controls(std::vector<Index> indices, SamplerKind kind, std::uint64_t seed) {
  ControlSet c;
  c.indices = std::move(indices);
  c.sampler = kind;
  c.seed = seed;
  return c;
}

}  // namespace

std::string sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::ExactRLS: return "exact_rls";
    case SamplerKind::RecursiveRLS: return "rls";
    case SamplerKind::MCMCkDPP: return "kdpp";
    case SamplerKind::DivideAndConquerRLS: return "dac";
  }
  return "unknown";
}

std::optional<SamplerKind> sampler_from_name(std::string_view name) {
  if (name == "uniform") return SamplerKind::Uniform;
  if (name == "exact_rls") return SamplerKind::ExactRLS;
  if (name == "rls" || name == "recursive_rls") return SamplerKind::RecursiveRLS;
  if (name == "kdpp" || name == "mcmc_kdpp") return SamplerKind::MCMCkDPP;
  if (name == "dac") return SamplerKind::DivideAndConquerRLS;
  return std::nullopt;
}

void ControlSet::validate(Index n) const {
  if (indices.empty()) throw InvalidArgument("control set is empty");
  if (size() > n) throw InvalidArgument("control set larger than the measure");
  std::unordered_set<Index> seen;
  for (Index i : indices) {
    if (i < 0 || i >= n) throw InvalidArgument("control index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw InvalidArgument("duplicate control index " + std::to_string(i));
  }
}

Index SamplerConfig::sample_size(Index n) const {
  if (m_exact) return std::min(*m_exact, n);
  const double s = static_cast<double>(rank);
  const auto m = static_cast<Index>(std::ceil(s * std::log(s / delta)));
  return std::clamp<Index>(m, 1, n);
}

void SamplerConfig::validate() const {
  if (rank < 1) throw InvalidArgument("rank S must be at least 1");
  if (!(delta > 0.0 && delta < 1.0 / 32.0)) throw InvalidArgument("delta must lie in (0, 1/32)");
  if (!(lambda_reg >= 0.0)) throw InvalidArgument("ridge parameter must be non-negative");
  if (mcmc_iterations < 1) throw InvalidArgument("MCMC iteration count must be positive");
  if (m_exact && *m_exact < 1) throw InvalidArgument("sample size m must be at least 1");
  if (base_size < 2) throw InvalidArgument("base case size must be at least 2");
  if (!(oversample > 0.0)) throw InvalidArgument("oversampling constant must be positive");
}

Index rank_for_sample_size(Index m, double delta) {
  Index s = 1;
  while (static_cast<double>(s + 1) * std::log(static_cast<double>(s + 1) / delta) <= static_cast<double>(m)) ++s;
  return s;
}

double nystrom_trace_error(const KernelSpec& spec, const PointMatrix& points, std::span<const Index> controls) {
  const Vector diag = kernel_diagonal(spec, points);
  if (controls.empty()) return diag.sum();
  const PointMatrix c = gather_rows(points, controls);
  const RegularizedCholesky chol(kernel_matrix(spec, c));

  const Index n = points.rows();
  double captured = 0.0;
  for (Index start = 0; start < n; start += kTraceBlock) {
    const Index len = std::min(kTraceBlock, n - start);
    const PointMatrix block = points.middleRows(start, len);
    const Matrix v = chol.solve_lower(kernel_matrix(spec, c, block));
    captured += v.colwise().squaredNorm().sum();
  }
  // Round-off can push a fully captured trace slightly below zero.
  return std::max(0.0, diag.sum() - captured);
}

double nystrom_trace_error(const KernelSpec& spec, const PointMatrix& points, const ControlSet& controls) {
  controls.validate(points.rows());
  return nystrom_trace_error(spec, points, std::span<const Index>(controls.indices));
}

Vector exact_rls(const Matrix& k, double lambda_reg) {
  if (!(lambda_reg > 0.0)) throw InvalidArgument("ridge parameter must be positive for leverage scores");
  const Index n = k.rows();
  Matrix shifted = k;
  shifted.diagonal().array() += lambda_reg;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) throw NumericalError("K + lambda I is not positive definite");
  // diag(K (K + lambda I)^{-1}) = 1 - lambda diag((K + lambda I)^{-1})
  const Matrix linv = llt.matrixL().solve(Matrix::Identity(n, n));
  Vector scores = (1.0 - lambda_reg * linv.colwise().squaredNorm().array()).matrix().transpose();
  return scores.cwiseMax(0.0).cwiseMin(1.0);
}

Vector exact_rls(const KernelSpec& spec, const PointMatrix& points, double lambda_reg, Index cap) {
  require_points(points);
  if (points.rows() > cap) {
    throw InvalidArgument("exact leverage scores need n <= " + std::to_string(cap) + " (got " +
                          std::to_string(points.rows()) + ")");
  }
  return exact_rls(kernel_matrix(spec, points), lambda_reg);
}

double top_eigenvalue_sum(const Matrix& k, Index count, Rng& rng) {
  const Index n = k.rows();
  if (count <= 0) return 0.0;
  if (count >= n) return k.trace();
  if (n <= kDenseEigenLimit || 2 * count >= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();  // ascending
    return ev.tail(count).sum();
  }
  const Index p = std::min(n, count + 10);
  Matrix y(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) y(i, j) = rng.normal();
  }
  // Subspace iteration until the Ritz sum settles.
  double sum = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::HouseholderQR<Matrix> qr(y);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    y = k * q;
    const Matrix b = q.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (b + b.transpose()), Eigen::EigenvaluesOnly);
    const double next = eig.eigenvalues().tail(count).sum();
    if (it > 0 && std::abs(next - sum) <= 1e-13 * std::abs(next)) return next;
    sum = next;
  }
  return sum;
}

RlsEstimate recursive_rls_scores(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                                 Rng& rng) {
  require_points(points);
  cfg.validate();
  const Index n = points.rows();
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  std::vector<Index> order(perm.begin(), perm.end());

  // Nested uniform halvings: sizes[0] = n, each level keeps a prefix of the
  // same random permutation.
  std::vector<Index> sizes{n};
  while (sizes.back() > cfg.base_size) sizes.push_back((sizes.back() + 1) / 2);

  RlsEstimate est;
  est.levels = static_cast<Index>(sizes.size());

  const std::span<const Index> base(order.data(), static_cast<std::size_t>(sizes.back()));
  const Matrix k_base = kernel_matrix(spec, gather_rows(points, base));
  double lambda = resolve_lambda(cfg, k_base, rng);
  Vector scores = exact_rls(k_base, lambda);

  const double boost = cfg.oversample * std::max(1.0, std::log(static_cast<double>(cfg.rank) / cfg.delta));
  for (auto level = static_cast<std::ptrdiff_t>(sizes.size()) - 2; level >= 0; --level) {
    const Index prev_size = sizes[static_cast<std::size_t>(level) + 1];
    const Index cur_size = sizes[static_cast<std::size_t>(level)];

    std::vector<Index> sketch;
    std::vector<double> prob;
    for (Index t = 0; t < prev_size; ++t) {
      const double p = std::min(1.0, boost * scores(t));
      if (rng.uniform() < p) {
        sketch.push_back(order[static_cast<std::size_t>(t)]);
        prob.push_back(p);
      }
    }
    if (sketch.empty()) {
      const Index take = std::min(cfg.rank, prev_size);
      const auto pick = rng.permutation(static_cast<std::size_t>(prev_size));
      for (Index t = 0; t < take; ++t) {
        sketch.push_back(order[pick[static_cast<std::size_t>(t)]]);
        prob.push_back(static_cast<double>(take) / static_cast<double>(prev_size));
      }
    }

    const PointMatrix sk_points = gather_rows(points, sketch);
    const Matrix k_ss = kernel_matrix(spec, sk_points);
    const auto s = static_cast<Index>(sketch.size());
    Vector w(s);
    for (Index a = 0; a < s; ++a) w(a) = 1.0 / std::sqrt(prob[static_cast<std::size_t>(a)]);
    lambda = resolve_lambda(cfg, w.asDiagonal() * k_ss * w.asDiagonal(), rng);

    Matrix system = k_ss;
    for (Index a = 0; a < s; ++a) system(a, a) += lambda / (w(a) * w(a));
    const RegularizedCholesky chol(system, JitterPolicy{0.0});

    const std::span<const Index> cur(order.data(), static_cast<std::size_t>(cur_size));
    const PointMatrix cur_points = gather_rows(points, cur);
    const Matrix v = chol.solve_lower(kernel_matrix(spec, sk_points, cur_points));
    const Vector diag = kernel_diagonal(spec, cur_points);
    scores.resize(cur_size);
    for (Index i = 0; i < cur_size; ++i) {
      scores(i) = std::clamp((diag(i) - v.col(i).squaredNorm()) / lambda, 0.0, 1.0);
    }
  }

  est.lambda = lambda;
  est.scores.resize(n);
  for (Index t = 0; t < n; ++t) est.scores(order[static_cast<std::size_t>(t)]) = scores(t);
  return est;
}

std::vector<Index> weighted_order(std::span<const double> weights, Rng& rng) {
  // Efraimidis-Spirakis keys log(u) / w; zero weights go last in random order.
  const auto n = weights.size();
  std::vector<double> key(n), tie(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform_open_zero();
    tie[i] = u;
    key[i] = weights[i] > 0.0 ? std::log(u) / weights[i] : -std::numeric_limits<double>::infinity();
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (key[ua] != key[ub]) return key[ua] > key[ub];
    return tie[ua] > tie[ub];
  });
  return order;
}

ControlSet uniform_sample(Index n, Index m, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("uniform sampling from an empty set");
  if (m < 1 || m > n) throw InvalidArgument("uniform sample size must satisfy 1 <= m <= n");
  Rng rng(seed, 0x756e69666f726dULL);
  // Partial Fisher-Yates.
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < m; ++i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i))) + i;
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(m));
  auto c = make_controls(std::move(pool), SamplerKind::Uniform, seed);
  c.params["m"] = static_cast<double>(m);
  return c;
}

ControlSet exact_rls_sample(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                            std::uint64_t seed) {
  require_points(points);
  cfg.validate();
  Rng rng(seed, 0x65786163745f726cULL);
  const Matrix k = kernel_matrix(spec, points);
  const double lambda = resolve_lambda(cfg, k, rng);
  const Vector scores = exact_rls(k, lambda);
  const Index m = cfg.sample_size(points.rows());
  auto order = weighted_order(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), rng);
  order.resize(static_cast<std::size_t>(m));
  auto c = make_controls(std::move(order), SamplerKind::ExactRLS, seed);
  c.params = {{"rank", static_cast<double>(cfg.rank)}, {"delta", cfg.delta}, {"lambda", lambda},
              {"m", static_cast<double>(m)}};
  return c;
}

ControlSet recursive_rls_sample(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                                std::uint64_t seed) {
  Rng rng(seed, 0x7265635f726c73ULL);
  const RlsEstimate est = recursive_rls_scores(spec, points, cfg, rng);
  const Index m = cfg.sample_size(points.rows());
  Rng order_rng = rng.split(1);
  auto order = weighted_order(std::span<const double>(est.scores.data(), static_cast<std::size_t>(est.scores.size())),
                              order_rng);
  order.resize(static_cast<std::size_t>(m));
  auto c = make_controls(std::move(order), SamplerKind::RecursiveRLS, seed);
  c.params = {{"rank", static_cast<double>(cfg.rank)},
              {"delta", cfg.delta},
              {"lambda", est.lambda},
              {"m", static_cast<double>(m)},
              {"base_size", static_cast<double>(cfg.base_size)},
              {"oversample", cfg.oversample},
              {"levels", static_cast<double>(est.levels)}};
  return c;
}

ControlSet mcmc_kdpp_sample(const KernelSpec& spec, const PointMatrix& points, Index m, Index iterations,
                            std::uint64_t seed) {
  require_points(points);
  const Index n = points.rows();
  if (m < 1 || m > n) throw InvalidArgument("k-DPP sample size must satisfy 1 <= m <= n");
  if (iterations < 1) throw InvalidArgument("MCMC iteration count must be positive");

  ControlSet start = uniform_sample(n, m, seed);
  std::vector<Index> in_set = std::move(start.indices);
  auto finish = [&](std::vector<Index> idx, double accepted) {
    auto c = make_controls(std::move(idx), SamplerKind::MCMCkDPP, seed);
    c.params = {{"m", static_cast<double>(m)}, {"iterations", static_cast<double>(iterations)},
                {"accepted", accepted}};
    return c;
  };
  if (m == n) return finish(std::move(in_set), 0.0);

  std::vector<char> member(static_cast<std::size_t>(n), 0);
  for (Index i : in_set) member[static_cast<std::size_t>(i)] = 1;
  std::vector<Index> out_set;
  out_set.reserve(static_cast<std::size_t>(n - m));
  for (Index i = 0; i < n; ++i) {
    if (!member[static_cast<std::size_t>(i)]) out_set.push_back(i);
  }

  const auto width = static_cast<std::size_t>(points.cols());
  const bool dense = n <= 4096;
  const Matrix k_full = dense ? kernel_matrix(spec, points) : Matrix();
  auto kval = [&](Index a, Index b) {
    if (dense) return k_full(a, b);
    return spec(std::span<const double>(points.row(a).data(), width), std::span<const double>(points.row(b).data(), width));
  };
  const double mean_diag = kernel_diagonal(spec, points).mean();
  const double jitter = 1e-10 * mean_diag;

  // Inverse of K_S + jitter I, kept up to date with rank-one updates.
  Matrix inv;
  auto refresh = [&]() {
    Matrix ks(m, m);
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) ks(a, b) = kval(in_set[static_cast<std::size_t>(a)], in_set[static_cast<std::size_t>(b)]);
    }
    ks.diagonal().array() += jitter;
    inv = RegularizedCholesky(ks, JitterPolicy{0.0}).solve(Matrix(Matrix::Identity(m, m)));
  };
  refresh();

  Rng rng(seed, 0x6b6470705f6d63ULL);
  Vector kj(m);
  Index accepted = 0;
  Index since_refresh = 0;
  for (Index r = 0; r < iterations; ++r) {
    const auto p = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    const auto out_pos = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - m)));
    const Index j = out_set[out_pos];
    const double u = rng.uniform();

    // Schur complements of the removed and the proposed element with respect
    // to the retained m - 1 elements give det(K_T) / det(K_S).
    for (Index a = 0; a < m; ++a) kj(a) = a == p ? 0.0 : kval(j, in_set[static_cast<std::size_t>(a)]);
    const Vector akj = inv * kj;
    const double app = inv(p, p);
    Vector reduced = akj - inv.col(p) * (akj(p) / app);
    reduced(p) = 0.0;
    const double schur_j = kval(j, j) + jitter - kj.dot(reduced);
    const double ratio = std::max(schur_j, 0.0) * app;  // schur_i = 1 / app

    if (u < 0.5 * std::min(1.0, ratio)) {
      ++accepted;
      const Index removed = in_set[static_cast<std::size_t>(p)];
      in_set[static_cast<std::size_t>(p)] = j;
      out_set[out_pos] = removed;
      if (++since_refresh >= 64 || schur_j < 1e-6 * mean_diag) {
        refresh();
        since_refresh = 0;
      } else {
        const Vector col_p = inv.col(p);
        inv -= col_p * col_p.transpose() / app;
        inv += reduced * reduced.transpose() / schur_j;
        inv.col(p) = -reduced / schur_j;
        inv.row(p) = inv.col(p).transpose();
        inv(p, p) = 1.0 / schur_j;
      }
    }
  }
  return finish(std::move(in_set), static_cast<double>(accepted));
}

ControlSet dac_rls_sample(const KernelSpec&, const PointMatrix&, const SamplerConfig&, std::uint64_t) {
  throw Error("divide-and-conquer RLS sampler: not implemented (use the recursive RLS sampler)");
}

ControlSet sample_controls(SamplerKind kind, const KernelSpec& spec, const PointMatrix& points,
                           const SamplerConfig& cfg, std::uint64_t seed) {
  switch (kind) {
    case SamplerKind::Uniform: return uniform_sample(points.rows(), cfg.sample_size(points.rows()), seed);
    case SamplerKind::ExactRLS: return exact_rls_sample(spec, points, cfg, seed);
    case SamplerKind::RecursiveRLS: return recursive_rls_sample(spec, points, cfg, seed);
    case SamplerKind::MCMCkDPP:
      return mcmc_kdpp_sample(spec, points, cfg.sample_size(points.rows()), cfg.mcmc_iterations, seed);
    case SamplerKind::DivideAndConquerRLS: return dac_rls_sample(spec, points, cfg, seed);
  }
  throw InvalidArgument("unknown sampler");
}

double eigen_tail_sum(const KernelSpec& spec, const PointMatrix& points, Index m, Index cap) {
  require_points(points);
  const Index n = points.rows();
  if (n > cap) throw InvalidArgument("eigen_tail_sum needs n <= " + std::to_string(cap));
  if (m < 0) throw InvalidArgument("m must be non-negative");
  if (m >= n) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kernel_matrix(spec, points), Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues();  // ascending
  return ev.head(n - m).sum();
}

}  // namespace measurezip
