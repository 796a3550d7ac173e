#pragma once

#include "measurezip/kernels.hpp"
#include "measurezip/rng.hpp"
#include "measurezip/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace measurezip {

enum class SamplerKind { Uniform, ExactRLS, RecursiveRLS, MCMCkDPP, DivideAndConquerRLS };

std::string sampler_name(SamplerKind kind);
// Accepts "uniform", "exact_rls", "rls", "recursive_rls", "kdpp", "dac".
std::optional<SamplerKind> sampler_from_name(std::string_view name);

struct ControlSet {
  std::vector<Index> indices;
  SamplerKind sampler = SamplerKind::Uniform;
  std::uint64_t seed = 0;
  // Resolved sampler parameters, recorded for provenance.
  std::map<std::string, double> params;

  [[nodiscard]] Index size() const { return static_cast<Index>(indices.size()); }
  // Distinct, in [0, n), and 1 <= m <= n.
  void validate(Index n) const;
};

struct SamplerConfig {
  Index rank = 20;            // target rank S
  double delta = 0.01;        // failure probability, in (0, 1/32)
  double lambda_reg = 0.0;    // ridge parameter; 0 derives it from the rank
  Index mcmc_iterations = 1000;
  std::optional<Index> m_exact;
  Index base_size = 1024;     // recursion bottoms out in exact scores at this size
  double oversample = 2.0;    // per-level oversampling constant
  Index dense_cap = 20000;

  // m = ceil(S log(S / delta)) clipped to n, or m_exact when set.
  [[nodiscard]] Index sample_size(Index n) const;
  void validate() const;
};

// Largest S >= 1 with S log(S / delta) <= m.
Index rank_for_sample_size(Index m, double delta);

// tr(K_XX - K_XC K_CC^{-1} K_CX), streamed in blocks so K_XX is never formed.
// An empty control list gives tr(K_XX).
double nystrom_trace_error(const KernelSpec& spec, const PointMatrix& points, std::span<const Index> controls);
double nystrom_trace_error(const KernelSpec& spec, const PointMatrix& points, const ControlSet& controls);

// Ridge leverage scores diag(K (K + lambda I)^{-1}).
Vector exact_rls(const KernelSpec& spec, const PointMatrix& points, double lambda_reg, Index cap = 20000);
Vector exact_rls(const Matrix& k, double lambda_reg);

// Sum of the k largest eigenvalues of a symmetric PSD matrix. Dense for small
// matrices, randomized subspace iteration otherwise.
double top_eigenvalue_sum(const Matrix& k, Index count, Rng& rng);

struct RlsEstimate {
  Vector scores;
  double lambda = 0.0;  // ridge parameter used at the top level
  Index levels = 0;
};

// Approximate ridge leverage scores by recursive uniform halving.
RlsEstimate recursive_rls_scores(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                                 Rng& rng);

// Priority order for weighted sampling without replacement: the first m
// entries are a draw of size m proportional to `weights`, for every m.
std::vector<Index> weighted_order(std::span<const double> weights, Rng& rng);

ControlSet uniform_sample(Index n, Index m, std::uint64_t seed);
ControlSet exact_rls_sample(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                            std::uint64_t seed);
ControlSet recursive_rls_sample(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                                std::uint64_t seed);
ControlSet mcmc_kdpp_sample(const KernelSpec& spec, const PointMatrix& points, Index m, Index iterations,
                            std::uint64_t seed);
// Not provided; throws Error("not implemented").
ControlSet dac_rls_sample(const KernelSpec& spec, const PointMatrix& points, const SamplerConfig& cfg,
                          std::uint64_t seed);

ControlSet sample_controls(SamplerKind kind, const KernelSpec& spec, const PointMatrix& points,
                           const SamplerConfig& cfg, std::uint64_t seed);

// sum_{i > m} lambda_i(K_XX), eigenvalues sorted descending. Test oracle.
double eigen_tail_sum(const KernelSpec& spec, const PointMatrix& points, Index m, Index cap = 4000);

}  // namespace measurezip
