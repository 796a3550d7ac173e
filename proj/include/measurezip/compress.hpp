#pragma once

#include "measurezip/kernels.hpp"
#include "measurezip/measures.hpp"
#include "measurezip/nystrom.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace measurezip {

struct CompressionResult {
  DiracMeasure compressed;  // atom i sits at source atom controls.indices[i]
  ControlSet controls;
  double trace_error = 0.0;
  std::optional<double> squared_error;
  double wall_time = 0.0;  // seconds
};

// Orthogonal projection of mu onto span{k(., c_j) e_l}: weights
// beta = K_CC^{-1} Y_C with Y_C[j] = sum_i k(c_j, x_i) alpha_i.
DiracMeasure project_measure(const DiracMeasure& mu, const ControlSet& controls, const KernelSpec& spec);
DiracMeasure project_measure(const DiracMeasure& mu, std::span<const Index> controls, const KernelSpec& spec);

// Y_C = K_CX alpha, streamed over blocks of source atoms.
Matrix control_dual_values(const DiracMeasure& mu, std::span<const Index> controls, const KernelSpec& spec);

// Nystrom kernel-ridge weights: per weight column j,
// (K_CX K_XC + mu_reg K_CC) beta_j = K_CX (K_XX + mu_reg I) alpha_j.
// Needs the dense K_XX, hence the cap.
DiracMeasure nystrom_krr_weights(const DiracMeasure& mu, const ControlSet& controls, const KernelSpec& spec,
                                 double mu_reg, Index cap = 4000);

// Squared dual distance between a measure and its compression.
double compression_error2(const DiracMeasure& mu, const DiracMeasure& result, const KernelSpec& spec);

// Sample controls, project, optionally evaluate the squared error.
CompressionResult compress(const DiracMeasure& mu, const KernelSpec& spec, SamplerKind sampler,
                           const SamplerConfig& cfg, std::uint64_t seed, bool evaluate);

enum class Growth { AddOne, Double };

std::string growth_name(Growth g);
std::optional<Growth> growth_from_name(std::string_view name);

struct TraceSearchOptions {
  double tau = 0.0;  // absolute trace units
  SamplerKind sampler = SamplerKind::RecursiveRLS;
  SamplerConfig sampler_config;
  std::uint64_t seed = 1;
  Growth growth = Growth::Double;
  // Nested: one priority order is drawn and every size takes a prefix of it.
  // Otherwise each size is re-sampled from its own seed stream.
  bool nested = true;
};

struct TraceSearchResult {
  ControlSet controls;
  std::vector<std::pair<Index, double>> trajectory;  // (m, trace error)
  bool nested = true;
  Growth growth = Growth::Double;
};

// Grow m until nystrom_trace_error <= tau or m = n.
TraceSearchResult choose_m_trace(const DiracMeasure& mu, const KernelSpec& spec, const TraceSearchOptions& options);

struct ErrorCurveRow {
  std::string sampler;
  Index m = 0;
  std::uint64_t seed = 0;
  double squared_error = 0.0;
  double trace_error = 0.0;
  double wall_time_s = 0.0;
};

// One row per (sampler, m, seed). For leverage-score samplers the rank S is
// derived from m so that S log(S / delta) ~ m.
std::vector<ErrorCurveRow> error_curve(const DiracMeasure& mu, const KernelSpec& spec,
                                       const std::vector<Index>& m_values, const std::vector<SamplerKind>& samplers,
                                       const std::vector<std::uint64_t>& seeds, const SamplerConfig& base = {});

// Header: sampler,m,seed,squared_error,trace_error,wall_time_s
void write_error_curve_csv(std::ostream& out, const std::vector<ErrorCurveRow>& rows);

}  // namespace measurezip
