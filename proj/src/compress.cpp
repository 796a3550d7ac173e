#include "measurezip/compress.hpp"

#include "measurezip/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <chrono>
#include <ostream>
#include <sstream>

namespace measurezip {

namespace {

constexpr Index kStreamBlock = 512;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_controls(std::span<const Index> controls, Index n) {
  ControlSet tmp;
  tmp.indices.assign(controls.begin(), controls.end());
  tmp.validate(n);
}

// Pairs of controls whose kernel sections nearly coincide.
std::string near_duplicate_report(const PointMatrix& c_points, std::span<const Index> controls,
                                  const KernelSpec& spec) {
  const auto w = static_cast<std::size_t>(c_points.cols());
  std::ostringstream os;
  int found = 0;
  for (Index a = 0; a < c_points.rows() && found < 10; ++a) {
    const std::span<const double> xa(c_points.row(a).data(), w);
    for (Index b = a + 1; b < c_points.rows() && found < 10; ++b) {
      const std::span<const double> xb(c_points.row(b).data(), w);
      const double kaa = spec.diagonal(xa), kbb = spec.diagonal(xb), kab = spec(xa, xb);
      if (kaa + kbb - 2.0 * kab <= 1e-9 * (kaa + kbb)) {
        os << (found ? ", " : "") << "(" << controls[static_cast<std::size_t>(a)] << ", "
           << controls[static_cast<std::size_t>(b)] << ")";
        ++found;
      }
    }
  }
  return found ? os.str() : std::string("none found");
}

}  // namespace

Matrix control_dual_values(const DiracMeasure& mu, std::span<const Index> controls, const KernelSpec& spec) {
  PointMatrix c_points(static_cast<Index>(controls.size()), mu.points.cols());
  for (std::size_t k = 0; k < controls.size(); ++k) c_points.row(static_cast<Index>(k)) = mu.points.row(controls[k]);
  Matrix y = Matrix::Zero(c_points.rows(), mu.weight_width());
  for (Index start = 0; start < mu.size(); start += kStreamBlock) {
    const Index len = std::min(kStreamBlock, mu.size() - start);
    const PointMatrix block = mu.points.middleRows(start, len);
    y.noalias() += kernel_matrix(spec, c_points, block) * mu.weights.middleRows(start, len);
  }
  return y;
}

DiracMeasure project_measure(const DiracMeasure& mu, std::span<const Index> controls, const KernelSpec& spec) {
  mu.validate();
  spec.require_space(mu.space);
  require_controls(controls, mu.size());

  DiracMeasure out{mu.space, PointMatrix(static_cast<Index>(controls.size()), mu.points.cols()),
                   PointMatrix(static_cast<Index>(controls.size()), mu.weight_width())};
  for (std::size_t k = 0; k < controls.size(); ++k) out.points.row(static_cast<Index>(k)) = mu.points.row(controls[k]);

  const Matrix y = control_dual_values(mu, controls, spec);
  const Matrix k_cc = kernel_matrix(spec, out.points);
  RegularizedCholesky chol;
  try {
    chol = RegularizedCholesky(k_cc);
  } catch (const NumericalError& err) {
    throw NumericalError(std::string("control kernel matrix is singular (") + err.what() +
                         "); near-duplicate control pairs: " + near_duplicate_report(out.points, controls, spec));
  }
  Matrix beta = chol.solve(y);
  // Two refinement sweeps against the unshifted K_CC remove most of the
  // jitter bias when K_CC is invertible and stay bounded when it is not.
  for (int sweep = 0; sweep < 2; ++sweep) beta += chol.solve(Matrix(y - k_cc * beta));
  out.weights = beta;
  return out;
}

DiracMeasure project_measure(const DiracMeasure& mu, const ControlSet& controls, const KernelSpec& spec) {
  return project_measure(mu, std::span<const Index>(controls.indices), spec);
}

DiracMeasure nystrom_krr_weights(const DiracMeasure& mu, const ControlSet& controls, const KernelSpec& spec,
                                 double mu_reg, Index cap) {
  mu.validate();
  spec.require_space(mu.space);
  controls.validate(mu.size());
  if (!(mu_reg > 0.0)) throw InvalidArgument("regularization mu_reg must be positive");
  if (mu.size() > cap) throw InvalidArgument("Nystrom KRR weights need n <= " + std::to_string(cap));

  const Matrix k_xx = kernel_matrix(spec, mu.points);
  const Matrix k_cx = k_xx(controls.indices, Eigen::all);
  const Matrix k_cc = k_xx(controls.indices, controls.indices);

  Matrix y_tilde = k_xx * mu.weights;
  y_tilde += mu_reg * Matrix(mu.weights);

  // The normal equations (K_CX K_XC + mu K_CC) beta = K_CX y are the
  // stationarity conditions of min |K_XC beta - y|^2 + mu beta' K_CC beta.
  // Solving that least-squares problem by QR avoids squaring cond(K).
  const Index m = controls.size();
  const Matrix r_cc = RegularizedCholesky(k_cc).lower().transpose();
  Matrix stacked(mu.size() + m, m);
  stacked.topRows(mu.size()) = k_cx.transpose();
  stacked.bottomRows(m) = std::sqrt(mu_reg) * r_cc;
  Matrix rhs = Matrix::Zero(mu.size() + m, y_tilde.cols());
  rhs.topRows(mu.size()) = y_tilde;
  const Eigen::ColPivHouseholderQR<Matrix> qr(stacked);

  DiracMeasure out{mu.space, PointMatrix(m, mu.points.cols()), PointMatrix()};
  for (Index k = 0; k < m; ++k) out.points.row(k) = mu.points.row(controls.indices[static_cast<std::size_t>(k)]);
  out.weights = qr.solve(rhs);
  if (!out.weights.allFinite()) throw NumericalError("Nystrom KRR least-squares solve failed");
  return out;
}

double compression_error2(const DiracMeasure& mu, const DiracMeasure& result, const KernelSpec& spec) {
  return dual_distance2(mu, result, spec);
}

CompressionResult compress(const DiracMeasure& mu, const KernelSpec& spec, SamplerKind sampler,
                           const SamplerConfig& cfg, std::uint64_t seed, bool evaluate) {
  const auto start = Clock::now();
  CompressionResult res;
  res.controls = sample_controls(sampler, spec, mu.points, cfg, seed);
  res.compressed = project_measure(mu, res.controls, spec);
  res.wall_time = seconds_since(start);
  res.trace_error = nystrom_trace_error(spec, mu.points, res.controls);
  if (evaluate) res.squared_error = compression_error2(mu, res.compressed, spec);
  return res;
}

std::string growth_name(Growth g) { return g == Growth::AddOne ? "add_one" : "double"; }

std::optional<Growth> growth_from_name(std::string_view name) {
  if (name == "add_one") return Growth::AddOne;
  if (name == "double") return Growth::Double;
  return std::nullopt;
}

TraceSearchResult choose_m_trace(const DiracMeasure& mu, const KernelSpec& spec, const TraceSearchOptions& options) {
  mu.validate();
  spec.require_space(mu.space);
  if (!(options.tau >= 0.0)) throw InvalidArgument("trace tolerance tau must be non-negative");
  const Index n = mu.size();

  TraceSearchResult result;
  result.growth = options.growth;
  // An MCMC chain has no natural nesting across sizes.
  result.nested = options.nested && options.sampler != SamplerKind::MCMCkDPP;

  ControlSet full_order;
  if (result.nested) {
    SamplerConfig cfg = options.sampler_config;
    cfg.m_exact = n;
    full_order = sample_controls(options.sampler, spec, mu.points, cfg, options.seed);
  }

  Index m = 1;
  for (;;) {
    ControlSet current;
    if (result.nested) {
      current = full_order;
      current.indices.resize(static_cast<std::size_t>(m));
      current.params["m"] = static_cast<double>(m);
    } else {
      SamplerConfig cfg = options.sampler_config;
      cfg.m_exact = m;
      const std::uint64_t seed_m = Rng(options.seed, static_cast<std::uint64_t>(m)).next_u64();
      current = sample_controls(options.sampler, spec, mu.points, cfg, seed_m);
    }
    const double trace = nystrom_trace_error(spec, mu.points, current);
    result.trajectory.emplace_back(m, trace);
    result.controls = std::move(current);
    if (trace <= options.tau || m == n) break;
    m = options.growth == Growth::AddOne ? m + 1 : std::min(2 * m, n);
  }
  result.controls.params["tau"] = options.tau;
  result.controls.params["nested"] = result.nested ? 1.0 : 0.0;
  return result;
}

std::vector<ErrorCurveRow> error_curve(const DiracMeasure& mu, const KernelSpec& spec,
                                       const std::vector<Index>& m_values, const std::vector<SamplerKind>& samplers,
                                       const std::vector<std::uint64_t>& seeds, const SamplerConfig& base) {
  mu.validate();
  spec.require_space(mu.space);
  for (Index m : m_values) {
    if (m < 1 || m > mu.size()) throw InvalidArgument("error curve sizes must satisfy 1 <= m <= n");
  }
  const double norm_mu = dual_norm2(mu, spec);

  struct Cell {
    SamplerKind sampler;
    Index m;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto s : samplers) {
    for (Index m : m_values) {
      for (auto seed : seeds) cells.push_back({s, m, seed});
    }
  }

  std::vector<ErrorCurveRow> rows(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    SamplerConfig cfg = base;
    cfg.m_exact = cell.m;
    cfg.rank = rank_for_sample_size(cell.m, cfg.delta);
    const auto start = Clock::now();
    const ControlSet controls = sample_controls(cell.sampler, spec, mu.points, cfg, cell.seed);
    const DiracMeasure approx = project_measure(mu, controls, spec);
    const double elapsed = seconds_since(start);
    const double err =
        clamp_distance2(norm_mu - 2.0 * dual_inner(mu, approx, spec) + dual_norm2(approx, spec), norm_mu);
    rows[c] = {sampler_name(cell.sampler), cell.m, cell.seed, err,
               nystrom_trace_error(spec, mu.points, controls), elapsed};
  }
  return rows;
}

void write_error_curve_csv(std::ostream& out, const std::vector<ErrorCurveRow>& rows) {
  char buf[64];
  auto num = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, ptr);
  };
  out << "sampler,m,seed,squared_error,trace_error,wall_time_s\n";
  for (const auto& r : rows) {
    out << r.sampler << ',' << r.m << ',' << r.seed << ',' << num(r.squared_error) << ',' << num(r.trace_error) << ','
        << num(r.wall_time_s) << '\n';
  }
}

}  // namespace measurezip
