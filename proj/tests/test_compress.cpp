#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace mzt;

namespace {

DiracMeasure two_atoms_on_a_line() {
  DiracMeasure mu{BaseSpace::euclidean(3), PointMatrix::Zero(2, 3), PointMatrix::Ones(2, 1)};
  mu.points(1, 0) = 1.0;
  return mu;
}

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

ControlSet controls_of(std::vector<Index> idx) {
  ControlSet c;
  c.indices = std::move(idx);
  return c;
}

DiracMeasure two_clusters(Rng& rng, Index n) {
  DiracMeasure mu{BaseSpace::euclidean(3), PointMatrix(n, 3), PointMatrix(n, 3)};
  for (Index i = 0; i < n; ++i) {
    const Vec3 c = i % 2 == 0 ? Vec3(0, 0, 0) : Vec3(2.5, 0, 0);
    mu.points.row(i) = (c + 0.3 * Vec3(rng.normal(), rng.normal(), rng.normal())).transpose();
    mu.weights.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
  }
  return mu;
}

}  // namespace

TEST_CASE("projection onto all atoms reproduces the measure") {
  Rng rng(1);
  for (bool oriented : {false, true}) {
    const auto mu = random_measure(rng, 30, oriented);
    const auto spec = oriented ? varifold_kernel() : KernelSpec::gaussian(0.5);
    const auto p = project_measure(mu, iota_indices(30), spec);
    CHECK(dual_distance2(mu, p, spec) <= 1e-8 * dual_norm2(mu, spec));
  }
}

TEST_CASE("two atoms projected onto one") {
  const auto mu = two_atoms_on_a_line();
  const auto p = project_measure(mu, std::vector<Index>{0}, KernelSpec::gaussian(1.0));
  const ld expected = 1 + std::exp(-0.5L);
  CHECK(rel_diff(p.weights(0, 0), expected, expected) <= 1e-14);
  const auto o = project_ld(mu, {0}, KernelSpec::gaussian(1.0));
  CHECK(rel_diff(p.weights(0, 0), o[0][0], o[0][0]) <= 1e-14);
  CHECK(p.points.row(0) == mu.points.row(0));
}

TEST_CASE("projection matches the dense oracle") {
  Rng rng(2);
  const auto mu = random_measure(rng, 50, true, 0.8);
  const auto spec = varifold_kernel(0.6, 0.7);
  const std::vector<Index> c{1, 4, 9, 16, 25, 36, 49, 3, 30, 12};
  const auto p = project_measure(mu, c, spec);
  const auto o = project_ld(mu, c, spec);
  ld scale = 0;
  for (const auto& r : o) scale = std::max(scale, std::fabs(r[0]));
  for (std::size_t a = 0; a < c.size(); ++a) CHECK(rel_diff(p.weights(static_cast<Index>(a), 0), o[a][0], scale) <= 1e-10);

  const double err = compression_error2(mu, p, spec);
  const ld err_oracle = dual_distance2_ld(mu, p, spec);
  CHECK(rel_diff(err, err_oracle, dual_inner_ld(mu, mu, spec)) <= 1e-10);
  CHECK(compression_error2(mu, mu, spec) == 0.0);
}

TEST_CASE("projection properties: Pythagoras, idempotence, permutation invariance") {
  Rng rng(3);
  const auto spec = KernelSpec::gaussian(0.7);
  const auto mu = random_measure(rng, 80, false, 0.8);
  const std::vector<Index> c{0, 5, 10, 15, 20, 25, 30, 35};
  const auto p = project_measure(mu, c, spec);
  const double n_mu = dual_norm2(mu, spec), n_p = dual_norm2(p, spec);
  CHECK(n_p <= n_mu * (1 + 1e-10));
  CHECK(std::abs(dual_distance2(mu, p, spec) - (n_mu - n_p)) <= 1e-8 * n_mu);

  const auto again = project_measure(p, iota_indices(8), spec);
  CHECK((again.weights - p.weights).norm() <= 1e-10 * p.weights.norm());

  // Move the controls to the front and reverse everything else.
  std::vector<Index> perm = c;
  for (Index i = 79; i >= 0; --i) {
    if (std::find(c.begin(), c.end(), i) == c.end()) perm.push_back(i);
  }
  const auto shuffled = mu.select(perm);
  const auto q = project_measure(shuffled, iota_indices(8), spec);
  const double e1 = dual_distance2(mu, p, spec), e2 = dual_distance2(shuffled, q, spec);
  CHECK(std::abs(e1 - e2) <= 1e-10 * n_mu);
}

TEST_CASE("Nystrom KRR weights") {
  const auto mu2 = two_atoms_on_a_line();
  const auto k = KernelSpec::gaussian(1.0);
  const auto w = nystrom_krr_weights(mu2, controls_of({0}), k, 0.1);
  const ld e = std::exp(-0.5L), r = 0.1L;
  const ld y0 = 1 + e + r, y1 = e + 1 + r;
  const ld expected = (y0 + e * y1) / (1 + e * e + r);
  CHECK(rel_diff(w.weights(0, 0), expected, expected) <= 1e-10);

  Rng rng(4);
  const auto mu = random_measure(rng, 30, false, 0.6);
  const auto full = nystrom_krr_weights(mu, controls_of(iota_indices(30)), k, 1e-10);
  CHECK((full.weights - mu.weights).cwiseAbs().maxCoeff() <= 1e-6);

  const auto c = controls_of({2, 7, 11, 19, 23, 28});
  const double krr_err = dual_distance2(mu, nystrom_krr_weights(mu, c, k, 0.1), k);
  const double proj_err = dual_distance2(mu, project_measure(mu, c, k), k);
  CHECK(krr_err >= proj_err - 1e-10);

  CHECK_THROWS_AS(nystrom_krr_weights(mu, c, k, 0.0), InvalidArgument);
  CHECK_THROWS_AS(nystrom_krr_weights(mu, c, k, 0.1, 10), InvalidArgument);
}

TEST_CASE("error bound chain: projection <= KRR <= C * trace") {
  Rng rng(5);
  const auto k = KernelSpec::gaussian(0.6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mu = random_measure(rng, 60, false, 0.7);
    const double mu_reg = 0.5;
    const auto c = uniform_sample(60, 12, static_cast<std::uint64_t>(trial));
    const double proj = dual_distance2(mu, project_measure(mu, c, k), k);
    const double krr = dual_distance2(mu, nystrom_krr_weights(mu, c, k, mu_reg), k);
    const Matrix y_tilde = kernel_matrix(k, mu.points) * mu.weights + mu_reg * Matrix(mu.weights);
    const double bound_const = 2.0 * 3.0 / (mu_reg * mu_reg) * y_tilde.squaredNorm();
    const double trace = nystrom_trace_error(k, mu.points, c);
    CHECK(proj <= krr + 1e-10);
    CHECK(krr <= bound_const * trace);
  }
}

TEST_CASE("coincident controls are absorbed by the jitter") {
  DiracMeasure mu{BaseSpace::euclidean(3), PointMatrix::Zero(3, 3), PointMatrix::Ones(3, 3)};
  mu.points(1, 0) = 1.0;  // atoms 0 and 2 coincide
  const auto k = KernelSpec::gaussian(1.0);
  const auto p = project_measure(mu, std::vector<Index>{0, 1, 2}, k);
  CHECK(p.weights.allFinite());
  CHECK(dual_distance2(mu, p, k) <= 1e-8 * dual_norm2(mu, k));
  CHECK_THROWS_AS(project_measure(mu, std::vector<Index>{0, 3}, k), InvalidArgument);
}

TEST_CASE("compress fills the result") {
  Rng rng(6);
  const auto mu = random_measure(rng, 100, true);
  SamplerConfig cfg;
  cfg.m_exact = 20;
  const auto res = compress(mu, varifold_kernel(), SamplerKind::Uniform, cfg, 3, true);
  CHECK(res.compressed.size() == 20);
  CHECK(res.controls.size() == 20);
  REQUIRE(res.squared_error.has_value());
  CHECK(*res.squared_error >= 0.0);
  for (Index i = 0; i < 20; ++i) {
    CHECK(res.compressed.points.row(i) == mu.points.row(res.controls.indices[static_cast<std::size_t>(i)]));
  }
  CHECK(res.trace_error == doctest::Approx(nystrom_trace_error(varifold_kernel(), mu.points, res.controls)));
}

TEST_CASE("choose_m_trace extremes") {
  Rng rng(7);
  const auto mu = random_measure(rng, 40, false);
  const auto k = KernelSpec::gaussian(0.5);
  TraceSearchOptions opt;
  opt.tau = 40.0;
  CHECK(choose_m_trace(mu, k, opt).controls.size() == 1);
  opt.tau = 0.0;
  const auto all = choose_m_trace(mu, k, opt);
  CHECK(all.controls.size() == 40);
  CHECK(all.trajectory.back().first == 40);
  opt.growth = Growth::AddOne;
  opt.nested = false;
  opt.sampler = SamplerKind::Uniform;
  const auto lin = choose_m_trace(mu, k, opt);
  CHECK(lin.trajectory.size() == 40);
  CHECK_FALSE(lin.nested);
  CHECK(lin.controls.params.at("nested") == 0.0);
}

TEST_CASE("choose_m_trace agrees with a dense bisection over the same order") {
  Rng rng(8);
  const Index n = 200;
  const auto mu = two_clusters(rng, n);
  const auto k = KernelSpec::gaussian(0.4);
  for (Growth g : {Growth::AddOne, Growth::Double}) {
    TraceSearchOptions opt;
    opt.tau = 0.05 * static_cast<double>(n);
    opt.growth = g;
    opt.seed = 11;
    const auto res = choose_m_trace(mu, k, opt);

    // Same priority order, drawn directly.
    SamplerConfig cfg;
    cfg.m_exact = n;
    const auto order = sample_controls(SamplerKind::RecursiveRLS, k, mu.points, cfg, 11).indices;
    auto trace_at = [&](Index m) {
      const std::vector<Index> c(order.begin(), order.begin() + m);
      return static_cast<double>(trace_error_ld(k, mu.points, c));
    };
    Index lo = 1, hi = n;
    while (lo < hi) {
      const Index mid = (lo + hi) / 2;
      if (trace_at(mid) <= opt.tau) hi = mid;
      else lo = mid + 1;
    }
    const Index got = res.controls.size();
    if (g == Growth::AddOne) {
      CHECK(got == lo);
    } else {
      CHECK(got >= lo);
      CHECK(got < std::max<Index>(2 * lo, 2));
    }
    // Nested trajectories are monotone.
    for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
      CHECK(res.trajectory[i].second <= res.trajectory[i - 1].second + 1e-8);
    }
  }
}

TEST_CASE("error curve rows and CSV") {
  Rng rng(9);
  const auto mu = random_measure(rng, 60, false, 0.8);
  const auto k = KernelSpec::gaussian(0.6);
  const auto rows =
      error_curve(mu, k, {5, 60}, {SamplerKind::RecursiveRLS, SamplerKind::Uniform}, {1, 2, 3});
  CHECK(rows.size() == 12);
  const double n2 = dual_norm2(mu, k);
  for (const auto& r : rows) {
    if (r.m == 60) CHECK(r.squared_error <= 1e-8 * n2);
    CHECK(r.trace_error >= 0.0);
  }
  // Cells are reproducible.
  const auto again = error_curve(mu, k, {5, 60}, {SamplerKind::RecursiveRLS, SamplerKind::Uniform}, {1, 2, 3});
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].squared_error == again[i].squared_error);

  std::ostringstream os;
  write_error_curve_csv(os, rows);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "sampler,m,seed,squared_error,trace_error,wall_time_s");
  int count = 0;
  while (std::getline(is, line)) ++count;
  CHECK(count == 12);
  CHECK_THROWS_AS(error_curve(mu, k, {61}, {SamplerKind::Uniform}, {1}), InvalidArgument);
}
