#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace mzt;

namespace {

DeformationConfig deformation(std::vector<double> sigmas, int steps, double lambda = 100.0) {
  DeformationConfig cfg;
  cfg.kernel_v = sigmas.size() == 1 ? KernelSpec::gaussian(sigmas[0]) : KernelSpec::sum_of_gaussians(sigmas);
  cfg.n_steps = steps;
  cfg.lambda_match = lambda;
  return cfg;
}

double max_oracle_gap(const PointMatrix& got, const std::vector<std::array<ld, 3>>& want) {
  double worst = 0.0;
  for (Index i = 0; i < got.rows(); ++i) {
    for (int d = 0; d < 3; ++d) {
      worst = std::max(worst, rel_diff(got(i, d), want[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)], 1));
    }
  }
  return worst;
}

// Small matching instance on an 80-triangle sphere.
MatchProblem small_problem(Representation rep, std::vector<double> sigmas, bool compressed) {
  MatchProblem pb;
  pb.template_mesh = shapes::icosphere(1);
  pb.rep = rep;
  pb.kernel_w = rep == Representation::Varifold ? varifold_kernel(0.5, 0.8) : KernelSpec::gaussian(0.5);
  const auto target_mesh = shapes::scaled(shapes::icosphere(1), Vec3(1.1, 0.9, 1.0));
  const auto target = mesh_measure(target_mesh, rep);
  pb.target = compressed ? project_measure(target, uniform_sample(target.size(), 30, 5), pb.kernel_w) : target;
  std::vector<Index> tri = uniform_sample(80, 20, 3).indices;
  if (compressed) pb.controls = tri;
  pb.carriers = carrier_positions(pb.template_mesh, tri);
  pb.cfg = deformation(std::move(sigmas), 5, 10.0);
  return pb;
}

PointMatrix random_momenta(Rng& rng, Index n, double scale) {
  return random_points(rng, n, 3, scale);
}

double inf_norm(const PointMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("zero momenta leave everything at rest") {
  Rng rng(1);
  const auto q0 = random_points(rng, 6, 3);
  const auto cfg = deformation({0.5}, 7);
  const auto st = shoot(q0, PointMatrix::Zero(6, 3), cfg);
  CHECK(st.q.size() == 8);
  for (const auto& q : st.q) CHECK(q == q0);
  CHECK(st.energy == 0.0);
  const auto x = random_points(rng, 10, 3);
  CHECK(flow_points(x, st, cfg) == x);
}

TEST_CASE("a single carrier moves in a straight line") {
  PointMatrix q0(1, 3), p0(1, 3);
  q0 << 0.1, 0.2, 0.3;
  p0 << 1.0, -0.5, 0.25;
  const auto st = shoot(q0, p0, deformation({0.4}, 10));
  for (const auto& p : st.p) CHECK(p == p0);
  CHECK((st.q.back() - (q0 + p0)).norm() <= 1e-14);
  CHECK(st.energy == doctest::Approx(p0.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("shooting and flow match the scalar oracle") {
  Rng rng(2);
  for (const auto& sigmas : {std::vector<double>{0.5}, std::vector<double>{1.0, 0.5, 0.25, 0.125}}) {
    const auto q0 = random_points(rng, 2, 3, 0.3);
    const auto p0 = random_points(rng, 2, 3, 0.5);
    const auto cfg = deformation(sigmas, 2);
    const auto st = shoot(q0, p0, cfg);
    const auto x0 = random_points(rng, 5, 3, 0.5);
    const auto o = oracle_shoot(q0, p0, x0, sigmas, 2);
    for (int t = 0; t <= 2; ++t) {
      CHECK(max_oracle_gap(st.q[static_cast<std::size_t>(t)], o.q[static_cast<std::size_t>(t)]) <= 1e-12);
      CHECK(max_oracle_gap(st.p[static_cast<std::size_t>(t)], o.p[static_cast<std::size_t>(t)]) <= 1e-12);
    }
    CHECK(rel_diff(st.energy, o.energy, std::fabs(o.energy)) <= 1e-12);
    CHECK(max_oracle_gap(flow_points(x0, st, cfg), o.x) <= 1e-12);

    // One carrier, a cloud of five.
    const PointMatrix q1 = q0.topRows(1), p1 = p0.topRows(1);
    const auto s1 = shoot(q1, p1, cfg);
    CHECK(max_oracle_gap(flow_points(x0, s1, cfg), oracle_shoot(q1, p1, x0, sigmas, 2).x) <= 1e-12);
  }
}

TEST_CASE("carriers flowed as points reproduce their own trajectory bit for bit") {
  Rng rng(3);
  const auto q0 = random_points(rng, 12, 3, 0.5);
  const auto p0 = random_momenta(rng, 12, 0.3);
  const auto cfg = deformation({0.6, 0.3}, 9);
  const auto st = shoot(q0, p0, cfg);
  CHECK(flow_points(q0, st, cfg) == st.q.back());
}

TEST_CASE("divergence is reported with the step") {
  PointMatrix q0 = PointMatrix::Zero(2, 3), p0(2, 3);
  q0(1, 0) = 1e-3;
  p0 << 1e200, 0, 0, -1e200, 0, 0;
  CHECK_THROWS_WITH_AS(shoot(q0, p0, deformation({0.5}, 4)), doctest::Contains("step"), NumericalError);
}

TEST_CASE("objective at zero momenta is the weighted data term") {
  auto pb = small_problem(Representation::Varifold, {0.5}, true);
  const auto v = objective(PointMatrix::Zero(20, 3), pb, false);
  const auto mu = mesh_measure(pb.template_mesh, pb.rep);
  const double d = dual_distance2(project_measure(mu, pb.controls, pb.kernel_w), pb.target, pb.kernel_w);
  CHECK(v.energy == 0.0);
  CHECK(v.data == doctest::Approx(d).epsilon(1e-10));
  CHECK(v.total == doctest::Approx(pb.cfg.lambda_match * d).epsilon(1e-10));
}

TEST_CASE("template equal to target is a stationary point") {
  for (bool compressed : {false, true}) {
    auto pb = small_problem(Representation::Current, {0.5}, false);
    const auto mu = mesh_measure(pb.template_mesh, pb.rep);
    if (compressed) {
      pb.controls = uniform_sample(80, 20, 3).indices;
      pb.target = project_measure(mu, pb.controls, pb.kernel_w);
    } else {
      pb.target = mu;
    }
    const auto v = objective(PointMatrix::Zero(20, 3), pb, true);
    CHECK(v.total <= 1e-10);
    CHECK(inf_norm(v.gradient) <= 1e-8);
  }
}

TEST_CASE("objective gradient matches central differences") {
  Rng rng(4);
  for (auto rep : {Representation::Current, Representation::Varifold}) {
    for (const auto& sigmas : {std::vector<double>{0.6}, std::vector<double>{1.0, 0.5, 0.25, 0.125}}) {
      for (bool compressed : {false, true}) {
        const auto pb = small_problem(rep, sigmas, compressed);
        const auto p0 = random_momenta(rng, 20, 0.05);
        const auto v = objective(p0, pb, true);
        PointMatrix fd(20, 3);
        const double h = 1e-5;
        for (Index i = 0; i < 20; ++i) {
          for (int d = 0; d < 3; ++d) {
            PointMatrix a = p0, b = p0;
            a(i, d) += h;
            b(i, d) -= h;
            fd(i, d) = (objective(a, pb, false).total - objective(b, pb, false).total) / (2 * h);
          }
        }
        CHECK(inf_norm(v.gradient - fd) <= 1e-4 * inf_norm(fd));
      }
    }
  }
}

TEST_CASE("without a data term the gradient is the energy gradient") {
  Rng rng(5);
  auto pb = small_problem(Representation::Varifold, {0.5, 0.25}, true);
  pb.cfg.lambda_match = 0.0;
  const auto p0 = random_momenta(rng, 20, 0.1);
  const auto v = objective(p0, pb, true);
  CHECK(v.total == v.energy);
  CHECK(v.total == doctest::Approx(shoot(pb.carriers, p0, pb.cfg).energy).epsilon(1e-14));
  const double h = 1e-5;
  double worst = 0.0, scale = 0.0;
  for (Index i = 0; i < 20; ++i) {
    for (int d = 0; d < 3; ++d) {
      PointMatrix a = p0, b = p0;
      a(i, d) += h;
      b(i, d) -= h;
      const double fd = (shoot(pb.carriers, a, pb.cfg).energy - shoot(pb.carriers, b, pb.cfg).energy) / (2 * h);
      worst = std::max(worst, std::abs(fd - v.gradient(i, d)));
      scale = std::max(scale, std::abs(fd));
    }
  }
  CHECK(worst <= 1e-4 * scale);
}

TEST_CASE("Hausdorff distance") {
  PointMatrix a(1, 3), b(1, 3);
  a << 0, 0, 0;
  b << 1, 0, 0;
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK(hausdorff_distance(a, b) == 1.0);
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    const auto x = random_points(rng, 100, 3, t + 1.0);
    const auto y = random_points(rng, 100 + 37 * t, 3, 1.0);
    CHECK(hausdorff_distance(x, y) == hausdorff_brute(x, y));
  }
  const auto big_a = random_points(rng, 3000, 3), big_b = random_points(rng, 2500, 3);
  CHECK(hausdorff_distance(big_a, big_b) == hausdorff_brute(big_a, big_b));
}

TEST_CASE("matching a mesh to itself stops immediately") {
  const auto mesh = shapes::icosphere(1);
  DeformationConfig cfg = deformation({0.5}, 5);
  MatchOptions opt;
  opt.rep = Representation::Current;
  const auto res = compressed_match(mesh, mesh, cfg, opt);
  CHECK(res.iterations == 0);
  CHECK(res.stop_reason == "stationary");
  REQUIRE(res.hausdorff.has_value());
  CHECK(*res.hausdorff == 0.0);
  CHECK(res.trajectory.front().total <= 1e-10);
}

TEST_CASE("backtracking matching decreases the objective") {
  const auto tmpl = shapes::icosphere(1);
  const auto target = shapes::scaled(tmpl, Vec3(1.15, 0.9, 1.0));
  DeformationConfig cfg = deformation({0.6}, 5, 20.0);
  cfg.max_iters = 25;
  MatchOptions opt;
  opt.kernel_w = varifold_kernel(0.8, 0.8);
  opt.m_template = 60;
  opt.m_target = 60;
  const auto res = compressed_match(tmpl, target, cfg, opt);
  CHECK(res.iterations >= 1);
  for (std::size_t i = 1; i < res.trajectory.size(); ++i) CHECK(res.trajectory[i].total <= res.trajectory[i - 1].total);
  CHECK(res.carriers.rows() == 60);
  CHECK(res.control_triangles.size() == 60);
  REQUIRE(res.hausdorff.has_value());
  CHECK(*res.hausdorff < hausdorff_distance(tmpl.vertices, target.vertices));

  // Identical seeds give identical runs.
  const auto again = compressed_match(tmpl, target, cfg, opt);
  CHECK(again.p0 == res.p0);
}

TEST_CASE("configuration validation") {
  DeformationConfig cfg;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = DeformationConfig{};
  cfg.kernel_v = varifold_kernel();
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  TriangleMesh partly_flat;
  partly_flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)};
  partly_flat.triangles = {{0, 1, 2}, {0, 1, 3}};
  CHECK_THROWS_AS(mesh_measure(partly_flat, Representation::Varifold), NumericalError);
  CHECK(mesh_measure(partly_flat, Representation::Current).size() == 2);
}
