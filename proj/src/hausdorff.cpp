#include "measurezip/registration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace measurezip {

namespace {

// Uniform grid over a point set for exact nearest-neighbour queries.
class Grid {
 public:
  explicit Grid(const PointMatrix& pts) : pts_(pts) {
    lo_ = pts.colwise().minCoeff().transpose();
    const Vec3 ext = pts.colwise().maxCoeff().transpose() - lo_;
    const double cells_per_axis = std::max(1.0, std::ceil(std::cbrt(static_cast<double>(pts.rows()))));
    h_ = ext.maxCoeff() / cells_per_axis;
    if (!(h_ > 0.0)) h_ = 1.0;
    for (int d = 0; d < 3; ++d) dims_[d] = static_cast<long>(std::floor(ext[d] / h_)) + 1;
    cells_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
    for (Index i = 0; i < pts.rows(); ++i) {
      const auto c = cell_of(pts.row(i).transpose());
      cells_[flat(clamp(c))].push_back(i);
    }
  }

  // Smallest squared distance from x to the set.
  [[nodiscard]] double nearest2(const Vec3& x) const {
    const auto c = cell_of(x);
    long r = 0;
    // Rings closer than this cannot intersect the grid.
    for (int d = 0; d < 3; ++d) r = std::max({r, -c[d], c[d] - (dims_[d] - 1)});
    long r_max = 0;
    for (int d = 0; d < 3; ++d) r_max = std::max({r_max, c[d], dims_[d] - 1 - c[d]});

    double best = std::numeric_limits<double>::infinity();
    for (; r <= r_max; ++r) {
      visit_ring(c, r, x, best);
      // Every cell in ring r + 1 is at least r * h away from x.
      const double bound = static_cast<double>(r) * h_;
      if (best <= bound * bound * (1.0 - 1e-9)) break;
    }
    return best;
  }

 private:
  using Cell = std::array<long, 3>;

  [[nodiscard]] Cell cell_of(const Vec3& x) const {
    Cell c;
    for (int d = 0; d < 3; ++d) c[d] = static_cast<long>(std::floor((x[d] - lo_[d]) / h_));
    return c;
  }

  [[nodiscard]] Cell clamp(Cell c) const {
    for (int d = 0; d < 3; ++d) c[d] = std::clamp(c[d], 0L, dims_[d] - 1);
    return c;
  }

  [[nodiscard]] std::size_t flat(const Cell& c) const {
    return static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
  }

  void visit_ring(const Cell& c, long r, const Vec3& x, double& best) const {
    std::array<long, 3> lo, hi;
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max(0L, c[d] - r);
      hi[d] = std::min(dims_[d] - 1, c[d] + r);
    }
    for (long k = lo[2]; k <= hi[2]; ++k) {
      for (long j = lo[1]; j <= hi[1]; ++j) {
        for (long i = lo[0]; i <= hi[0]; ++i) {
          const long cheb = std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])});
          if (cheb != r) continue;
          for (Index p : cells_[flat({i, j, k})]) {
            const double d0 = x[0] - pts_(p, 0), d1 = x[1] - pts_(p, 1), d2 = x[2] - pts_(p, 2);
            best = std::min(best, d0 * d0 + d1 * d1 + d2 * d2);
          }
        }
      }
    }
  }

  const PointMatrix& pts_;
  Vec3 lo_;
  double h_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::vector<Index>> cells_;
};

double directed2(const PointMatrix& from, const Grid& to) {
  double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (Index i = 0; i < from.rows(); ++i) worst = std::max(worst, to.nearest2(from.row(i).transpose()));
  return worst;
}

PointMatrix to_matrix(const std::vector<Vec3>& v) {
  PointMatrix m(static_cast<Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Index>(i)) = v[i].transpose();
  return m;
}

}  // namespace

double hausdorff_distance(const PointMatrix& a, const PointMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("Hausdorff distance needs two non-empty point sets");
  if (a.cols() != 3 || b.cols() != 3) throw InvalidArgument("Hausdorff distance expects 3-D points");
  if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("Hausdorff distance got non-finite coordinates");
  const Grid grid_a(a), grid_b(b);
  return std::sqrt(std::max(directed2(a, grid_b), directed2(b, grid_a)));
}

double hausdorff_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return hausdorff_distance(to_matrix(a), to_matrix(b));
}

}  // namespace measurezip
