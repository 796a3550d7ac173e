#include "measurezip/kernels.hpp"

#include <cmath>
#include <sstream>

namespace measurezip {

namespace {

void check_bandwidth(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("kernel bandwidths must be positive and finite");
}

}  // namespace

KernelSpec::KernelSpec(Kind kind, std::vector<double> sigmas) : kind_(kind), sigmas_(std::move(sigmas)) {
  for (double s : sigmas_) {
    check_bandwidth(s);
    inv_two_sigma2_.push_back(1.0 / (2.0 * s * s));
  }
}

KernelSpec KernelSpec::gaussian(double sigma) { return KernelSpec(Kind::Gaussian, {sigma}); }

KernelSpec KernelSpec::spherical_gaussian(double sigma) { return KernelSpec(Kind::SphericalGaussian, {sigma}); }

KernelSpec KernelSpec::linear_spherical() { return KernelSpec(Kind::LinearSpherical, {}); }

KernelSpec KernelSpec::sum_of_gaussians(std::vector<double> sigmas) {
  if (sigmas.empty()) throw InvalidArgument("sum of Gaussians needs at least one bandwidth");
  return KernelSpec(Kind::SumOfGaussians, std::move(sigmas));
}

KernelSpec KernelSpec::product(const KernelSpec& spatial, const KernelSpec& spherical) {
  if (!spatial.is_spatial() || !spherical.is_spherical()) {
    throw InvalidArgument("product kernel must combine a spatial kernel with a spherical kernel");
  }
  KernelSpec k(Kind::Product, {});
  k.spatial_ = std::make_shared<const KernelSpec>(spatial);
  k.spherical_ = std::make_shared<const KernelSpec>(spherical);
  return k;
}

const KernelSpec& KernelSpec::spatial() const {
  if (kind_ != Kind::Product) throw InvalidArgument("spatial() requires a product kernel");
  return *spatial_;
}

const KernelSpec& KernelSpec::spherical() const {
  if (kind_ != Kind::Product) throw InvalidArgument("spherical() requires a product kernel");
  return *spherical_;
}

bool KernelSpec::accepts(const BaseSpace& space) const {
  if (kind_ == Kind::Product) return space.kind == BaseSpace::Kind::Oriented;
  if (is_spatial()) return space.kind == BaseSpace::Kind::Euclidean;
  return false;
}

void KernelSpec::require_space(const BaseSpace& space) const {
  if (!accepts(space)) {
    throw InvalidArgument("kernel " + describe() + " cannot act on base space " + space.name());
  }
}

double KernelSpec::eval_raw(const double* x, const double* y, int width) const {
  switch (kind_) {
    case Kind::Gaussian: {
      double r2 = 0.0;
      for (int c = 0; c < width; ++c) {
        const double d = x[c] - y[c];
        r2 += d * d;
      }
      return std::exp(-r2 * inv_two_sigma2_[0]);
    }
    case Kind::SumOfGaussians: {
      double r2 = 0.0;
      for (int c = 0; c < width; ++c) {
        const double d = x[c] - y[c];
        r2 += d * d;
      }
      double k = 0.0;
      for (double c2 : inv_two_sigma2_) k += std::exp(-r2 * c2);
      return k;
    }
    case Kind::SphericalGaussian: {
      double dot = 0.0;
      for (int c = 0; c < width; ++c) dot += x[c] * y[c];
      return std::exp(-(2.0 - 2.0 * dot) * inv_two_sigma2_[0]);
    }
    case Kind::LinearSpherical: {
      double dot = 0.0;
      for (int c = 0; c < width; ++c) dot += x[c] * y[c];
      return dot;
    }
    case Kind::Product: {
      const int d = width / 2;
      return spatial_->eval_raw(x, y, d) * spherical_->eval_raw(x + d, y + d, d);
    }
  }
  return 0.0;
}

double KernelSpec::eval_grad_raw(const double* x, const double* y, int width, double* grad) const {
  switch (kind_) {
    case Kind::Gaussian:
    case Kind::SumOfGaussians: {
      double r2 = 0.0;
      for (int c = 0; c < width; ++c) {
        const double d = x[c] - y[c];
        r2 += d * d;
      }
      double k = 0.0;
      double slope = 0.0;  // d k / d (r^2)
      for (double c2 : inv_two_sigma2_) {
        const double e = std::exp(-r2 * c2);
        k += e;
        slope -= c2 * e;
      }
      for (int c = 0; c < width; ++c) grad[c] = 2.0 * slope * (x[c] - y[c]);
      return k;
    }
    case Kind::SphericalGaussian: {
      double dot = 0.0;
      for (int c = 0; c < width; ++c) dot += x[c] * y[c];
      const double k = std::exp(-(2.0 - 2.0 * dot) * inv_two_sigma2_[0]);
      for (int c = 0; c < width; ++c) grad[c] = 2.0 * inv_two_sigma2_[0] * k * y[c];
      return k;
    }
    case Kind::LinearSpherical: {
      double dot = 0.0;
      for (int c = 0; c < width; ++c) {
        dot += x[c] * y[c];
        grad[c] = y[c];
      }
      return dot;
    }
    case Kind::Product: {
      const int d = width / 2;
      const double kp = spatial_->eval_grad_raw(x, y, d, grad);
      const double ks = spherical_->eval_grad_raw(x + d, y + d, d, grad + d);
      for (int c = 0; c < d; ++c) grad[c] *= ks;
      for (int c = d; c < width; ++c) grad[c] *= kp;
      return kp * ks;
    }
  }
  return 0.0;
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  return eval_raw(x.data(), y.data(), static_cast<int>(x.size()));
}

double KernelSpec::value_and_gradient(std::span<const double> x, std::span<const double> y,
                                      std::span<double> grad_x) const {
  return eval_grad_raw(x.data(), y.data(), static_cast<int>(x.size()), grad_x.data());
}

double KernelSpec::diagonal(std::span<const double> x) const {
  switch (kind_) {
    case Kind::Gaussian: return 1.0;
    case Kind::SumOfGaussians: return static_cast<double>(sigmas_.size());
    default: return (*this)(x, x);
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Gaussian: os << "gaussian(" << sigmas_[0] << ")"; break;
    case Kind::SphericalGaussian: os << "spherical_gaussian(" << sigmas_[0] << ")"; break;
    case Kind::LinearSpherical: os << "linear_spherical"; break;
    case Kind::SumOfGaussians: {
      os << "sum_of_gaussians(";
      for (std::size_t i = 0; i < sigmas_.size(); ++i) os << (i ? "," : "") << sigmas_[i];
      os << ")";
      break;
    }
    case Kind::Product: os << "product(" << spatial_->describe() << ", " << spherical_->describe() << ")"; break;
  }
  return os.str();
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  if (a.kind_ != b.kind_ || a.sigmas_ != b.sigmas_) return false;
  if (a.kind_ == KernelSpec::Kind::Product) return *a.spatial_ == *b.spatial_ && *a.spherical_ == *b.spherical_;
  return true;
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("kernel arguments differ in dimension");
  if (spec.kind() == KernelSpec::Kind::Product && x.size() % 2 != 0) {
    throw InvalidArgument("product kernel expects (position, direction) pairs of equal dimension");
  }
  return spec(x, y);
}

Matrix kernel_matrix(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("kernel matrix of an empty point set");
  if (a.cols() != b.cols()) throw InvalidArgument("kernel matrix point sets differ in dimension");
  if (&a == &b) return kernel_matrix(spec, a);
  const Index n = a.rows();
  const Index m = b.rows();
  const auto w = static_cast<std::size_t>(a.cols());
  Matrix k(n, m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const std::span<const double> xi(a.row(i).data(), w);
    for (Index j = 0; j < m; ++j) k(i, j) = spec(xi, std::span<const double>(b.row(j).data(), w));
  }
  return k;
}

Matrix kernel_matrix(const KernelSpec& spec, const PointMatrix& a) {
  if (a.rows() == 0) throw InvalidArgument("kernel matrix of an empty point set");
  const Index n = a.rows();
  const auto w = static_cast<std::size_t>(a.cols());
  Matrix k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i) {
    const std::span<const double> xi(a.row(i).data(), w);
    for (Index j = i; j < n; ++j) k(i, j) = spec(xi, std::span<const double>(a.row(j).data(), w));
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) k(i, j) = k(j, i);
  }
  return k;
}

Matrix kernel_matrix_rows(const KernelSpec& spec, const PointMatrix& a, std::span<const Index> rows,
                          const PointMatrix& b) {
  const auto m = static_cast<Index>(rows.size());
  const auto w = static_cast<std::size_t>(a.cols());
  Matrix k(m, b.rows());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < m; ++r) {
    const std::span<const double> xi(a.row(rows[static_cast<std::size_t>(r)]).data(), w);
    for (Index j = 0; j < b.rows(); ++j) k(r, j) = spec(xi, std::span<const double>(b.row(j).data(), w));
  }
  return k;
}

Vector kernel_diagonal(const KernelSpec& spec, const PointMatrix& a) {
  Vector d(a.rows());
  const auto w = static_cast<std::size_t>(a.cols());
  for (Index i = 0; i < a.rows(); ++i) d(i) = spec.diagonal(std::span<const double>(a.row(i).data(), w));
  return d;
}

void require_compatible(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec) {
  if (!(mu.space == kappa.space)) {
    throw InvalidArgument("measures live on different spaces: " + mu.space.name() + " vs " + kappa.space.name());
  }
  if (mu.weight_width() != kappa.weight_width()) throw InvalidArgument("measures have different weight widths");
  if (mu.points.cols() != mu.space.point_width() || kappa.points.cols() != kappa.space.point_width()) {
    throw InvalidArgument("measure point width does not match its space");
  }
  spec.require_space(mu.space);
}

double dual_inner(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec) {
  require_compatible(mu, kappa, spec);
  const Index n = mu.size();
  const Index m = kappa.size();
  const auto w = static_cast<std::size_t>(mu.points.cols());
  Vector partial(n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const std::span<const double> xi(mu.points.row(i).data(), w);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(kappa.weight_width());
    for (Index j = 0; j < m; ++j) {
      acc += spec(xi, std::span<const double>(kappa.points.row(j).data(), w)) * kappa.weights.row(j);
    }
    partial(i) = acc.dot(mu.weights.row(i));
  }
  return partial.sum();
}

double dual_norm2(const DiracMeasure& mu, const KernelSpec& spec) {
  require_compatible(mu, mu, spec);
  const Index n = mu.size();
  const auto w = static_cast<std::size_t>(mu.points.cols());
  Vector partial(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i) {
    const std::span<const double> xi(mu.points.row(i).data(), w);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(mu.weight_width());
    for (Index j = i + 1; j < n; ++j) {
      acc += spec(xi, std::span<const double>(mu.points.row(j).data(), w)) * mu.weights.row(j);
    }
    partial(i) = 2.0 * acc.dot(mu.weights.row(i)) + spec.diagonal(xi) * mu.weights.row(i).squaredNorm();
  }
  return partial.sum();
}

double clamp_distance2(double value, double scale) {
  if (value >= 0.0) return value;
  if (value >= -1e-9 * scale) return 0.0;
  throw NumericalError("negative squared dual distance " + std::to_string(value) +
                       "; kernel is not positive semidefinite on these points");
}

double dual_distance2(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec) {
  const double a = dual_norm2(mu, spec);
  const double b = dual_norm2(kappa, spec);
  const double c = dual_inner(mu, kappa, spec);
  return clamp_distance2(a - 2.0 * c + b, a + b);
}

}  // namespace measurezip
