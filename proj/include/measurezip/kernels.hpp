#pragma once

#include "measurezip/measures.hpp"
#include "measurezip/types.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace measurezip {

// Scalar kernel on a base space. Spatial variants act on R^d, spherical ones
// on unit vectors, and a product pairs one of each over R^d x S^{d-1}.
class KernelSpec {
 public:
  enum class Kind { Gaussian, SphericalGaussian, LinearSpherical, SumOfGaussians, Product };

  static KernelSpec gaussian(double sigma);
  static KernelSpec spherical_gaussian(double sigma);
  static KernelSpec linear_spherical();
  static KernelSpec sum_of_gaussians(std::vector<double> sigmas);
  static KernelSpec product(const KernelSpec& spatial, const KernelSpec& spherical);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_spatial() const { return kind_ == Kind::Gaussian || kind_ == Kind::SumOfGaussians; }
  [[nodiscard]] bool is_spherical() const {
    return kind_ == Kind::SphericalGaussian || kind_ == Kind::LinearSpherical;
  }
  // Gaussian: {sigma}; SphericalGaussian: {sigma_s}; SumOfGaussians: sigmas.
  [[nodiscard]] const std::vector<double>& bandwidths() const { return sigmas_; }
  [[nodiscard]] const KernelSpec& spatial() const;
  [[nodiscard]] const KernelSpec& spherical() const;

  // Whether points of this space are valid arguments.
  [[nodiscard]] bool accepts(const BaseSpace& space) const;
  void require_space(const BaseSpace& space) const;

  [[nodiscard]] double operator()(std::span<const double> x, std::span<const double> y) const;

  // Value, with the gradient with respect to x written to grad_x.
  double value_and_gradient(std::span<const double> x, std::span<const double> y, std::span<double> grad_x) const;

  // k(x, x) for a point x.
  [[nodiscard]] double diagonal(std::span<const double> x) const;

  [[nodiscard]] std::string describe() const;

  friend bool operator==(const KernelSpec& a, const KernelSpec& b);

 private:
  KernelSpec(Kind kind, std::vector<double> sigmas);

  double eval_raw(const double* x, const double* y, int width) const;
  double eval_grad_raw(const double* x, const double* y, int width, double* grad) const;

  Kind kind_;
  std::vector<double> sigmas_;
  std::vector<double> inv_two_sigma2_;
  std::shared_ptr<const KernelSpec> spatial_;
  std::shared_ptr<const KernelSpec> spherical_;
};

// Free-function form; throws InvalidArgument on dimension mismatch.
double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

// |A| x |B| kernel matrix. The one-argument form evaluates the upper triangle
// and mirrors it, so the result is exactly symmetric.
Matrix kernel_matrix(const KernelSpec& spec, const PointMatrix& a, const PointMatrix& b);
Matrix kernel_matrix(const KernelSpec& spec, const PointMatrix& a);

// Rows of `a` selected by `rows` against all of `b`.
Matrix kernel_matrix_rows(const KernelSpec& spec, const PointMatrix& a, std::span<const Index> rows,
                          const PointMatrix& b);

Vector kernel_diagonal(const KernelSpec& spec, const PointMatrix& a);

// sum_ij k(x_i, y_j) <alpha_i, beta_j>
double dual_inner(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec);
double dual_norm2(const DiracMeasure& mu, const KernelSpec& spec);
// Polarization identity; tiny negative round-off (>= -1e-9 relative) is clamped to 0.
double dual_distance2(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec);

// Kernel-matrix PSD guard for dual_distance2, exposed for reuse.
double clamp_distance2(double value, double scale);

void require_compatible(const DiracMeasure& mu, const DiracMeasure& kappa, const KernelSpec& spec);

}  // namespace measurezip
