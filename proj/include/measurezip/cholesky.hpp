#pragma once

#include "measurezip/types.hpp"

namespace measurezip {

struct JitterPolicy {
  // Relative to the mean diagonal. A zero start means "try unregularized
  // first"; escalation then begins at 1e-10.
  double initial = 1e-10;
  double growth = 10.0;
  double maximum = 1e-6;
};

// Cholesky factorization of a symmetric PSD matrix with escalating diagonal
// jitter: K + eps * mean(diag K) * I. Throws NumericalError when even the
// largest jitter fails.
class RegularizedCholesky {
 public:
  RegularizedCholesky() = default;
  explicit RegularizedCholesky(const Matrix& k, JitterPolicy policy = {});

  [[nodiscard]] Matrix solve(const Matrix& rhs) const;
  [[nodiscard]] Vector solve(const Vector& rhs) const;
  // L^{-1} rhs.
  [[nodiscard]] Matrix solve_lower(const Matrix& rhs) const;
  [[nodiscard]] Matrix lower() const;
  [[nodiscard]] double log_determinant() const;

  // Absolute diagonal shift that was added.
  [[nodiscard]] double jitter() const { return jitter_; }
  [[nodiscard]] Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

}  // namespace measurezip
