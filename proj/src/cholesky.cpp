#include "measurezip/cholesky.hpp"

#include <cmath>
#include <sstream>

namespace measurezip {

namespace {

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal();
  return d.allFinite() && (d.array() > 0.0).all();
}

}  // namespace

RegularizedCholesky::RegularizedCholesky(const Matrix& k, JitterPolicy policy) {
  if (k.rows() != k.cols() || k.rows() == 0) throw InvalidArgument("Cholesky needs a non-empty square matrix");
  if (!k.allFinite()) throw NumericalError("matrix to factor has non-finite entries");
  const double mean_diag = k.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;

  double rel = policy.initial;
  if (rel <= 0.0) {
    llt_.compute(k);
    if (factor_ok(llt_)) return;
    rel = 1e-10;
  }
  Matrix shifted = k;
  for (; rel <= policy.maximum * (1.0 + 1e-9); rel *= policy.growth) {
    jitter_ = rel * scale;
    shifted.diagonal() = k.diagonal().array() + jitter_;
    llt_.compute(shifted);
    if (factor_ok(llt_)) return;
  }
  std::ostringstream os;
  os << "Cholesky factorization failed even with diagonal jitter " << policy.maximum << " x mean diagonal";
  throw NumericalError(os.str());
}

Matrix RegularizedCholesky::solve(const Matrix& rhs) const { return llt_.solve(rhs); }

Vector RegularizedCholesky::solve(const Vector& rhs) const { return llt_.solve(rhs); }

Matrix RegularizedCholesky::solve_lower(const Matrix& rhs) const { return llt_.matrixL().solve(rhs); }

Matrix RegularizedCholesky::lower() const { return llt_.matrixL(); }

double RegularizedCholesky::log_determinant() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

}  // namespace measurezip
