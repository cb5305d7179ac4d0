#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tfsep::linalg {

using cd = std::complex<double>;

// Dense complex matrix, row-major.
struct CMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<cd> a;

  CMatrix() = default;
  CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, cd{}) {}

  cd& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const cd& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static CMatrix identity(std::size_t n);
  bool is_hermitian(double rel_tol = 1e-8) const;
  double fro_norm() const;
  cd trace() const;
};

using CVector = std::vector<cd>;

cd dot_h(const CVector& x, const CVector& y);  // x^H y
double norm2(const CVector& x);
CVector matvec(const CMatrix& A, const CVector& x);

// Solves (A + loading * (trace(A).real / n) * I) x = b for square Hermitian A
// via LU with partial pivoting.  Singular systems (with loading 0) raise
// rather than returning NaN.
CVector hermitian_solve(const CMatrix& A, const CVector& b, double loading = 0.0);

// Unit-norm principal eigenvector of a Hermitian PSD matrix by power
// iteration (deterministic all-ones start, 200 iterations max, eigenvalue
// tolerance 1e-10).  Phase fixed so the first nonzero entry is real
// nonnegative.  All-zero input raises.
CVector principal_eigvec(const CMatrix& A);

// argmin_w sum_t weights[t] * |targets[t] - w^H frames[t]|^2 via the normal
// equations A w = b with A = sum w_t y_t y_t^H, b = sum w_t y_t conj(d_t).
// `loading` is the relative diagonal loading applied to A (default 1e-10).
CVector weighted_normal_equations(const std::vector<CVector>& frames,
                                  const CVector& targets,
                                  const std::vector<double>& weights,
                                  double loading = 1e-10);

inline constexpr double kDefaultLoading = 1e-10;

}  // namespace tfsep::linalg
