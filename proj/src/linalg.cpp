#include "tfsep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfsep::linalg {

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

bool CMatrix::is_hermitian(double rel_tol) const {
  if (rows != cols) return false;
  double scale = fro_norm();
  if (scale == 0.0) return true;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = i; j < cols; ++j)
      if (std::abs(at(i, j) - std::conj(at(j, i))) > rel_tol * scale) return false;
  return true;
}

double CMatrix::fro_norm() const {
  double s = 0.0;
  for (const cd& v : a) s += std::norm(v);
  return std::sqrt(s);
}

cd CMatrix::trace() const {
  cd t{};
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += at(i, i);
  return t;
}

cd dot_h(const CVector& x, const CVector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot_h: size mismatch");
  cd s{};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

double norm2(const CVector& x) {
  double s = 0.0;
  for (const cd& v : x) s += std::norm(v);
  return std::sqrt(s);
}

CVector matvec(const CMatrix& A, const CVector& x) {
  if (A.cols != x.size()) throw std::invalid_argument("matvec: size mismatch");
  CVector y(A.rows, cd{});
  for (std::size_t i = 0; i < A.rows; ++i) {
    cd s{};
    const cd* row = &A.a[i * A.cols];
    for (std::size_t j = 0; j < A.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

namespace {

// In-place LU with partial pivoting; returns false on a vanishing pivot.
bool lu_solve(CMatrix m, CVector rhs, CVector& x) {
  const std::size_t n = m.rows;
  double scale = 0.0;
  for (const cd& v : m.a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  const double tiny = scale * 1e-13 * static_cast<double>(n);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(m.at(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(m.at(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best <= tiny) return false;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m.at(k, j), m.at(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    const cd pivot = m.at(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cd f = m.at(i, k) / pivot;
      if (f == cd{}) continue;
      for (std::size_t j = k + 1; j < n; ++j) m.at(i, j) -= f * m.at(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  x.assign(n, cd{});
  for (std::size_t ii = n; ii-- > 0;) {
    cd s = rhs[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= m.at(ii, j) * x[j];
    x[ii] = s / m.at(ii, ii);
  }
  return true;
}

}  // namespace

CVector hermitian_solve(const CMatrix& A, const CVector& b, double loading) {
  if (A.rows != A.cols) throw std::invalid_argument("hermitian_solve: matrix not square");
  if (A.rows != b.size()) throw std::invalid_argument("hermitian_solve: dimension mismatch");
  if (loading < 0.0) throw std::invalid_argument("hermitian_solve: negative loading");
  if (!A.is_hermitian()) throw std::invalid_argument("hermitian_solve: matrix not Hermitian");

  const std::size_t n = A.rows;
  CMatrix m = A;
  if (loading > 0.0) {
    const double shift = loading * A.trace().real() / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) += shift;
  }
  CVector x;
  if (!lu_solve(std::move(m), b, x))
    throw std::runtime_error("hermitian_solve: rank-deficient matrix (loading too small)");
  return x;
}

CVector principal_eigvec(const CMatrix& A) {
  if (A.rows != A.cols) throw std::invalid_argument("principal_eigvec: matrix not square");
  if (!A.is_hermitian()) throw std::invalid_argument("principal_eigvec: matrix not Hermitian");
  const std::size_t n = A.rows;
  const double a_norm = A.fro_norm();
  if (a_norm == 0.0) throw std::runtime_error("principal_eigvec: zero matrix");

  auto normalize = [](CVector& v) {
    const double nv = norm2(v);
    for (cd& e : v) e /= nv;
    return nv;
  };

  CVector v(n, cd{1.0 / std::sqrt(static_cast<double>(n))});
  // Break down only if the start vector is (numerically) in the null space;
  // restart from the largest column instead.
  {
    CVector w = matvec(A, v);
    if (norm2(w) <= 1e-14 * a_norm) {
      std::size_t best_col = 0;
      double best = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::norm(A.at(i, j));
        if (s > best) {
          best = s;
          best_col = j;
        }
      }
      v.assign(n, cd{});
      v[best_col] = 1.0;
    }
  }

  // Converge on both the eigenvalue change (1e-10) and the eigenpair
  // residual (1e-10 * ||A||_F, well inside the 1e-8 contract); the residual
  // matters because the Rayleigh quotient settles quadratically faster than
  // the vector.
  double lambda_prev = 0.0;
  for (int it = 0; it < 200; ++it) {
    CVector w = matvec(A, v);
    const double wn = norm2(w);
    if (wn <= 1e-14 * a_norm)
      throw std::runtime_error("principal_eigvec: iteration collapsed to null space");
    for (cd& e : w) e /= wn;
    const CVector aw = matvec(A, w);
    const double lambda = dot_h(w, aw).real();
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid += std::norm(aw[i] - lambda * w[i]);
    v = std::move(w);
    const bool lambda_ok =
        it > 0 && std::abs(lambda - lambda_prev) <= 1e-10 * std::max(1.0, std::abs(lambda));
    lambda_prev = lambda;
    if (lambda_ok && std::sqrt(resid) <= 1e-10 * a_norm) break;
  }

  // Phase convention: first entry with non-negligible magnitude made real >= 0.
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(v[i]);
    if (mag > 1e-12) {
      const cd rot = std::conj(v[i]) / mag;
      for (cd& e : v) e *= rot;
      break;
    }
  }
  normalize(v);
  return v;
}

CVector weighted_normal_equations(const std::vector<CVector>& frames, const CVector& targets,
                                  const std::vector<double>& weights, double loading) {
  if (frames.empty()) throw std::invalid_argument("weighted_normal_equations: empty input");
  if (frames.size() != targets.size() || frames.size() != weights.size())
    throw std::invalid_argument("weighted_normal_equations: sequence length mismatch");
  const std::size_t dim = frames.front().size();
  if (dim == 0) throw std::invalid_argument("weighted_normal_equations: zero-dim frames");

  CMatrix A(dim, dim);
  CVector b(dim, cd{});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const CVector& y = frames[t];
    if (y.size() != dim) throw std::invalid_argument("weighted_normal_equations: ragged frames");
    const double w = weights[t];
    if (!(w > 0.0)) throw std::invalid_argument("weighted_normal_equations: nonpositive weight");
    for (std::size_t i = 0; i < dim; ++i) {
      const cd yi = w * y[i];
      b[i] += yi * std::conj(targets[t]);
      for (std::size_t j = 0; j < dim; ++j) A.at(i, j) += yi * std::conj(y[j]);
    }
  }
  // Accumulation asymmetry can leave A Hermitian only to roundoff; symmetrize.
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      const cd m = 0.5 * (A.at(i, j) + std::conj(A.at(j, i)));
      A.at(i, j) = m;
      A.at(j, i) = std::conj(m);
    }
    A.at(i, i) = A.at(i, i).real();
  }
  return hermitian_solve(A, b, loading);
}

}  // namespace tfsep::linalg
