#include <cmath>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tfsep/linalg.hpp"
#include "tfsep/rng.hpp"

using namespace tfsep;
using namespace tfsep::linalg;
using tfsep::testing::gauss_jordan_solve;
using tfsep::testing::jacobi_max_eigenvalue;
using tfsep::testing::random_cvector;
using tfsep::testing::random_hpd;

namespace {

double residual(const CMatrix& a, const CVector& x, const CVector& b) {
  const CVector ax = matvec(a, x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num += std::norm(ax[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num) / std::sqrt(den);
}

}  // namespace

TEST_CASE("hermitian_solve identity and diagonal cases") {
  CMatrix eye = CMatrix::identity(2);
  const CVector b = {cd(1.0, 0.0), cd(0.0, 2.0)};
  const CVector x = hermitian_solve(eye, b, 0.0);
  CHECK(std::abs(x[0] - b[0]) < 1e-14);
  CHECK(std::abs(x[1] - b[1]) < 1e-14);

  CMatrix diag(2, 2);
  diag.at(0, 0) = 2.0;
  diag.at(1, 1) = 4.0;
  const CVector x2 = hermitian_solve(diag, {cd(2.0), cd(4.0)}, 0.0);
  CHECK(std::abs(x2[0] - cd(1.0)) < 1e-14);
  CHECK(std::abs(x2[1] - cd(1.0)) < 1e-14);
}

TEST_CASE("hermitian_solve agrees with the elimination oracle") {
  Rng rng(11);
  const CMatrix a = random_hpd(6, rng);
  const CVector b = random_cvector(6, rng);
  const CVector x = hermitian_solve(a, b, 0.0);
  const CVector y = gauss_jordan_solve(a, b);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(x[i] - y[i]) < 1e-8);
  CHECK(residual(a, x, b) < 1e-8);
}

TEST_CASE("hermitian_solve residual bound across sizes") {
  Rng rng(12);
  for (int n = 1; n <= 12; ++n) {
    const CMatrix a = random_hpd(n, rng);
    const CVector b = random_cvector(n, rng);
    const CVector x = hermitian_solve(a, b, 0.0);
    CHECK(residual(a, x, b) < 1e-8);
    const CVector y = gauss_jordan_solve(a, b);
    for (int i = 0; i < n; ++i) CHECK(std::abs(x[i] - y[i]) < 1e-8);
  }
}

TEST_CASE("hermitian_solve error paths") {
  CMatrix a(2, 3);
  CHECK_THROWS(hermitian_solve(a, {cd{}, cd{}}, 0.0));

  CMatrix nonherm(2, 2);
  nonherm.at(0, 1) = cd(1.0, 1.0);
  nonherm.at(1, 0) = cd(1.0, 1.0);  // should be the conjugate
  CHECK_THROWS(hermitian_solve(nonherm, {cd{1.0}, cd{1.0}}, 0.0));

  CMatrix singular(2, 2);
  singular.at(0, 0) = 1.0;
  singular.at(0, 1) = 1.0;
  singular.at(1, 0) = 1.0;
  singular.at(1, 1) = 1.0;
  CHECK_THROWS_AS((void)hermitian_solve(singular, {cd{1.0}, cd{2.0}}, 0.0), std::runtime_error);
  // The same system with loading is solvable and finite.
  const CVector x = hermitian_solve(singular, {cd{1.0}, cd{2.0}}, 1e-6);
  for (const cd& v : x) CHECK(std::isfinite(v.real()));
}

TEST_CASE("principal_eigvec diagonal and rank-1 cases") {
  CMatrix diag(2, 2);
  diag.at(0, 0) = 3.0;
  diag.at(1, 1) = 1.0;
  const CVector v = principal_eigvec(diag);
  CHECK(std::abs(v[0] - cd(1.0)) < 1e-8);
  CHECK(std::abs(v[1]) < 1e-8);

  Rng rng(21);
  const CVector x = random_cvector(5, rng);
  CMatrix outer(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) outer.at(i, j) = x[i] * std::conj(x[j]);
  const CVector u = principal_eigvec(outer);
  // Compare against x normalized under the same phase convention.
  CVector xn = x;
  double nx = norm2(xn);
  for (cd& e : xn) e /= nx;
  const cd rot = std::conj(xn[0]) / std::abs(xn[0]);
  for (cd& e : xn) e *= rot;
  for (int i = 0; i < 5; ++i) CHECK(std::abs(u[i] - xn[i]) < 1e-8);
}

TEST_CASE("principal_eigvec matches the Jacobi oracle on random PSD") {
  Rng rng(22);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix a = random_hpd(8, rng, 0.01);
    const CVector v = principal_eigvec(a);
    CHECK(norm2(v) == doctest::Approx(1.0).epsilon(1e-12));
    const double rayleigh = dot_h(v, matvec(a, v)).real();
    const double top = jacobi_max_eigenvalue(a);
    CHECK(rayleigh == doctest::Approx(top).epsilon(1e-6));

    // Residual bound from the contract.
    CVector av = matvec(a, v);
    double r = 0.0;
    for (int i = 0; i < 8; ++i) r += std::norm(av[i] - rayleigh * v[i]);
    CHECK(std::sqrt(r) <= 1e-8 * a.fro_norm() + 1e-12);

    // Rayleigh quotient beats 100 random unit vectors.
    for (int k = 0; k < 100; ++k) {
      CVector u = random_cvector(8, rng);
      const double nu = norm2(u);
      for (cd& e : u) e /= nu;
      CHECK(dot_h(u, matvec(a, u)).real() <= rayleigh + 1e-9);
    }
  }
}

TEST_CASE("principal_eigvec error paths") {
  CMatrix zero(3, 3);
  CHECK_THROWS(principal_eigvec(zero));
  CMatrix nonherm(2, 2);
  nonherm.at(0, 1) = 1.0;
  CHECK_THROWS(principal_eigvec(nonherm));
}

TEST_CASE("weighted_normal_equations scalar projection") {
  // All frames (1), targets 2: w must satisfy conj(w) * 1 = 2.
  std::vector<CVector> frames(4, CVector{cd(1.0)});
  CVector targets(4, cd(2.0));
  std::vector<double> weights(4, 1.0);
  const CVector w = weighted_normal_equations(frames, targets, weights);
  CHECK(std::abs(w[0] - cd(2.0)) < 1e-9);
}

TEST_CASE("weighted_normal_equations recovers a known filter") {
  Rng rng(31);
  const int dim = 4, n = 32;
  const CVector w0 = random_cvector(dim, rng);
  std::vector<CVector> frames;
  CVector targets;
  for (int t = 0; t < n; ++t) {
    frames.push_back(random_cvector(dim, rng));
    targets.push_back(dot_h(w0, frames.back()));
  }
  const std::vector<double> unit(n, 1.0);
  const CVector w = weighted_normal_equations(frames, targets, unit);
  for (int t = 0; t < n; ++t) CHECK(std::abs(dot_h(w, frames[t]) - targets[t]) < 1e-8);
}

TEST_CASE("weighted_normal_equations weight-scale invariance and convexity") {
  Rng rng(32);
  const int dim = 3, n = 24;
  std::vector<CVector> frames;
  CVector targets;
  std::vector<double> weights;
  for (int t = 0; t < n; ++t) {
    frames.push_back(random_cvector(dim, rng));
    targets.push_back(rng.gaussian_complex());
    weights.push_back(0.5 + rng.uniform());
  }
  const CVector w = weighted_normal_equations(frames, targets, weights);
  std::vector<double> halved = weights;
  for (double& v : halved) v *= 0.5;
  const CVector w2 = weighted_normal_equations(frames, targets, halved);
  for (int i = 0; i < dim; ++i) CHECK(std::abs(w[i] - w2[i]) < 1e-10);

  auto objective = [&](const CVector& cand) {
    double s = 0.0;
    for (int t = 0; t < n; ++t) s += weights[t] * std::norm(targets[t] - dot_h(cand, frames[t]));
    return s;
  };
  const double base = objective(w);
  for (int k = 0; k < 20; ++k) {
    CVector pert = w;
    for (cd& e : pert) e += 1e-3 * rng.gaussian_complex();
    CHECK(objective(pert) >= base - 1e-12);
  }
}

TEST_CASE("weighted_normal_equations error paths") {
  CHECK_THROWS(weighted_normal_equations({}, {}, {}));
  std::vector<CVector> frames{CVector{cd(1.0)}};
  CHECK_THROWS(weighted_normal_equations(frames, CVector{cd(1.0)}, {0.0}));
  CHECK_THROWS(weighted_normal_equations(frames, CVector{cd(1.0), cd(2.0)}, {1.0}));
}
