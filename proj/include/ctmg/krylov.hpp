#pragma once

#include "ctmg/types.hpp"

#include <cmath>
#include <stdexcept>

namespace ctmg {

enum class KrylovStatus { converged, max_iterations, breakdown };

struct KrylovReport {
  KrylovStatus status = KrylovStatus::max_iterations;
  int iterations = 0;
  Real residual_norm = 0.0;

  bool ok() const { return status == KrylovStatus::converged; }
};

/**
 * Preconditioned conjugate gradients with an absolute l2 residual tolerance.
 *
 * Op and Precond are callables Vector -> Vector. The initial guess is taken from x.
 * All reductions are sequential, so results are reproducible bit for bit regardless
 * of the parallel degree used inside Op or Precond. A non-positive curvature p'Ap
 * reports breakdown; that only happens when the operator is not positive definite.
 */
template <class Op, class Precond>
KrylovReport pcg(const Op& A, const Precond& M, const Vector& b, Vector& x, Real tol,
                 int max_iter) {
  if (tol <= 0.0 || max_iter < 0) throw std::invalid_argument("pcg: bad tolerance or budget");
  if (b.isZero(0.0)) {
    x.setZero(b.size());
    return {KrylovStatus::converged, 0, 0.0};
  }
  if (x.size() != b.size()) throw std::invalid_argument("pcg: size mismatch");

  Vector r = b - A(x);
  Real rnorm = r.norm();
  if (rnorm <= tol) return {KrylovStatus::converged, 0, rnorm};

  Vector z = M(r);
  Vector p = z;
  Real rz = r.dot(z);
  for (int k = 1; k <= max_iter; ++k) {
    const Vector Ap = A(p);
    const Real pAp = p.dot(Ap);
    if (!(pAp > 0.0)) return {KrylovStatus::breakdown, k, rnorm};
    const Real alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    rnorm = r.norm();
    if (rnorm <= tol) return {KrylovStatus::converged, k, rnorm};
    z = M(r);
    const Real rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return {KrylovStatus::max_iterations, max_iter, rnorm};
}

/**
 * Preconditioned BiCGStab for non-symmetric operators, absolute l2 tolerance.
 *
 * On a rho breakdown the shadow residual is re-seeded from the current residual
 * once; a second breakdown is reported. Counts one iteration per full step, the
 * early exit after the first half step included.
 */
template <class Op, class Precond>
KrylovReport bicgstab(const Op& A, const Precond& M, const Vector& b, Vector& x, Real tol,
                      int max_iter) {
  if (tol <= 0.0 || max_iter < 0)
    throw std::invalid_argument("bicgstab: bad tolerance or budget");
  if (b.isZero(0.0)) {
    x.setZero(b.size());
    return {KrylovStatus::converged, 0, 0.0};
  }
  if (x.size() != b.size()) throw std::invalid_argument("bicgstab: size mismatch");

  Vector r = b - A(x);
  Real rnorm = r.norm();
  if (rnorm <= tol) return {KrylovStatus::converged, 0, rnorm};

  Vector r0 = r;
  Vector p = r;
  Real rho = r0.dot(r);
  bool restarted = false;

  for (int k = 1; k <= max_iter; ++k) {
    const Vector ph = M(p);
    const Vector v = A(ph);
    const Real r0v = r0.dot(v);
    if (r0v == 0.0) return {KrylovStatus::breakdown, k, rnorm};
    const Real alpha = rho / r0v;
    const Vector s = r - alpha * v;
    if (s.norm() <= tol) {
      x += alpha * ph;
      return {KrylovStatus::converged, k, s.norm()};
    }
    const Vector sh = M(s);
    const Vector t = A(sh);
    const Real tt = t.dot(t);
    if (tt == 0.0) return {KrylovStatus::breakdown, k, rnorm};
    const Real omega = t.dot(s) / tt;
    x += alpha * ph + omega * sh;
    r = s - omega * t;
    rnorm = r.norm();
    if (rnorm <= tol) return {KrylovStatus::converged, k, rnorm};

    const Real rho_new = r0.dot(r);
    if (std::abs(rho_new) < 1e-300 || omega == 0.0) {
      if (restarted) return {KrylovStatus::breakdown, k, rnorm};
      restarted = true;
      r0 = r;
      p = r;
      rho = r0.dot(r);
      continue;
    }
    p = r + (rho_new / rho) * (alpha / omega) * (p - omega * v);
    rho = rho_new;
  }
  return {KrylovStatus::max_iterations, max_iter, rnorm};
}

}  // namespace ctmg
