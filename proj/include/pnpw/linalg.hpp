#pragma once

#include <cmath>
#include <string>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"

namespace pnpw::linalg {

struct CgResult {
  Vector solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradient for an SPD operator given as a callable `Vector(const Vector&)`.
///
/// Iterates until ||b - A x|| <= rel_tol * ||b|| and throws NumericError when
/// `max_iters` is exhausted first. The recursive residual is refreshed with a
/// true residual every 50 steps to keep tight tolerances reachable.
template <class ApplyOp>
CgResult conjugate_gradient(const ApplyOp& apply, const Vector& b, Vector x0, double rel_tol,
                            int max_iters) {
  detail::require_same_size(b.size(), x0.size(), "conjugate_gradient");
  CgResult out;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.solution = Vector::Zero(b.size());
    return out;
  }
  Vector x = std::move(x0);
  Vector r = b - apply(x);
  Vector p = r;
  double rr = r.squaredNorm();
  const double target = rel_tol * b_norm;
  int k = 0;
  while (std::sqrt(rr) > target) {
    if (k >= max_iters) {
      throw NumericError("conjugate gradient did not converge in " + std::to_string(max_iters) +
                         " iterations (relative residual " +
                         std::to_string(std::sqrt(rr) / b_norm) + ")");
    }
    const Vector ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw NumericError("conjugate gradient: operator is not positive definite");
    }
    const double alpha = rr / pap;
    x += alpha * p;
    ++k;
    if (k % 50 == 0) {
      r = b - apply(x);
    } else {
      r -= alpha * ap;
    }
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  out.solution = std::move(x);
  out.iterations = k;
  out.relative_residual = std::sqrt(rr) / b_norm;
  return out;
}

struct PowerResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  int iterations = 0;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Stops once the Rayleigh quotient changes by less than `rel_change`
/// relative to its value. The start vector is deterministic (all ones plus a
/// fixed ramp) so repeated runs return identical estimates.
template <class ApplyOp>
PowerResult power_iteration(const ApplyOp& apply, Eigen::Index n, double rel_change,
                            int max_iters) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.5 * std::sin(0.7 * double(i) + 0.3);
  }
  v.normalize();
  double lambda = 0.0;
  for (int k = 1; k <= max_iters; ++k) {
    Vector av = apply(v);
    const double next = v.dot(av);
    const double av_norm = av.norm();
    if (av_norm == 0.0) {
      return {0.0, v, k};
    }
    v = av / av_norm;
    if (k > 1 && std::abs(next - lambda) <= rel_change * std::abs(next)) {
      return {next, v, k};
    }
    lambda = next;
  }
  throw NumericError("power iteration did not converge in " + std::to_string(max_iters) +
                     " iterations");
}

}  // namespace pnpw::linalg
