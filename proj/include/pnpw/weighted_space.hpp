#pragma once

#include <cmath>
#include <utility>

#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"

namespace pnpw {

/// Euclidean space re-equipped with the diagonal inner product <x,y> = x' diag(w) y.
///
/// Gradients and proximal maps computed "in the space" are taken with respect
/// to this inner product. With all weights equal to one it is the standard
/// Euclidean space.
class WeightedSpace {
 public:
  explicit WeightedSpace(Vector weights) : weights_(std::move(weights)) {
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      const double w = weights_[i];
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ConstructionError("weights must be strictly positive and finite");
      }
    }
  }

  static WeightedSpace standard(Eigen::Index n) { return WeightedSpace(Vector::Ones(n)); }

  [[nodiscard]] Eigen::Index size() const { return weights_.size(); }
  [[nodiscard]] const Vector& weights() const { return weights_; }

 private:
  Vector weights_;
};

inline double inner(const Vector& x, const Vector& y, const WeightedSpace& w) {
  detail::require_same_size(x.size(), y.size(), "inner");
  detail::require_same_size(x.size(), w.size(), "inner");
  return (x.array() * w.weights().array() * y.array()).sum();
}

inline double norm(const Vector& x, const WeightedSpace& w) { return std::sqrt(inner(x, x, w)); }

// Riesz representer of a Euclidean gradient: the vector g_w with <g_w, h>_w = g . h.
inline Vector weighted_gradient(const Vector& euclidean_grad, const WeightedSpace& w) {
  detail::require_same_size(euclidean_grad.size(), w.size(), "weighted_gradient");
  return euclidean_grad.cwiseQuotient(w.weights());
}

}  // namespace pnpw
