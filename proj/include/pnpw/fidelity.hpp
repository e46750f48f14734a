#pragma once

#include <cmath>
#include <concepts>
#include <limits>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/forward_model.hpp"
#include "pnpw/image.hpp"
#include "pnpw/linalg.hpp"
#include "pnpw/weighted_space.hpp"

namespace pnpw {

/// Fidelity with a gradient and a smoothness constant in a weighted space.
template <class F>
concept SmoothFidelity = requires(const F& f, const Vector& x, const WeightedSpace& w) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.weighted_gradient(x, w) } -> std::convertible_to<Vector>;
  { f.smoothness_bound(w) } -> std::convertible_to<double>;
};

/// Fidelity whose weighted proximal map argmin f(x) + (rho/2)||x - u||_w^2 is available.
template <class F>
concept ProxFidelity = requires(const F& f, const Vector& x, double rho, const WeightedSpace& w) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.weighted_prox(x, rho, w) } -> std::convertible_to<Vector>;
};

/// Prox that accepts a starting point for its inner iterative solve.
template <class F>
concept WarmStartProx = ProxFidelity<F> &&
    requires(const F& f, const Vector& x, double rho, const WeightedSpace& w) {
      { f.weighted_prox(x, rho, w, x) } -> std::convertible_to<Vector>;
    };

/// f(x) = (scale/2) ||y - S B x||_2^2 on a high-resolution grid of `shape`.
class SuperresFidelity {
 public:
  SuperresFidelity(Image observation, BlurOperator op, int factor, Shape high_res,
                   double scale = 1.0)
      : y_(std::move(observation)), blur_(std::move(op)), factor_(factor), shape_(high_res),
        scale_(scale) {
    if (factor_ < 1) throw ConstructionError("decimation factor must be >= 1");
    if (shape_.height % factor_ != 0 || shape_.width % factor_ != 0 ||
        y_.height() * factor_ != shape_.height || y_.width() * factor_ != shape_.width) {
      throw ConstructionError("observation size must equal n / factor^2");
    }
    if (!(scale_ > 0.0)) throw ConstructionError("fidelity scale must be positive");
  }

  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] int factor() const { return factor_; }
  [[nodiscard]] const Image& observation() const { return y_; }
  [[nodiscard]] const BlurOperator& blur_operator() const { return blur_; }
  [[nodiscard]] double scale() const { return scale_; }

  // S B x
  [[nodiscard]] Vector forward(const Vector& x) const {
    return decimate(blur(blur_, as_image(x)), factor_).pixels;
  }
  // B' S' r
  [[nodiscard]] Vector adjoint(const Vector& r) const {
    return blur_adjoint(blur_, upsample_zero_fill(Image(y_.shape, r), factor_)).pixels;
  }
  // B' S' S B x
  [[nodiscard]] Vector normal_apply(const Vector& x) const { return adjoint(forward(x)); }

  [[nodiscard]] double value(const Vector& x) const {
    return 0.5 * scale_ * (y_.pixels - forward(x)).squaredNorm();
  }

  [[nodiscard]] Vector euclidean_gradient(const Vector& x) const {
    return scale_ * adjoint(forward(x) - y_.pixels);
  }

  [[nodiscard]] Vector weighted_gradient(const Vector& x, const WeightedSpace& w) const {
    return pnpw::weighted_gradient(euclidean_gradient(x), w);
  }

  /// Upper estimate of the gradient Lipschitz constant in the w-norm: the top
  /// eigenvalue of scale * W^{-1/2} B'S'SB W^{-1/2}, inflated by 1%.
  [[nodiscard]] double smoothness_bound(const WeightedSpace& w) const {
    detail::require_same_size(w.size(), shape_.size(), "smoothness_bound");
    const Vector isqrt = w.weights().cwiseSqrt().cwiseInverse();
    auto op = [&](const Vector& v) -> Vector {
      return scale_ * isqrt.cwiseProduct(normal_apply(isqrt.cwiseProduct(v)));
    };
    const auto res = linalg::power_iteration(op, shape_.size(), Tolerances::power_rel_change,
                                             Tolerances::power_max_iters);
    return Tolerances::smoothness_inflation * res.eigenvalue;
  }

  /// argmin f(x) + (rho/2)(x-u)' W (x-u) via CG on (scale B'S'SB + rho W) x = scale B'S'y + rho W u.
  [[nodiscard]] Vector weighted_prox(const Vector& u, double rho, const WeightedSpace& w,
                                     double rel_tol = Tolerances::cg_prox_rel_residual) const {
    return weighted_prox(u, rho, w, u, rel_tol);
  }

  /// Same, with CG started from `initial` (e.g. the previous prox output).
  [[nodiscard]] Vector weighted_prox(const Vector& u, double rho, const WeightedSpace& w,
                                     const Vector& initial,
                                     double rel_tol = Tolerances::cg_prox_rel_residual) const {
    if (!(rho > 0.0)) throw ConstructionError("rho must be positive");
    detail::require_same_size(initial.size(), shape_.size(), "weighted_prox");
    detail::require_same_size(u.size(), shape_.size(), "weighted_prox");
    detail::require_same_size(w.size(), shape_.size(), "weighted_prox");
    const Vector& d = w.weights();
    auto op = [&](const Vector& v) -> Vector {
      return scale_ * normal_apply(v) + rho * d.cwiseProduct(v);
    };
    const Vector rhs = scale_ * adjoint(y_.pixels) + rho * d.cwiseProduct(u);
    const int max_iters = int(Tolerances::cg_max_iters_per_unknown * shape_.size());
    return linalg::conjugate_gradient(op, rhs, initial, rel_tol, max_iters).solution;
  }

  /// Max-norm of the weighted stationarity residual grad f(x) + rho (x - u) at x.
  [[nodiscard]] double prox_stationarity(const Vector& x, const Vector& u, double rho,
                                         const WeightedSpace& w) const {
    return (weighted_gradient(x, w) + rho * (x - u)).cwiseAbs().maxCoeff();
  }

 private:
  [[nodiscard]] Image as_image(const Vector& x) const {
    detail::require_same_size(x.size(), shape_.size(), "superres fidelity");
    return Image(shape_, x);
  }

  Image y_;
  BlurOperator blur_;
  int factor_;
  Shape shape_;
  double scale_;
};

/// Log-domain multiplicative-speckle fidelity f(x) = M sum_i (x_i + exp(y_i - x_i)),
/// with the additive constant dropped.
class SpeckleFidelity {
 public:
  SpeckleFidelity(Vector log_observation, int looks, double scale = 1.0)
      : y_(std::move(log_observation)), looks_(looks), scale_(scale) {
    if (looks_ < 1) throw ConstructionError("number of looks must be >= 1");
    if (!(scale_ > 0.0)) throw ConstructionError("fidelity scale must be positive");
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (!std::isfinite(y_[i])) throw ConstructionError("log observation must be finite");
    }
  }

  [[nodiscard]] const Vector& log_observation() const { return y_; }
  [[nodiscard]] int looks() const { return looks_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] double weight() const { return scale_ * looks_; }

  /// Returns +infinity when some exponent y_i - x_i exceeds 700.
  [[nodiscard]] double value(const Vector& x) const {
    detail::require_same_size(x.size(), y_.size(), "speckle value");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double e = y_[i] - x[i];
      if (e > 700.0) return std::numeric_limits<double>::infinity();
      acc += x[i] + std::exp(e);
    }
    return weight() * acc;
  }

  [[nodiscard]] Vector euclidean_gradient(const Vector& x) const {
    detail::require_same_size(x.size(), y_.size(), "speckle gradient");
    return weight() * (1.0 - (y_ - x).array().exp()).matrix();
  }

  [[nodiscard]] Vector weighted_gradient(const Vector& x, const WeightedSpace& w) const {
    return pnpw::weighted_gradient(euclidean_gradient(x), w);
  }

  /// Per pixel, the root of  M(1 - exp(y - x)) + rho w (x - u) = 0.
  ///
  /// The stationarity function is increasing and changes sign between u and
  /// y, so [min(u,y), max(u,y)] is a valid bracket. Newton steps that leave the
  /// bracket are replaced by bisection.
  [[nodiscard]] Vector weighted_prox(const Vector& u, double rho, const WeightedSpace& w) const {
    if (!(rho > 0.0)) throw ConstructionError("rho must be positive");
    detail::require_same_size(u.size(), y_.size(), "speckle prox");
    detail::require_same_size(w.size(), y_.size(), "speckle prox");
    Vector out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      out[i] = solve_scalar(y_[i], u[i], rho * w.weights()[i]);
    }
    return out;
  }

  [[nodiscard]] double prox_stationarity(const Vector& x, const Vector& u, double rho,
                                         const WeightedSpace& w) const {
    return (weighted_gradient(x, w) + rho * (x - u)).cwiseAbs().maxCoeff();
  }

 private:
  [[nodiscard]] double solve_scalar(double y, double u, double c) const {
    const double m = weight();
    auto phi = [&](double x) { return m * (1.0 - std::exp(y - x)) + c * (x - u); };
    double lo = std::min(u, y);
    double hi = std::max(u, y);
    const double tol = Tolerances::newton_stationarity * m;
    double x = u;
    for (int it = 0; it < Tolerances::newton_max_iters; ++it) {
      const double f = phi(x);
      if (std::abs(f) < tol || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                (std::abs(lo) + std::abs(hi))) {
        return x;
      }
      if (f > 0.0) {
        hi = x;
      } else {
        lo = x;
      }
      const double slope = m * std::exp(y - x) + c;
      double next = x - f / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      x = next;
    }
    if (!std::isfinite(x) || lo > hi) throw NumericError("speckle prox: bracket failure");
    return x;
  }

  Vector y_;
  int looks_;
  double scale_;
};

}  // namespace pnpw
