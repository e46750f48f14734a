#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

#include <Eigen/Core>
#include <boost/math/special_functions/trigamma.hpp>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"

namespace pnpw {

/// Periodic (circulant) 2D blur with odd-sized, unit-sum, centrosymmetric taps.
class BlurOperator {
 public:
  explicit BlurOperator(Eigen::MatrixXd taps) : taps_(std::move(taps)) {
    if (taps_.rows() % 2 == 0 || taps_.cols() % 2 == 0) {
      throw ConstructionError("blur taps must have odd dimensions");
    }
    if (std::abs(taps_.sum() - 1.0) > Tolerances::blur_tap_sum) {
      throw ConstructionError("blur taps must sum to one");
    }
    const Eigen::MatrixXd flipped = taps_.reverse();
    if ((flipped - taps_).cwiseAbs().maxCoeff() > 1e-15) {
      throw ConstructionError("blur taps must be centrosymmetric");
    }
  }

  /// Sampled Gaussian of odd `size`, normalized to unit sum.
  static BlurOperator gaussian(int size, double sigma) {
    if (size < 1 || size % 2 == 0 || !(sigma > 0.0)) {
      throw ConstructionError("gaussian blur needs an odd size and positive sigma");
    }
    const int half = size / 2;
    Eigen::MatrixXd t(size, size);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        const double di = i - half;
        const double dj = j - half;
        t(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      }
    }
    t /= t.sum();
    return BlurOperator(std::move(t));
  }

  static BlurOperator delta() { return BlurOperator(Eigen::MatrixXd::Ones(1, 1)); }

  [[nodiscard]] const Eigen::MatrixXd& taps() const { return taps_; }

 private:
  Eigen::MatrixXd taps_;
};

namespace detail {

inline int wrap(int i, int n) {
  const int m = i % n;
  return m < 0 ? m + n : m;
}

// out(r,c) = sum_{a,b} taps(a,b) x(r - (a-hr), c - (b-hc)) with periodic wrap; `sign` = -1
// gives the correlation, i.e. the adjoint.
inline Image circular_filter(const BlurOperator& op, const Image& x, int sign) {
  const auto& taps = op.taps();
  const int hr = int(taps.rows()) / 2;
  const int hc = int(taps.cols()) / 2;
  if (taps.rows() > x.height() || taps.cols() > x.width()) {
    throw DimensionError("blur kernel larger than image");
  }
  // periodic extension by the tap extents; the sum order matches the plain wrapped loop
  const int h = x.height(), w = x.width();
  const int pr = int(taps.rows()) - 1, pc = int(taps.cols()) - 1;
  Eigen::MatrixXd padded(h + 2 * pr, w + 2 * pc);
  for (int i = 0; i < h + 2 * pr; ++i) {
    for (int j = 0; j < w + 2 * pc; ++j) padded(i, j) = x(wrap(i - pr, h), wrap(j - pc, w));
  }
  Image out(x.shape);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int a = 0; a < taps.rows(); ++a) {
        const int pi = r - sign * (a - hr) + pr;
        for (int b = 0; b < taps.cols(); ++b) {
          acc += taps(a, b) * padded(pi, c - sign * (b - hc) + pc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace detail

inline Image blur(const BlurOperator& op, const Image& x) { return detail::circular_filter(op, x, 1); }

// B' x; equals blur() for centrosymmetric taps.
inline Image blur_adjoint(const BlurOperator& op, const Image& x) {
  return detail::circular_filter(op, x, -1);
}

/// Keeps the top-left pixel of every factor x factor block.
inline Image decimate(const Image& x, int factor) {
  if (factor < 1) throw DimensionError("decimation factor must be >= 1");
  if (x.height() % factor != 0 || x.width() % factor != 0) {
    throw DimensionError("image dimensions not divisible by the decimation factor");
  }
  Image out(Shape{x.height() / factor, x.width() / factor});
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out(r, c) = x(r * factor, c * factor);
  }
  return out;
}

/// Adjoint of decimate(): zero-filling upsample.
inline Image upsample_zero_fill(const Image& low, int factor) {
  if (factor < 1) throw DimensionError("upsampling factor must be >= 1");
  Image out(Shape{low.height() * factor, low.width() * factor});
  for (int r = 0; r < low.height(); ++r) {
    for (int c = 0; c < low.width(); ++c) out(r * factor, c * factor) = low(r, c);
  }
  return out;
}

// Pixel replication; used as the superresolution baseline and initial guess.
inline Image upsample_zero_order_hold(const Image& low, int factor) {
  if (factor < 1) throw DimensionError("upsampling factor must be >= 1");
  Image out(Shape{low.height() * factor, low.width() * factor});
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out(r, c) = low(r / factor, c / factor);
  }
  return out;
}

struct GaussianNoise {
  double sigma = 0.0;  // on the 0-255 scale
};

struct GammaSpeckle {
  int looks = 1;
};

struct NoiseSpec {
  std::variant<GaussianNoise, GammaSpeckle> kind = GaussianNoise{};
  std::uint64_t seed = 0;

  void validate() const {
    if (const auto* g = std::get_if<GaussianNoise>(&kind); g && !(g->sigma >= 0.0)) {
      throw ConstructionError("noise sigma must be >= 0");
    }
    if (const auto* s = std::get_if<GammaSpeckle>(&kind); s && s->looks < 1) {
      throw ConstructionError("number of looks must be >= 1");
    }
  }
};

/// Gamma(shape, 1) by Marsaglia-Tsang squeeze/accept-reject, valid for shape >= 1.
template <class Rng>
double sample_gamma_unit_scale(double shape, Rng& rng) {
  if (!(shape >= 1.0)) throw ConstructionError("gamma sampler requires shape >= 1");
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (;;) {
    double z = 0.0;
    double v = 0.0;
    do {
      z = normal(rng);
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform(rng);
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Unit-mean speckle multiplier: Gamma(shape M, scale 1/M), variance 1/M.
template <class Rng>
double sample_speckle(int looks, Rng& rng) {
  return sample_gamma_unit_scale(double(looks), rng) / double(looks);
}

/// Standard deviation of log(n) for n ~ Gamma(M, 1/M): sqrt(trigamma(M)).
inline double log_speckle_std(int looks) {
  if (looks < 1) throw ConstructionError("number of looks must be >= 1");
  return std::sqrt(boost::math::trigamma(double(looks)));
}

struct SuperresObservation {
  Image observation;  // low-resolution y
  Image clean;        // S B x, before noise
};

/// y = S B x + eta, eta ~ N(0, (sigma/255)^2) i.i.d.
inline SuperresObservation simulate_superres(const Image& ground_truth, const BlurOperator& op,
                                             int factor, const NoiseSpec& noise) {
  noise.validate();
  const auto* g = std::get_if<GaussianNoise>(&noise.kind);
  if (g == nullptr) throw ConstructionError("superresolution requires Gaussian noise");
  SuperresObservation out;
  out.clean = decimate(blur(op, ground_truth), factor);
  out.observation = out.clean;
  if (g->sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> normal(0.0, g->sigma / 255.0);
    for (Eigen::Index i = 0; i < out.observation.pixels.size(); ++i) {
      out.observation.pixels[i] += normal(rng);
    }
  }
  return out;
}

/// Adds i.i.d. Gaussian noise (sigma on the 0-255 scale) to an image.
inline Image add_gaussian_noise(const Image& clean, double sigma, std::uint64_t seed) {
  Image out = clean;
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma / 255.0);
    for (Eigen::Index i = 0; i < out.pixels.size(); ++i) out.pixels[i] += normal(rng);
  }
  return out;
}

struct SpeckleObservation {
  Image raw;      // s = r0 * n
  Image log_obs;  // log s
};

inline SpeckleObservation simulate_speckle(const Image& reflectance, int looks, std::uint64_t seed) {
  if (looks < 1) throw ConstructionError("number of looks must be >= 1");
  for (Eigen::Index i = 0; i < reflectance.pixels.size(); ++i) {
    if (!(reflectance.pixels[i] > 0.0)) throw ConstructionError("reflectance must be positive");
  }
  std::mt19937_64 rng(seed);
  SpeckleObservation out{Image(reflectance.shape), Image(reflectance.shape)};
  for (Eigen::Index i = 0; i < reflectance.pixels.size(); ++i) {
    const double s = reflectance.pixels[i] * sample_speckle(looks, rng);
    out.raw.pixels[i] = s;
    out.log_obs.pixels[i] = std::log(s);
  }
  return out;
}

}  // namespace pnpw
