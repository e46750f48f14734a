#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"

namespace pnpw {

/// 10 log10(peak^2 / MSE); identical images report the 99 dB cap.
inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
  if (!(a.shape == b.shape)) throw DimensionError("psnr: image shapes differ");
  const double mse = (a.pixels - b.pixels).squaredNorm() / double(a.pixels.size());
  if (!std::isfinite(mse)) return std::numeric_limits<double>::quiet_NaN();
  if (mse == 0.0) return Tolerances::psnr_cap_db;
  return std::min(Tolerances::psnr_cap_db, 10.0 * std::log10(peak * peak / mse));
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM with a Gaussian window, evaluated over the valid region
/// (windows entirely inside the image).
inline double ssim(const Image& a, const Image& b, const SsimOptions& opt = {}) {
  if (!(a.shape == b.shape)) throw DimensionError("ssim: image shapes differ");
  const int win = opt.window;
  if (a.height() < win || a.width() < win) throw DimensionError("ssim: image smaller than window");

  Eigen::MatrixXd g(win, win);
  const int half = win / 2;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double di = i - half;
      const double dj = j - half;
      g(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * opt.sigma * opt.sigma));
    }
  }
  g /= g.sum();

  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  double total = 0.0;
  long count = 0;
  for (int r = 0; r + win <= a.height(); ++r) {
    for (int c = 0; c + win <= a.width(); ++c) {
      double mu_a = 0.0, mu_b = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double wgt = g(i, j);
          const double va = a(r + i, c + j);
          const double vb = b(r + i, c + j);
          mu_a += wgt * va;
          mu_b += wgt * vb;
          saa += wgt * va * va;
          sbb += wgt * vb * vb;
          sab += wgt * va * vb;
        }
      }
      const double var_a = saa - mu_a * mu_a;
      const double var_b = sbb - mu_b * mu_b;
      const double cov = sab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / double(count);
}

}  // namespace pnpw
