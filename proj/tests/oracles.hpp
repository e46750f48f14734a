#pragma once

// Independent brute-force references used by the unit tests. Nothing here
// calls into the library's numerical routines; only the plain data types
// (Image, Shape, Vector) are shared.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "pnpw/image.hpp"

namespace oracle {

using pnpw::Image;
using pnpw::Shape;
using pnpw::Vector;

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Normalized size x size Gaussian taps.
inline Eigen::MatrixXd gaussian_taps(int size, double sigma) {
  Eigen::MatrixXd t(size, size);
  const int h = size / 2;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      t(i, j) = std::exp(-double((i - h) * (i - h) + (j - h) * (j - h)) / (2 * sigma * sigma));
  return t / t.sum();
}

// Dense circulant matrix of the periodic convolution with `taps` on an h x w grid.
inline Eigen::MatrixXd circulant(const Eigen::MatrixXd& taps, int h, int w) {
  const int n = h * w;
  const int hr = int(taps.rows()) / 2, hc = int(taps.cols()) / 2;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int a = 0; a < taps.rows(); ++a)
        for (int b = 0; b < taps.cols(); ++b) {
          const int rr = ((r - (a - hr)) % h + h) % h;
          const int cc = ((c - (b - hc)) % w + w) % w;
          m(r * w + c, rr * w + cc) += taps(a, b);
        }
  return m;
}

// Dense decimation matrix keeping pixel (kr, kc) of each block.
inline Eigen::MatrixXd decimation(int h, int w, int k) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero((h / k) * (w / k), h * w);
  for (int r = 0; r < h / k; ++r)
    for (int c = 0; c < w / k; ++c) s(r * (w / k) + c, (r * k) * w + c * k) = 1.0;
  return s;
}

inline int mirror(int i, int n) {
  // symmetric padding: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

// Dense NLM kernel by a double loop over all pixel pairs.
inline Eigen::MatrixXd nlm_kernel(const Image& g, int ns, int p, double h) {
  const int H = g.height(), W = g.width(), n = H * W;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      const int sr = s / W, sc = s % W, tr = t / W, tc = t % W;
      const double hat = std::max(0.0, 1.0 - std::abs(sr - tr) / double(ns)) *
                         std::max(0.0, 1.0 - std::abs(sc - tc) / double(ns));
      if (hat == 0.0) continue;
      double d2 = 0.0;
      for (int a = -p; a <= p; ++a)
        for (int b = -p; b <= p; ++b) {
          const double diff = g(mirror(sr + a, H), mirror(sc + b, W)) -
                              g(mirror(tr + a, H), mirror(tc + b, W));
          d2 += diff * diff;
        }
      k(s, t) = hat * std::exp(-d2 / (2 * h * h));
    }
  return k;
}

// Root of an increasing scalar function on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Central-difference directional derivative.
inline double directional(const std::function<double(const Vector&)>& f, const Vector& x,
                          const Vector& h, double eps = 1e-6) {
  return (f(x + eps * h) - f(x - eps * h)) / (2 * eps);
}

}  // namespace oracle
