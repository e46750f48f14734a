#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "pnpw/image.hpp"

namespace pnpw {

// Piecewise-smooth test scene in [0.05, 0.95]: shaded background, a disk, a
// bar, and a striped patch. Dimensions are arbitrary; features scale with size.
inline Image synthetic_scene(Shape shape) {
  Image img(shape);
  const double h = shape.height;
  const double w = shape.width;
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const double y = (r + 0.5) / h;
      const double x = (c + 0.5) / w;
      double v = 0.25 + 0.25 * x + 0.1 * y;
      const double dx = x - 0.62;
      const double dy = y - 0.38;
      if (dx * dx + dy * dy < 0.22 * 0.22) v = 0.85 - 0.3 * (dx * dx + dy * dy) / (0.22 * 0.22);
      if (x > 0.12 && x < 0.38 && y > 0.15 && y < 0.85) v = 0.1;
      if (x > 0.5 && x < 0.9 && y > 0.7 && y < 0.92) {
        v = 0.5 + 0.3 * std::sin(2.0 * M_PI * (x + y) * 6.0);
      }
      img(r, c) = std::clamp(v, 0.05, 0.95);
    }
  }
  return img;
}

// Uniform random image in [lo, hi).
inline Image random_image(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(shape);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels[i] = u(rng);
  return img;
}

// Maps [0,1] intensities to a strictly positive reflectance in [1/255, 1].
inline Image to_reflectance(const Image& img) {
  Image out = img;
  for (Eigen::Index i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = (std::clamp(img.pixels[i], 0.0, 1.0) * 254.0 + 1.0) / 255.0;
  }
  return out;
}

}  // namespace pnpw
