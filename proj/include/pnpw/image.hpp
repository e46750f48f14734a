#pragma once

#include <Eigen/Core>

#include "pnpw/errors.hpp"

namespace pnpw {

using Vector = Eigen::VectorXd;

struct Shape {
  int height = 0;
  int width = 0;

  [[nodiscard]] Eigen::Index size() const { return Eigen::Index(height) * width; }
  [[nodiscard]] Eigen::Index index(int row, int col) const {
    return Eigen::Index(row) * width + col;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Grayscale image stored row-major as a flat vector; intensities nominally in [0,1].
struct Image {
  Shape shape;
  Vector pixels;

  Image() = default;
  explicit Image(Shape s, double fill = 0.0) : shape(s), pixels(Vector::Constant(s.size(), fill)) {}
  Image(Shape s, Vector data) : shape(s), pixels(std::move(data)) {
    if (pixels.size() != shape.size()) {
      throw DimensionError("image data does not match its shape");
    }
  }

  [[nodiscard]] int height() const { return shape.height; }
  [[nodiscard]] int width() const { return shape.width; }
  [[nodiscard]] double operator()(int row, int col) const { return pixels[shape.index(row, col)]; }
  double& operator()(int row, int col) { return pixels[shape.index(row, col)]; }
};

}  // namespace pnpw
