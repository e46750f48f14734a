#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"
#include "pnpw/linalg.hpp"
#include "pnpw/weighted_space.hpp"

namespace pnpw {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class PatchBoundary { symmetric_pad };

struct KernelConfig {
  int search_radius = 10;       // hat half-width; offsets with |d| >= radius get zero weight
  int patch_radius = 2;         // 5x5 patches
  double patch_bandwidth = 0.15;  // Gaussian scale on patch differences (intensity units)
  PatchBoundary boundary = PatchBoundary::symmetric_pad;

  void validate() const {
    if (search_radius < 1) throw ConstructionError("search_radius must be >= 1");
    if (patch_radius < 0) throw ConstructionError("patch_radius must be >= 0");
    if (!(patch_bandwidth > 0.0) || !std::isfinite(patch_bandwidth)) {
      throw ConstructionError("patch_bandwidth must be positive");
    }
  }
};

/// Separable hat window: prod_i max(0, 1 - |d_i| / radius).
inline double hat_weight(int dy, int dx, int search_radius) {
  const double r = search_radius;
  const double a = std::max(0.0, 1.0 - std::abs(dy) / r);
  const double b = std::max(0.0, 1.0 - std::abs(dx) / r);
  return a * b;
}

/// Linear kernel filter x -> D^{-1} K x.
///
/// `kernel` is K (symmetric and nonnegative for filters produced by
/// build_kernel) and `normalizer` holds the diagonal of D. The object is
/// immutable after construction.
class KernelFilter {
 public:
  KernelFilter() = default;

  /// Normalizer taken as the row sums of `kernel`.
  KernelFilter(Shape shape, SparseMatrix kernel) : shape_(shape), kernel_(std::move(kernel)) {
    check_dims();
    normalizer_ = kernel_ * Vector::Ones(kernel_.cols());
    for (Eigen::Index i = 0; i < normalizer_.size(); ++i) {
      if (!(normalizer_[i] > 0.0)) throw ConstructionError("kernel has a non-positive row sum");
    }
  }

  /// Explicit normalizer; used to wrap arbitrary row-stochastic matrices (D = I).
  KernelFilter(Shape shape, SparseMatrix kernel, Vector normalizer)
      : shape_(shape), kernel_(std::move(kernel)), normalizer_(std::move(normalizer)) {
    check_dims();
    detail::require_same_size(normalizer_.size(), kernel_.rows(), "KernelFilter normalizer");
    for (Eigen::Index i = 0; i < normalizer_.size(); ++i) {
      if (!(normalizer_[i] > 0.0)) throw ConstructionError("normalizer must be positive");
    }
  }

  static KernelFilter identity(Shape shape) {
    SparseMatrix k(shape.size(), shape.size());
    k.setIdentity();
    return KernelFilter(shape, std::move(k));
  }

  [[nodiscard]] Shape shape() const { return shape_; }
  [[nodiscard]] Eigen::Index size() const { return kernel_.rows(); }
  [[nodiscard]] const SparseMatrix& kernel() const { return kernel_; }
  [[nodiscard]] const Vector& normalizer() const { return normalizer_; }

  [[nodiscard]] Vector denoise(const Vector& x) const {
    detail::require_same_size(x.size(), size(), "denoise");
    return (kernel_ * x).cwiseQuotient(normalizer_);
  }

  [[nodiscard]] Image denoise(const Image& x) const {
    if (!(x.shape == shape_)) throw DimensionError("denoise: image shape mismatch");
    return Image(shape_, denoise(x.pixels));
  }

  [[nodiscard]] WeightedSpace induced_space() const { return WeightedSpace(normalizer_); }

  [[nodiscard]] Eigen::MatrixXd dense_kernel() const { return Eigen::MatrixXd(kernel_); }
  // W = D^{-1} K as a dense matrix.
  [[nodiscard]] Eigen::MatrixXd dense_operator() const {
    return normalizer_.cwiseInverse().asDiagonal() * dense_kernel();
  }

 private:
  void check_dims() const {
    if (kernel_.rows() != kernel_.cols()) throw ConstructionError("kernel must be square");
    if (shape_.size() != kernel_.rows()) {
      throw ConstructionError("kernel size does not match image shape");
    }
  }

  Shape shape_;
  SparseMatrix kernel_;
  Vector normalizer_;
};

inline WeightedSpace induced_space(const KernelFilter& filter) { return filter.induced_space(); }

namespace detail {

// Symmetric (half-sample) reflection, valid for offsets up to one image length.
inline int reflect_index(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

struct PaddedImage {
  int pad = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  PaddedImage(const Image& img, int p) : pad(p), rows(img.height() + 2 * p), cols(img.width() + 2 * p) {
    data.resize(std::size_t(rows) * cols);
    for (int r = 0; r < rows; ++r) {
      const int sr = reflect_index(r - p, img.height());
      for (int c = 0; c < cols; ++c) {
        data[std::size_t(r) * cols + c] = img(sr, reflect_index(c - p, img.width()));
      }
    }
  }

  // Squared distance between the patches centred at (r1,c1) and (r2,c2).
  [[nodiscard]] double patch_distance2(int r1, int c1, int r2, int c2) const {
    double acc = 0.0;
    const int size = 2 * pad + 1;
    for (int a = 0; a < size; ++a) {
      const double* p1 = &data[std::size_t(r1 + a) * cols + c1];
      const double* p2 = &data[std::size_t(r2 + a) * cols + c2];
      for (int b = 0; b < size; ++b) {
        const double d = p1[b] - p2[b];
        acc += d * d;
      }
    }
    return acc;
  }
};

}  // namespace detail

/// NLM kernel filter from a guide image:
///   K(s,t) = hat(s - t) * exp(-||P_s - P_t||^2 / (2 h^2)),  D = diag(K 1).
///
/// Each unordered pair is evaluated once and written to both triangles, so K
/// is bit-exactly symmetric. Rows are split into contiguous blocks across
/// threads; blocks are merged in order, which keeps the result independent of
/// the thread count.
inline KernelFilter build_kernel(const Image& guide, const KernelConfig& cfg) {
  cfg.validate();
  const int h = guide.height();
  const int w = guide.width();
  const int min_dim = 2 * cfg.patch_radius + 1;
  if (h < min_dim || w < min_dim) {
    throw ConstructionError("guide image smaller than one patch");
  }
  for (Eigen::Index i = 0; i < guide.pixels.size(); ++i) {
    if (!std::isfinite(guide.pixels[i])) throw ConstructionError("guide has non-finite pixels");
  }

  const detail::PaddedImage padded(guide, cfg.patch_radius);
  const int reach = cfg.search_radius - 1;
  const double inv_two_h2 = 1.0 / (2.0 * cfg.patch_bandwidth * cfg.patch_bandwidth);
  using Triplet = Eigen::Triplet<double, std::int64_t>;

  auto build_rows = [&](int row_begin, int row_end, std::vector<Triplet>& out) {
    for (int r = row_begin; r < row_end; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::int64_t s = std::int64_t(r) * w + c;
        out.emplace_back(s, s, 1.0);
        for (int dy = 0; dy <= reach; ++dy) {
          const int r2 = r + dy;
          if (r2 >= h) break;
          const int dx_begin = dy == 0 ? 1 : -reach;
          for (int dx = dx_begin; dx <= reach; ++dx) {
            const int c2 = c + dx;
            if (c2 < 0 || c2 >= w) continue;
            const double spatial = hat_weight(dy, dx, cfg.search_radius);
            const double d2 = padded.patch_distance2(r, c, r2, c2);
            const double value = spatial * std::exp(-d2 * inv_two_h2);
            if (value == 0.0) continue;
            const std::int64_t t = std::int64_t(r2) * w + c2;
            out.emplace_back(s, t, value);
            out.emplace_back(t, s, value);
          }
        }
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int blocks = std::max(1, std::min<int>(int(hw), h));
  std::vector<std::vector<Triplet>> parts(blocks);
  {
    std::vector<std::jthread> workers;
    for (int b = 0; b < blocks; ++b) {
      const int begin = int(std::int64_t(h) * b / blocks);
      const int end = int(std::int64_t(h) * (b + 1) / blocks);
      workers.emplace_back([&, b, begin, end] { build_rows(begin, end, parts[b]); });
    }
  }
  std::vector<Triplet> all;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  all.reserve(total);
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());

  const Eigen::Index n = guide.shape.size();
  SparseMatrix k(n, n);
  k.setFromTriplets(all.begin(), all.end());
  return KernelFilter(guide.shape, std::move(k));
}

/// Spectral certificate that a kernel filter behaves as a member of the class
/// of self-adjoint, nonnegative, contractive linear denoisers in its induced space.
struct ClassLReport {
  Eigen::Index n = 0;
  bool symmetric_kernel = false;
  double min_eigenvalue = 0.0;  // spectrum of W (via D^{-1/2} K D^{-1/2} when K is symmetric)
  double max_eigenvalue = 0.0;
  double self_adjoint_defect = 0.0;  // max |DW - (DW)'|
  double weighted_norm = 0.0;        // ||W|| in the D-norm
  double euclidean_norm = 0.0;       // ||W||_2
  double min_kernel_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
  bool passed = false;

  [[nodiscard]] bool kernel_positive_definite() const { return min_kernel_eigenvalue > 0.0; }
};

namespace detail {

inline double euclidean_operator_norm(const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd gram = w.transpose() * w;
  try {
    const auto res = linalg::power_iteration([&](const Vector& v) -> Vector { return gram * v; },
                                             gram.rows(), 1e-14, 2000);
    return std::sqrt(res.eigenvalue);
  } catch (const NumericError&) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(es.eigenvalues().maxCoeff());
  }
}

}  // namespace detail

inline ClassLReport certify_class_L(const KernelFilter& filter, double tol) {
  const Eigen::Index n = filter.size();
  if (std::size_t(n) > Tolerances::dense_max_pixels) {
    throw SizeError("certify_class_L: n exceeds the dense limit");
  }
  ClassLReport rep;
  rep.n = n;
  rep.tolerance = tol;

  const Eigen::MatrixXd k = filter.dense_kernel();
  const Vector& d = filter.normalizer();
  const Eigen::MatrixXd w = d.cwiseInverse().asDiagonal() * k;
  const Eigen::MatrixXd dw = d.asDiagonal() * w;
  rep.self_adjoint_defect = (dw - dw.transpose()).cwiseAbs().maxCoeff();
  rep.symmetric_kernel = (k - k.transpose()).cwiseAbs().maxCoeff() == 0.0;

  const Vector d_sqrt = d.cwiseSqrt();
  const Vector d_isqrt = d_sqrt.cwiseInverse();
  if (rep.symmetric_kernel) {
    const Eigen::MatrixXd b = d_isqrt.asDiagonal() * k * d_isqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.max_eigenvalue = es.eigenvalues().maxCoeff();
    rep.weighted_norm = es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(k, Eigen::EigenvaluesOnly);
    rep.min_kernel_eigenvalue = ek.eigenvalues().minCoeff();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
    const auto ev = es.eigenvalues();
    double max_imag = ev.imag().cwiseAbs().maxCoeff();
    rep.min_eigenvalue = max_imag > tol ? -std::numeric_limits<double>::infinity()
                                        : ev.real().minCoeff();
    rep.max_eigenvalue = ev.real().maxCoeff();
    const Eigen::MatrixXd similar = d_sqrt.asDiagonal() * w * d_isqrt.asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(similar);
    rep.weighted_norm = svd.singularValues()(0);
  }
  rep.euclidean_norm = detail::euclidean_operator_norm(w);
  rep.passed = rep.min_eigenvalue >= -tol && rep.max_eigenvalue <= 1.0 + tol &&
               rep.self_adjoint_defect < tol && rep.weighted_norm <= 1.0 + tol;
  return rep;
}

/// Writes K as "row col value" lines (0-based, 17 significant digits).
inline void write_kernel_triplets(const KernelFilter& filter, std::ostream& os) {
  os << std::setprecision(17);
  const SparseMatrix& k = filter.kernel();
  for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

/// Writes the diagonal normalizer D in the same triplet layout.
inline void write_normalizer_triplets(const KernelFilter& filter, std::ostream& os) {
  os << std::setprecision(17);
  const Vector& d = filter.normalizer();
  for (Eigen::Index i = 0; i < d.size(); ++i) os << i << ' ' << i << ' ' << d[i] << '\n';
}

}  // namespace pnpw
