#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "pnpw/config.hpp"
#include "pnpw/errors.hpp"
#include "pnpw/fidelity.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/linalg.hpp"

namespace pnpw {

enum class RegularizerSolver { dense_cholesky, sparse_cholesky, conjugate_gradient };

/// The quadratic regularizer g(x) = 1/2 x' D (K^{-1} D - I) x whose proximal
/// map in the D-weighted space is the kernel filter itself.
///
/// K^{-1} is never formed; every evaluation solves K z = D x with a Cholesky
/// factor (dense or sparse) computed once at construction, or with CG.
class RegularizerHandle {
 public:
  RegularizerHandle(std::shared_ptr<const KernelFilter> filter, RegularizerSolver solver)
      : filter_(std::move(filter)), solver_(solver) {
    if (!filter_) throw ConstructionError("regularizer needs a filter");
    if (solver_ == RegularizerSolver::dense_cholesky) {
      if (std::size_t(filter_->size()) > Tolerances::dense_max_pixels) {
        throw SizeError("dense Cholesky regularizer limited to n <= 4096");
      }
      llt_.emplace(filter_->dense_kernel());
      if (llt_->info() != Eigen::Success) {
        throw NumericError("kernel matrix is not positive definite");
      }
    } else if (solver_ == RegularizerSolver::sparse_cholesky) {
      sparse_llt_ = std::make_shared<SparseLlt>(Eigen::SparseMatrix<double>(filter_->kernel()));
      if (sparse_llt_->info() != Eigen::Success) {
        throw NumericError("kernel matrix is not positive definite");
      }
    }
  }

  // Dense factorization for small problems, sparse Cholesky otherwise.
  static RegularizerHandle automatic(std::shared_ptr<const KernelFilter> filter) {
    const auto n = std::size_t(filter->size());
    const auto kind = n <= Tolerances::dense_objective_pixels ? RegularizerSolver::dense_cholesky
                                                              : RegularizerSolver::sparse_cholesky;
    return RegularizerHandle(std::move(filter), kind);
  }

  [[nodiscard]] const KernelFilter& filter() const { return *filter_; }
  [[nodiscard]] RegularizerSolver solver() const { return solver_; }

  // K^{-1} b
  [[nodiscard]] Vector solve_kernel(const Vector& b) const {
    detail::require_same_size(b.size(), filter_->size(), "solve_kernel");
    if (llt_) return llt_->solve(b);
    if (sparse_llt_) return sparse_llt_->solve(b);
    const SparseMatrix& k = filter_->kernel();
    auto op = [&](const Vector& v) -> Vector { return k * v; };
    const int max_iters = int(Tolerances::cg_max_iters_per_unknown * filter_->size());
    return linalg::conjugate_gradient(op, b, Vector::Zero(b.size()),
                                      Tolerances::cg_regularizer_rel_residual, max_iters)
        .solution;
  }

  [[nodiscard]] double value(const Vector& x) const {
    const Vector dx = filter_->normalizer().cwiseProduct(x);
    const Vector z = solve_kernel(dx);
    return 0.5 * (dx.dot(z) - dx.dot(x));
  }

  // Gradient in the D-weighted space: (K^{-1} D - I) x.
  [[nodiscard]] Vector weighted_gradient(const Vector& x) const {
    return solve_kernel(filter_->normalizer().cwiseProduct(x)) - x;
  }

 private:
  using SparseLlt = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>;

  std::shared_ptr<const KernelFilter> filter_;
  RegularizerSolver solver_;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt_;
  std::shared_ptr<SparseLlt> sparse_llt_;  // the factor is not copyable
};

inline double g_d_value(const RegularizerHandle& reg, const Vector& x) { return reg.value(x); }

template <class Fidelity>
double composite_objective(const Fidelity& fid, const RegularizerHandle& reg, double rho,
                           const Vector& x) {
  const double f = fid.value(x);
  if (rho == 0.0) return f;
  return f + rho * reg.value(x);
}

/// Solves argmin_v 1/2 <v,(K^{-1}D - I)v>_D + 1/2 ||v - x||_D^2 through its dense
/// stationarity system (D K^{-1} D) v = D x and returns ||v - W x||_inf.
inline double prox_identity_check(const KernelFilter& filter, const Vector& x) {
  const Eigen::Index n = filter.size();
  if (std::size_t(n) > Tolerances::dense_max_pixels) {
    throw SizeError("prox_identity_check limited to n <= 4096");
  }
  detail::require_same_size(x.size(), n, "prox_identity_check");
  const Vector& d = filter.normalizer();
  Eigen::LLT<Eigen::MatrixXd> k_llt(filter.dense_kernel());
  if (k_llt.info() != Eigen::Success) throw NumericError("kernel matrix is not positive definite");
  const Eigen::MatrixXd kinv_d = k_llt.solve(Eigen::MatrixXd(d.asDiagonal()));
  Eigen::MatrixXd system = d.asDiagonal() * kinv_d;
  system = 0.5 * (system + system.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> s_llt(system);
  if (s_llt.info() != Eigen::Success) throw NumericError("prox stationarity system is singular");
  const Vector v = s_llt.solve(d.cwiseProduct(x));
  return (v - filter.denoise(x)).cwiseAbs().maxCoeff();
}

struct MinimizerOracle {
  Vector solution;
  bool unique = true;
  double min_eigenvalue = 0.0;  // of the symmetric system D * (stationarity operator)
  double stationarity = 0.0;    // ||grad f + rho grad g||_D at the solution
  Vector null_direction;        // set when the minimizer is not unique
};

namespace detail {

// Dense matrix of the linear map S B (m x n).
inline Eigen::MatrixXd dense_forward(const SuperresFidelity& fid) {
  const Eigen::Index n = fid.shape().size();
  const Eigen::Index m = fid.observation().pixels.size();
  Eigen::MatrixXd a(m, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = fid.forward(e);
    e[j] = 0.0;
  }
  return a;
}

}  // namespace detail

/// Dense minimizer of f + rho g for the quadratic superresolution fidelity.
///
/// Solves the D-symmetrized stationarity system
///   (scale A'A + rho (D K^{-1} D - D)) x = scale A'y,  A = S B,
/// which equals D times (D^{-1}A'A + rho (K^{-1}D - I)). Under rank deficiency
/// the minimum-norm solution is returned with `unique = false`.
inline MinimizerOracle quadratic_minimizer_oracle(const SuperresFidelity& fid,
                                                  const KernelFilter& filter, double rho) {
  const Eigen::Index n = filter.size();
  if (std::size_t(n) > Tolerances::dense_max_pixels) {
    throw SizeError("minimizer oracle limited to n <= 4096");
  }
  detail::require_same_size(fid.shape().size(), n, "quadratic_minimizer_oracle");
  const Vector& d = filter.normalizer();
  const Eigen::MatrixXd a = detail::dense_forward(fid);
  Eigen::MatrixXd h = fid.scale() * (a.transpose() * a);
  if (rho != 0.0) {
    Eigen::LLT<Eigen::MatrixXd> k_llt(filter.dense_kernel());
    if (k_llt.info() != Eigen::Success) throw NumericError("kernel matrix is not positive definite");
    const Eigen::MatrixXd kinv_d = k_llt.solve(Eigen::MatrixXd(d.asDiagonal()));
    Eigen::MatrixXd reg = d.asDiagonal() * kinv_d;
    reg.diagonal() -= d;
    h += rho * 0.5 * (reg + reg.transpose());
  }
  const Vector b = fid.scale() * (a.transpose() * fid.observation().pixels);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Vector& lambda = es.eigenvalues();
  MinimizerOracle out;
  out.min_eigenvalue = lambda[0];
  out.unique = lambda[0] > Tolerances::uniqueness_eigen_floor;
  if (!out.unique) out.null_direction = es.eigenvectors().col(0);
  const Vector coeffs = es.eigenvectors().transpose() * b;
  Vector scaled(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    scaled[i] = lambda[i] > Tolerances::uniqueness_eigen_floor ? coeffs[i] / lambda[i] : 0.0;
  }
  out.solution = es.eigenvectors() * scaled;

  const Vector residual = h * out.solution - b;
  out.stationarity = std::sqrt((residual.array().square() / d.array()).sum());
  if (out.stationarity >= Tolerances::oracle_stationarity) {
    throw NumericError("minimizer oracle failed its stationarity certificate");
  }
  return out;
}

}  // namespace pnpw
