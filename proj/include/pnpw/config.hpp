#pragma once

#include <cstddef>

namespace pnpw {

// Numerical tolerances shared across modules. Tests and the acceptance suite
// read the same record so thresholds live in one place.
struct Tolerances {
  // Exact-arithmetic identities (adjoints, symmetry, fixed-point algebra).
  static constexpr double identity = 1e-10;
  // Relative comparison of iterative limits against dense oracles.
  static constexpr double iterative_limit = 1e-5;

  static constexpr double row_sum = 1e-12;
  static constexpr double blur_tap_sum = 1e-12;

  // Power iteration for the smoothness constant.
  static constexpr double power_rel_change = 1e-8;
  static constexpr int power_max_iters = 10000;
  static constexpr double smoothness_inflation = 1.01;

  // Conjugate gradient defaults. The prox tolerance is tighter than the
  // required 1e-10 so that dual-recursion comparisons stay at round-off.
  static constexpr double cg_prox_rel_residual = 1e-13;
  static constexpr double cg_regularizer_rel_residual = 1e-12;
  static constexpr int cg_max_iters_per_unknown = 10;

  // Scalar Newton solve for the speckle prox: |stationarity| < newton * M.
  static constexpr double newton_stationarity = 1e-12;
  static constexpr int newton_max_iters = 200;

  // Dense paths (eigen-decompositions, Cholesky) are refused above this size.
  static constexpr std::size_t dense_max_pixels = 4096;
  // Objective traces use a dense Cholesky of K up to this size, CG beyond.
  static constexpr std::size_t dense_objective_pixels = 1024;

  // Minimum eigenvalue of the stationarity system for a unique minimizer.
  static constexpr double uniqueness_eigen_floor = 1e-8;
  static constexpr double oracle_stationarity = 1e-8;

  static constexpr double psnr_cap_db = 99.0;
};

}  // namespace pnpw
