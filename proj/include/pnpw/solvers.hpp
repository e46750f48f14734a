#pragma once

#include <chrono>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pnpw/errors.hpp"
#include "pnpw/fidelity.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/objective.hpp"

namespace pnpw {

enum class AdaptPolicy {
  rebuild_each_iteration,  // kernel rebuilt from every iterate before freezing
  rebuild_once,            // kernel built from x0, then once more at the freeze
};

enum class StepCheck { warn, error };

struct SolverConfig {
  double rho = 1.0;
  int max_iters = 100;
  double residual_tol = 1e-6;  // on ||x_{k+1} - x_k||_2
  int adapt_iters = 5;
  AdaptPolicy adapt_policy = AdaptPolicy::rebuild_each_iteration;
  bool record_objective = false;
  StepCheck step_check = StepCheck::warn;

  void validate() const {
    if (!(rho > 0.0)) throw ConstructionError("rho must be positive");
    if (adapt_iters < 0) throw ConstructionError("adapt_iters must be >= 0");
    if (max_iters < adapt_iters) throw ConstructionError("max_iters must be >= adapt_iters");
    if (!(residual_tol >= 0.0)) throw ConstructionError("residual_tol must be >= 0");
  }
};

struct TraceRow {
  int iter = 0;
  std::optional<double> objective;
  double residual = 0.0;
  std::optional<double> psnr;
  double seconds = 0.0;
  bool frozen = false;
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  int freeze_iter = 0;  // rows with iter > freeze_iter use the frozen filter

  /// CSV with header iter,objective,residual,psnr,seconds. Wall time is only
  /// written when `include_timing` is set so that default output is reproducible.
  void write_csv(std::ostream& os, bool include_timing = false) const {
    os << "iter,objective,residual,psnr,seconds\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
      os << r.iter << ',';
      if (r.objective) os << *r.objective;
      os << ',' << r.residual << ',';
      if (r.psnr) os << *r.psnr;
      os << ',';
      if (include_timing) os << r.seconds;
      os << '\n';
    }
  }
};

using DenoiserBuilder = std::function<KernelFilter(const Vector& guide)>;
using QualityFn = std::function<double(const Vector& iterate)>;
using IterateObserver = std::function<void(int iter, const Vector& iterate, bool frozen)>;

struct SolverHooks {
  QualityFn quality;         // fills the psnr column when set
  IterateObserver observer;  // called after every iteration
};

inline DenoiserBuilder nlm_builder(Shape shape, KernelConfig cfg) {
  return [shape, cfg](const Vector& guide) { return build_kernel(Image(shape, guide), cfg); };
}

inline DenoiserBuilder identity_builder(Shape shape) {
  return [shape](const Vector&) { return KernelFilter::identity(shape); };
}

struct IstaResult {
  Vector solution;
  SolverTrace trace;
  std::shared_ptr<const KernelFilter> filter;  // frozen filter
  double beta = 0.0;                           // smoothness estimate in the frozen space
  bool step_condition_ok = true;               // rho > beta / 2
  bool converged = false;
  int iterations = 0;
};

struct AdmmResult {
  Vector y;  // returned solution
  Vector x;
  Vector z;
  SolverTrace trace;
  std::shared_ptr<const KernelFilter> filter;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Adapt-then-freeze bookkeeping shared by both solvers.
class FilterSchedule {
 public:
  FilterSchedule(const DenoiserBuilder& builder, const SolverConfig& cfg)
      : builder_(builder), cfg_(cfg) {}

  // Updates the filter for iteration k (0-based) from `guide`; returns true on the freeze step.
  bool update(int k, const Vector& guide) {
    const bool freeze_now = k == cfg_.adapt_iters;
    const bool rebuild = freeze_now || k == 0 ||
                         (k < cfg_.adapt_iters &&
                          cfg_.adapt_policy == AdaptPolicy::rebuild_each_iteration);
    if (rebuild && k <= cfg_.adapt_iters) {
      filter_ = std::make_shared<const KernelFilter>(builder_(guide));
      if (filter_->size() != guide.size()) throw DimensionError("denoiser size mismatch");
      space_.emplace(filter_->induced_space());
    }
    return freeze_now;
  }

  [[nodiscard]] bool frozen(int k) const { return k >= cfg_.adapt_iters; }
  [[nodiscard]] const KernelFilter& filter() const { return *filter_; }
  [[nodiscard]] std::shared_ptr<const KernelFilter> shared() const { return filter_; }
  [[nodiscard]] const WeightedSpace& space() const { return *space_; }

 private:
  const DenoiserBuilder& builder_;
  const SolverConfig& cfg_;
  std::shared_ptr<const KernelFilter> filter_;
  std::optional<WeightedSpace> space_;
};

}  // namespace detail

/// Plug-and-play ISTA in the denoiser-induced space:
///   x_{k+1} = W (x_k - rho^{-1} grad_D f(x_k)),  grad_D f = D^{-1} grad f.
///
/// For the first `adapt_iters` iterations the kernel is rebuilt from the
/// current iterate; afterwards (W, D) are frozen. Iteration stops once a
/// post-freeze step moves the iterate by less than `residual_tol`.
template <SmoothFidelity Fidelity>
IstaResult pnp_ista(const Fidelity& fid, const DenoiserBuilder& builder, const Vector& x0,
                    const SolverConfig& cfg, const SolverHooks& hooks = {}) {
  cfg.validate();
  IstaResult out;
  out.trace.freeze_iter = cfg.adapt_iters;
  detail::FilterSchedule schedule(builder, cfg);
  std::optional<RegularizerHandle> reg;
  detail::Stopwatch clock;
  Vector x = x0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (schedule.update(k, x)) {
      out.beta = fid.smoothness_bound(schedule.space());
      out.step_condition_ok = cfg.rho > 0.5 * out.beta;
      if (!out.step_condition_ok && cfg.step_check == StepCheck::error) {
        throw NumericError("step condition rho > beta/2 violated (beta = " +
                           std::to_string(out.beta) + ")");
      }
      if (cfg.record_objective) reg.emplace(RegularizerHandle::automatic(schedule.shared()));
    }
    const bool frozen = schedule.frozen(k);
    const Vector step = x - fid.weighted_gradient(x, schedule.space()) / cfg.rho;
    Vector next = schedule.filter().denoise(step);
    const double residual = (next - x).norm();
    x = std::move(next);

    TraceRow row;
    row.iter = k + 1;
    row.residual = residual;
    row.frozen = frozen;
    if (frozen && reg) row.objective = composite_objective(fid, *reg, cfg.rho, x);
    if (hooks.quality) row.psnr = hooks.quality(x);
    row.seconds = clock.seconds();
    out.trace.rows.push_back(row);
    if (hooks.observer) hooks.observer(k + 1, x, frozen);
    out.iterations = k + 1;
    if (frozen && residual < cfg.residual_tol) {
      out.converged = true;
      break;
    }
  }
  out.solution = std::move(x);
  out.filter = schedule.shared();
  return out;
}

/// Plug-and-play ADMM in the denoiser-induced space:
///   x_{k+1} = Prox_{f/rho}(y_k - z_k)   (prox in the D-norm)
///   y_{k+1} = W (x_{k+1} + z_k)
///   z_{k+1} = z_k + x_{k+1} - y_{k+1}
/// with the same adapt/freeze policy applied to W, guided by y_k.
template <ProxFidelity Fidelity>
AdmmResult pnp_admm(const Fidelity& fid, const DenoiserBuilder& builder, const Vector& y0,
                    const Vector& z0, const SolverConfig& cfg, const SolverHooks& hooks = {}) {
  cfg.validate();
  detail::require_same_size(y0.size(), z0.size(), "pnp_admm");
  AdmmResult out;
  out.trace.freeze_iter = cfg.adapt_iters;
  detail::FilterSchedule schedule(builder, cfg);
  std::optional<RegularizerHandle> reg;
  detail::Stopwatch clock;
  Vector y = y0;
  Vector z = z0;
  Vector x = y0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (schedule.update(k, y) && cfg.record_objective) {
      reg.emplace(RegularizerHandle::automatic(schedule.shared()));
    }
    const bool frozen = schedule.frozen(k);
    if constexpr (WarmStartProx<Fidelity>) {
      x = fid.weighted_prox(y - z, cfg.rho, schedule.space(), x);
    } else {
      x = fid.weighted_prox(y - z, cfg.rho, schedule.space());
    }
    Vector y_next = schedule.filter().denoise(x + z);
    z += x - y_next;
    const double residual = (y_next - y).norm();
    y = std::move(y_next);

    TraceRow row;
    row.iter = k + 1;
    row.residual = residual;
    row.frozen = frozen;
    if (frozen && reg) row.objective = composite_objective(fid, *reg, cfg.rho, y);
    if (hooks.quality) row.psnr = hooks.quality(y);
    row.seconds = clock.seconds();
    out.trace.rows.push_back(row);
    if (hooks.observer) hooks.observer(k + 1, y, frozen);
    out.iterations = k + 1;
    if (frozen && residual < cfg.residual_tol) {
      out.converged = true;
      break;
    }
  }
  out.y = std::move(y);
  out.x = std::move(x);
  out.z = std::move(z);
  out.filter = schedule.shared();
  return out;
}

/// One application of the single-variable ADMM operator
///   T = 1/2 I + 1/2 (2 Prox_{f/rho} - I)(2W - I).
template <ProxFidelity Fidelity>
Vector t_admm_apply(const Vector& u, const Fidelity& fid, const KernelFilter& filter, double rho) {
  detail::require_same_size(u.size(), filter.size(), "t_admm_apply");
  const WeightedSpace w = filter.induced_space();
  const Vector reflected = 2.0 * filter.denoise(u) - u;
  const Vector p = fid.weighted_prox(reflected, rho, w);
  return 0.5 * u + 0.5 * (2.0 * p - reflected);
}

/// One application of T = W (I - rho^{-1} grad_D f).
template <SmoothFidelity Fidelity>
Vector t_ista_apply(const Vector& x, const Fidelity& fid, const KernelFilter& filter, double rho) {
  return filter.denoise(x - fid.weighted_gradient(x, filter.induced_space()) / rho);
}

}  // namespace pnpw
