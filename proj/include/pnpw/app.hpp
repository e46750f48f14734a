#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "pnpw/errors.hpp"
#include "pnpw/fidelity.hpp"
#include "pnpw/forward_model.hpp"
#include "pnpw/image_io.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/metrics.hpp"
#include "pnpw/objective.hpp"
#include "pnpw/problems.hpp"
#include "pnpw/scenes.hpp"
#include "pnpw/solvers.hpp"
#include "pnpw/verify.hpp"

#ifndef PNPW_DATA_DIR
#define PNPW_DATA_DIR "data"
#endif

namespace pnpw::app {

enum class Command { superres, despeckle, denoise, verify, metrics };

enum class ExitCode : int {
  ok = 0,
  check_failed = 1,
  usage = 2,
  io = 3,
  numeric = 4,
};

enum class DenoiserKind { nlm, identity };

/// Everything a command needs. Unset optionals take per-command defaults
/// (see `resolve`).
struct RunConfig {
  Command command = Command::superres;
  std::string input;      // ground truth (superres/despeckle/denoise) or test image (metrics)
  std::string reference;  // metrics only
  std::string output;     // reconstruction image
  std::string trace;      // CSV trace / report
  std::string summary;    // optional summary file; always echoed to stdout

  int factor = 2;
  std::optional<double> sigma;  // Gaussian noise std on the 0..255 scale
  int looks = 5;
  std::uint64_t seed = 0;
  int blur_size = 9;  // 1 selects the identity blur
  double blur_sigma = 1.0;

  std::optional<int> search_radius;
  std::optional<int> patch_radius;
  std::optional<double> bandwidth;
  DenoiserKind denoiser = DenoiserKind::nlm;

  std::optional<double> rho;
  std::optional<int> iters;
  std::optional<int> adapt_iters;
  std::optional<double> tol;

  bool objective = false;
  bool oracle_check = false;
  bool timing = false;
  bool include_controls = false;
};

/// Per-command defaults applied to the unset fields.
struct Resolved {
  KernelConfig kernel;
  SolverConfig solver;
  double sigma = 0.0;
};

inline Resolved resolve(const RunConfig& cfg) {
  Resolved r;
  switch (cfg.command) {
    case Command::superres:
      r.kernel = superres_kernel_config();
      r.solver.rho = 2.5;
      r.solver.max_iters = 300;
      r.sigma = 10.0;
      break;
    case Command::despeckle:
      r.kernel = despeckle_kernel_config(cfg.looks);
      r.solver.rho = 0.2;
      r.solver.max_iters = 40;
      break;
    case Command::denoise:
      r.sigma = 20.0;
      break;
    default:
      break;
  }
  r.solver.adapt_iters = 5;
  r.solver.residual_tol = 1e-6;
  if (cfg.search_radius) r.kernel.search_radius = *cfg.search_radius;
  if (cfg.patch_radius) r.kernel.patch_radius = *cfg.patch_radius;
  if (cfg.bandwidth) r.kernel.patch_bandwidth = *cfg.bandwidth;
  if (cfg.rho) r.solver.rho = *cfg.rho;
  if (cfg.iters) r.solver.max_iters = *cfg.iters;
  if (cfg.adapt_iters) r.solver.adapt_iters = *cfg.adapt_iters;
  if (cfg.tol) r.solver.residual_tol = *cfg.tol;
  if (cfg.sigma) r.sigma = *cfg.sigma;
  r.solver.record_objective = cfg.objective;
  r.solver.max_iters = std::max(r.solver.max_iters, r.solver.adapt_iters);
  return r;
}

inline std::string bundled_image() { return std::string(PNPW_DATA_DIR) + "/scene64.pgm"; }

namespace detail {

inline Image load_input(const RunConfig& cfg) {
  return io::read_image(cfg.input.empty() ? bundled_image() : cfg.input);
}

// Key/value summary, printed and optionally written to a file.
class Summary {
 public:
  template <class T>
  void add(const std::string& key, const T& value) {
    body_ << key << " = " << value << '\n';
  }
  void add_db(const std::string& key, double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    add(key, s.str());
  }
  void emit(const RunConfig& cfg, std::ostream& out) const {
    out << body_.str();
    if (!cfg.summary.empty()) {
      std::ofstream f(cfg.summary);
      if (!f) throw IoError("cannot write " + cfg.summary);
      f << body_.str();
    }
  }

 private:
  std::ostringstream body_;
};

inline std::string blur_text(int size, double sigma) {
  if (size <= 1) return "delta";
  std::ostringstream s;
  s << "gaussian " << size << "x" << size << " sigma " << sigma;
  return s.str();
}

inline void write_trace(const RunConfig& cfg, const SolverTrace& trace) {
  if (cfg.trace.empty()) return;
  std::ofstream f(cfg.trace);
  if (!f) throw IoError("cannot write " + cfg.trace);
  trace.write_csv(f, cfg.timing);
}

inline void write_output(const RunConfig& cfg, const Image& img) {
  if (!cfg.output.empty()) io::write_image(cfg.output, img);
}

inline std::string ssim_text(const Image& a, const Image& b) {
  try {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << ssim(a, b);
    return s.str();
  } catch (const DimensionError&) {
    return "n/a (image smaller than the SSIM window)";
  }
}

inline void add_kernel(Summary& s, const RunConfig& cfg, const KernelConfig& k) {
  if (cfg.denoiser == DenoiserKind::identity) {
    s.add("denoiser", "identity");
    return;
  }
  s.add("denoiser", "nlm");
  s.add("search_radius", k.search_radius);
  s.add("patch_radius", k.patch_radius);
  s.add("bandwidth", k.patch_bandwidth);
}

inline void add_solver(Summary& s, const SolverConfig& c) {
  s.add("rho", c.rho);
  s.add("max_iters", c.max_iters);
  s.add("adapt_iters", c.adapt_iters);
  s.add("residual_tol", c.residual_tol);
}

inline DenoiserBuilder make_builder(const RunConfig& cfg, Shape shape, const KernelConfig& k) {
  return cfg.denoiser == DenoiserKind::identity ? identity_builder(shape) : nlm_builder(shape, k);
}

}  // namespace detail

/// Simulates a blurred, decimated, noisy observation of the input and
/// reconstructs it with PnP-ISTA started from zero-order-hold upsampling.
inline int cmd_superres(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(cfg);
  r.kernel.validate();
  r.solver.validate();
  const Image gt = detail::load_input(cfg);
  if (gt.height() % cfg.factor != 0 || gt.width() % cfg.factor != 0) {
    throw DimensionError("image dimensions must be divisible by the factor");
  }
  const BlurOperator op =
      cfg.blur_size <= 1 ? BlurOperator::delta() : BlurOperator::gaussian(cfg.blur_size, cfg.blur_sigma);
  const auto obs = simulate_superres(gt, op, cfg.factor, NoiseSpec{GaussianNoise{r.sigma}, cfg.seed});
  const SuperresFidelity fid(obs.observation, op, cfg.factor, gt.shape);
  const Image zoh = upsample_zero_order_hold(obs.observation, cfg.factor);

  SolverHooks hooks;
  hooks.quality = [&](const Vector& x) { return psnr(Image(gt.shape, x), gt); };
  const auto res = pnp_ista(fid, detail::make_builder(cfg, gt.shape, r.kernel), zoh.pixels, r.solver, hooks);
  if (!res.step_condition_ok) {
    err << "warning: rho = " << r.solver.rho << " does not exceed beta/2 = " << 0.5 * res.beta
        << "; convergence is not guaranteed\n";
  }
  const Image rec(gt.shape, res.solution);
  detail::write_output(cfg, rec);
  detail::write_trace(cfg, res.trace);

  detail::Summary s;
  s.add("command", "superres");
  s.add("input", cfg.input.empty() ? bundled_image() : cfg.input);
  s.add("size", std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  s.add("factor", cfg.factor);
  s.add("sigma", r.sigma);
  s.add("blur", detail::blur_text(cfg.blur_size, cfg.blur_sigma));
  s.add("seed", cfg.seed);
  detail::add_kernel(s, cfg, r.kernel);
  detail::add_solver(s, r.solver);
  s.add("beta", res.beta);
  s.add("step_condition", res.step_condition_ok ? "ok" : "violated");
  s.add("iterations", res.iterations);
  s.add("converged", res.converged ? "yes" : "no");
  s.add("final_residual", res.trace.rows.empty() ? 0.0 : res.trace.rows.back().residual);
  s.add_db("psnr_baseline_zoh", psnr(zoh, gt));
  s.add_db("psnr", psnr(rec, gt));
  s.add("ssim_baseline_zoh", detail::ssim_text(zoh, gt));
  s.add("ssim", detail::ssim_text(rec, gt));
  if (cfg.oracle_check) {
    if (std::size_t(gt.shape.size()) > Tolerances::dense_max_pixels) {
      s.add("oracle_check", "skipped (more than 4096 pixels)");
    } else {
      const auto oracle = quadratic_minimizer_oracle(fid, *res.filter, r.solver.rho);
      s.add("oracle_unique", oracle.unique ? "yes" : "no");
      s.add("oracle_relative_error",
            (res.solution - oracle.solution).norm() / oracle.solution.norm());
    }
  }
  s.emit(cfg, out);
  return int(ExitCode::ok);
}

/// Simulates M-look speckle on the input (as reflectance) and runs PnP-ADMM
/// on the log observation; the reconstruction is exp of the y-limit.
inline int cmd_despeckle(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Resolved r = resolve(cfg);
  r.kernel.validate();
  r.solver.validate();
  const Image reflectance = to_reflectance(detail::load_input(cfg));
  const auto obs = simulate_speckle(reflectance, cfg.looks, cfg.seed);
  const SpeckleFidelity fid(obs.log_obs.pixels, cfg.looks);
  const Shape shape = reflectance.shape;

  SolverHooks hooks;
  hooks.quality = [&](const Vector& y) {
    return psnr(Image(shape, y.array().exp().matrix()), reflectance);
  };
  const Vector y0 = obs.log_obs.pixels;
  const auto res = pnp_admm(fid, detail::make_builder(cfg, shape, r.kernel), y0,
                            Vector::Zero(y0.size()), r.solver, hooks);
  const Image rec(shape, res.y.array().exp().matrix());
  detail::write_output(cfg, rec);
  detail::write_trace(cfg, res.trace);

  detail::Summary s;
  s.add("command", "despeckle");
  s.add("input", cfg.input.empty() ? bundled_image() : cfg.input);
  s.add("size", std::to_string(shape.height) + "x" + std::to_string(shape.width));
  s.add("looks", cfg.looks);
  s.add("seed", cfg.seed);
  detail::add_kernel(s, cfg, r.kernel);
  detail::add_solver(s, r.solver);
  s.add("iterations", res.iterations);
  s.add("converged", res.converged ? "yes" : "no");
  s.add("final_residual", res.trace.rows.empty() ? 0.0 : res.trace.rows.back().residual);
  s.add_db("psnr_baseline_observation", psnr(obs.raw, reflectance));
  s.add_db("psnr", psnr(rec, reflectance));
  s.add("ssim_baseline_observation", detail::ssim_text(obs.raw, reflectance));
  s.add("ssim", detail::ssim_text(rec, reflectance));
  if (cfg.oracle_check) s.add("oracle_check", "not available for the non-quadratic speckle fidelity");
  s.emit(cfg, out);
  return int(ExitCode::ok);
}

/// Adds Gaussian noise and applies the NLM filter guided by the noisy image.
inline int cmd_denoise(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Resolved r = resolve(cfg);
  r.kernel.validate();
  const Image gt = detail::load_input(cfg);
  const Image noisy = add_gaussian_noise(gt, r.sigma, cfg.seed);
  const KernelFilter filter = detail::make_builder(cfg, gt.shape, r.kernel)(noisy.pixels);
  const Image den = filter.denoise(noisy);
  detail::write_output(cfg, den);

  SolverTrace trace;
  TraceRow row;
  row.iter = 1;
  row.residual = (den.pixels - noisy.pixels).norm();
  row.psnr = psnr(den, gt);
  trace.rows.push_back(row);
  detail::write_trace(cfg, trace);

  detail::Summary s;
  s.add("command", "denoise");
  s.add("input", cfg.input.empty() ? bundled_image() : cfg.input);
  s.add("sigma", r.sigma);
  s.add("seed", cfg.seed);
  detail::add_kernel(s, cfg, r.kernel);
  s.add_db("psnr_baseline_noisy", psnr(noisy, gt));
  s.add_db("psnr", psnr(den, gt));
  s.add("ssim_baseline_noisy", detail::ssim_text(noisy, gt));
  s.add("ssim", detail::ssim_text(den, gt));
  s.emit(cfg, out);
  return int(ExitCode::ok);
}

/// Runs the verification suite; fails iff a non-control check fails.
inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  verify::SuiteOptions opt;
  opt.seed = cfg.seed;
  opt.include_controls = cfg.include_controls;
  const auto report = verify::run_suite(opt);
  report.write_text(out);
  if (!cfg.trace.empty()) {
    std::ofstream f(cfg.trace);
    if (!f) throw IoError("cannot write " + cfg.trace);
    report.write_csv(f);
  }
  out << (report.ok() ? "verification passed\n" : "verification FAILED\n");
  return int(report.ok() ? ExitCode::ok : ExitCode::check_failed);
}

/// PSNR and SSIM of --input against --reference.
inline int cmd_metrics(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.input.empty() || cfg.reference.empty()) {
    throw ConstructionError("metrics needs --input and --reference");
  }
  const Image a = io::read_image(cfg.input);
  const Image b = io::read_image(cfg.reference);
  const double p = psnr(a, b);
  std::ostringstream csv;
  csv << "metric,value\n" << std::setprecision(17) << "psnr," << p << '\n';
  try {
    csv << "ssim," << ssim(a, b) << '\n';
  } catch (const DimensionError&) {
    csv << "ssim,\n";
  }
  out << csv.str();
  if (!cfg.trace.empty()) {
    std::ofstream f(cfg.trace);
    if (!f) throw IoError("cannot write " + cfg.trace);
    f << csv.str();
  }
  return int(ExitCode::ok);
}

/// Dispatches and maps library errors to exit codes.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Command::superres: return cmd_superres(cfg, out, err);
      case Command::despeckle: return cmd_despeckle(cfg, out, err);
      case Command::denoise: return cmd_denoise(cfg, out, err);
      case Command::verify: return cmd_verify(cfg, out, err);
      case Command::metrics: return cmd_metrics(cfg, out, err);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return int(ExitCode::io);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return int(ExitCode::numeric);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return int(ExitCode::usage);
  }
  return int(ExitCode::usage);
}

}  // namespace pnpw::app
