#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "pnpw/config.hpp"
#include "pnpw/fidelity.hpp"
#include "pnpw/forward_model.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/objective.hpp"
#include "pnpw/problems.hpp"
#include "pnpw/scenes.hpp"
#include "pnpw/solvers.hpp"

namespace pnpw::verify {

struct CheckResult {
  std::string name;
  std::string property;  // the statement being certified
  bool passed = false;
  bool control = false;  // deliberately constructed to fail
  bool skipped = false;
  double defect = 0.0;
  double tolerance = 0.0;
  std::string instance;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  // True when every non-control, non-skipped check passed.
  [[nodiscard]] bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) {
      return c.control || c.skipped || c.passed;
    });
  }

  void write_text(std::ostream& os) const {
    for (const auto& c : checks) {
      const char* status = c.skipped ? "SKIP" : (c.passed ? "PASS" : "FAIL");
      os << std::left << std::setw(5) << status << ' ' << c.name << (c.control ? " [control]" : "")
         << "  defect=" << std::setprecision(6) << c.defect << " tol=" << c.tolerance << "  ("
         << c.instance << ")\n    " << c.property << '\n';
    }
  }

  void write_csv(std::ostream& os) const {
    os << "check,pass,defect,tolerance,instance\n" << std::setprecision(17);
    for (const auto& c : checks) {
      os << c.name << (c.control ? "[control]" : "") << ','
         << (c.skipped ? "skip" : (c.passed ? "true" : "false")) << ',' << c.defect << ','
         << c.tolerance << ",\"" << c.instance << "\"\n";
    }
  }
};

namespace detail {

inline Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_gaussian(n, n, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// U diag(s) V' with s uniform in [0, max_gain]; non-expansive when max_gain <= 1.
inline Eigen::MatrixXd random_contraction(Eigen::Index n, double max_gain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, max_gain);
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = u(rng);
  return random_orthogonal(n, rng) * s.asDiagonal() * random_orthogonal(n, rng).transpose();
}

inline std::string describe(std::initializer_list<std::pair<const char*, std::string>> kv) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << ' ';
    os << k << '=' << v;
    first = false;
  }
  return os.str();
}

template <class T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// A symmetric W with spectrum in [0,1] is theta-averaged in the Euclidean
/// space for theta in [1/2, 1): the map W/theta - (1/theta - 1) I has spectral norm <= 1.
inline CheckResult check_symmetric_averaged(const Eigen::MatrixXd& w,
                                            const std::vector<double>& thetas,
                                            std::string instance) {
  CheckResult res;
  res.name = "symmetric_contraction_averaged";
  res.property = "symmetric W with eigenvalues in [0,1] is theta-averaged in the Euclidean space";
  res.tolerance = 1e-12;
  res.instance = std::move(instance);
  const Eigen::Index n = w.rows();
  double worst = -1.0;
  for (double theta : thetas) {
    const Eigen::MatrixXd a =
        w / theta - (1.0 / theta - 1.0) * Eigen::MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()),
                                                      Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff() - 1.0);
  }
  res.defect = std::max(0.0, worst);
  res.passed = worst <= res.tolerance;
  return res;
}

/// Random instance: W = Q diag(lambda) Q', lambda uniform in [lo, 1].
inline CheckResult check_symmetric_averaged(Eigen::Index n, std::uint64_t seed, double lo = 0.0) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd q = detail::random_orthogonal(n, rng);
  std::uniform_real_distribution<double> u(lo, 1.0);
  Vector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = u(rng);
  const Eigen::MatrixXd w = q * lambda.asDiagonal() * q.transpose();
  return check_symmetric_averaged(
      0.5 * (w + w.transpose()), {0.5, 0.75, 0.9},
      detail::describe({{"n", detail::str(n)}, {"seed", detail::str(seed)},
                        {"eig_lo", detail::str(lo)}}));
}

struct ExpansionCertificate {
  double spectral_norm = 0.0;
  Vector x;  // paired with y = 0
  double ratio = 0.0;  // ||W x|| / ||x||
};

inline ExpansionCertificate expansion_certificate(const Eigen::MatrixXd& w) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullV);
  ExpansionCertificate cert;
  cert.spectral_norm = svd.singularValues()(0);
  cert.x = svd.matrixV().col(0);
  cert.ratio = (w * cert.x).norm() / cert.x.norm();
  return cert;
}

/// A row-stochastic W that is not doubly stochastic expands some pair in the
/// Euclidean norm, so it cannot be averaged there.
inline CheckResult check_row_stochastic_expansion(const Eigen::MatrixXd& w, std::string instance) {
  CheckResult res;
  res.name = "row_stochastic_not_averaged";
  res.property = "row-stochastic, non-doubly-stochastic W expands a pair: ||Wx - Wy|| > ||x - y||";
  res.tolerance = 1e-12;
  res.instance = std::move(instance);
  const auto cert = expansion_certificate(w);
  res.defect = cert.ratio - 1.0;
  res.passed = cert.ratio > 1.0 + res.tolerance;
  return res;
}

inline Eigen::MatrixXd row_stochastic_example() {
  Eigen::MatrixXd w(2, 2);
  w << 1.0, 0.0, 0.5, 0.5;
  return w;
}

/// For T = (1-theta) I + theta S with S non-expansive:
///   ||Tx - Ty||^2 <= ||x - y||^2 - ((1-theta)/theta) ||(I-T)x - (I-T)y||^2.
inline CheckResult check_averaged_inequality(const Eigen::MatrixXd& s, double theta,
                                             std::uint64_t seed, int trials,
                                             std::string instance) {
  CheckResult res;
  res.name = "averaged_operator_inequality";
  res.property = "theta-averaged T satisfies the ((1-theta)/theta) residual descent inequality";
  res.tolerance = Tolerances::identity;
  res.instance = std::move(instance);
  const Eigen::Index n = s.rows();
  const Eigen::MatrixXd t = (1.0 - theta) * Eigen::MatrixXd::Identity(n, n) + theta * s;
  std::mt19937_64 rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int k = 0; k < trials; ++k) {
    const Vector x = detail::random_gaussian(n, 1, rng);
    const Vector y = detail::random_gaussian(n, 1, rng);
    const Vector dt = t * (x - y);
    const Vector dr = (x - y) - dt;
    const double lhs = dt.squaredNorm();
    const double rhs = (x - y).squaredNorm() - (1.0 - theta) / theta * dr.squaredNorm();
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + res.tolerance) ++violations;
  }
  res.defect = std::max(0.0, worst);
  res.passed = violations == 0;
  return res;
}

/// Random S = U diag(s) V' with s uniform in [0, max_gain]; `max_gain` > 1
/// gives an expansive S (used as a control).
inline CheckResult check_averaged_inequality(Eigen::Index n, double theta, std::uint64_t seed,
                                             int trials, double max_gain = 1.0) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd s = detail::random_contraction(n, max_gain, rng);
  return check_averaged_inequality(
      s, theta, seed + 1, trials,
      detail::describe({{"n", detail::str(n)}, {"theta", detail::str(theta)},
                        {"seed", detail::str(seed)}, {"trials", detail::str(trials)},
                        {"gain", detail::str(max_gain)}}));
}

/// In the D-weighted space a kernel filter W is self-adjoint, nonnegative and
/// has operator norm at most one.
inline CheckResult check_class_l_conditions(const KernelFilter& filter, std::uint64_t seed,
                                            std::string instance, int samples = 100) {
  CheckResult res;
  res.name = "class_L_conditions";
  res.property = "W is self-adjoint, nonnegative and contractive in the D-weighted inner product";
  res.tolerance = Tolerances::identity;
  res.instance = std::move(instance);
  const ClassLReport rep = certify_class_L(filter, res.tolerance);
  const Eigen::MatrixXd w = filter.dense_operator();
  const Vector& d = filter.normalizer();
  std::mt19937_64 rng(seed);
  double min_form = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const Vector x = detail::random_gaussian(filter.size(), 1, rng);
    min_form = std::min(min_form, (x.array() * d.array() * (w * x).array()).sum());
  }
  res.defect = std::max({rep.self_adjoint_defect, -min_form, rep.weighted_norm - 1.0, 0.0});
  res.passed = rep.self_adjoint_defect < res.tolerance && min_form >= -res.tolerance &&
               rep.weighted_norm <= 1.0 + res.tolerance;
  return res;
}

// NLM filter with K(0,1) perturbed by `amount` (breaks symmetry of K).
inline KernelFilter asymmetric_perturbation(const KernelFilter& filter, double amount) {
  SparseMatrix k = filter.kernel();
  k.coeffRef(0, 1) += amount;
  k.makeCompressed();
  return KernelFilter(filter.shape(), std::move(k));
}

/// Runs three-variable PnP-ADMM from (y0, z0) and the single-variable
/// recursion u_{k+1} = T(u_k) from u_1 = y_1 + z_1 side by side, comparing
/// y_k = W u_k, z_k = (I - W) u_k and x_{k+1} = Prox((2W - I) u_k).
/// `perturb_rho` scales rho inside T only (control).
template <ProxFidelity Fidelity>
CheckResult check_admm_equivalence(const Fidelity& fid, const KernelFilter& filter, double rho,
                                   const Vector& y0, const Vector& z0, int iters,
                                   std::string instance, double perturb_rho = 1.0) {
  CheckResult res;
  res.name = "admm_single_variable_equivalence";
  res.property = "PnP-ADMM iterates are recovered from u_{k+1} = T_ADMM(u_k), u_1 = y_1 + z_1";
  res.tolerance = Tolerances::identity;
  res.instance = std::move(instance);
  const WeightedSpace w = filter.induced_space();

  Vector x = fid.weighted_prox(y0 - z0, rho, w);
  Vector y = filter.denoise(x + z0);
  Vector z = z0 + x - y;
  Vector u = y + z;
  double worst = 0.0;
  for (int k = 1; k <= iters; ++k) {
    const Vector wu = filter.denoise(u);
    worst = std::max(worst, (y - wu).norm());
    worst = std::max(worst, (z - (u - wu)).norm());
    const Vector x_next = fid.weighted_prox(y - z, rho, w);
    const Vector x_hat = fid.weighted_prox(2.0 * wu - u, rho * perturb_rho, w);
    worst = std::max(worst, (x_next - x_hat).norm());
    const Vector y_next = filter.denoise(x_next + z);
    z += x_next - y_next;
    y = y_next;
    u = t_admm_apply(u, fid, filter, rho * perturb_rho);
  }
  res.defect = worst;
  res.passed = worst < res.tolerance;
  return res;
}

struct FixedPointOutcome {
  CheckResult ista;
  CheckResult admm;
  CheckResult agreement;
};

/// Runs PnP-ISTA and PnP-ADMM with a frozen filter to a tight residual and
/// compares both limits with the dense minimizer of f + rho g. `oracle_rho`
/// overrides the rho given to the oracle (control).
inline FixedPointOutcome check_fixed_point_optimality(const SuperresFidelity& fid,
                                                      const KernelFilter& filter, double rho,
                                                      const Vector& x0, std::string instance,
                                                      int max_iters = 50000,
                                                      double oracle_rho = -1.0) {
  FixedPointOutcome out;
  auto init = [&](const char* name, const char* property) {
    CheckResult c;
    c.name = name;
    c.property = property;
    c.tolerance = Tolerances::iterative_limit;
    c.instance = instance;
    return c;
  };
  out.ista = init("ista_fixed_point_optimality", "PnP-ISTA limit is a minimizer of f + rho g");
  out.admm = init("admm_fixed_point_optimality", "PnP-ADMM y-limit is a minimizer of f + rho g");
  out.agreement = init("ista_admm_limit_agreement", "PnP-ISTA and PnP-ADMM reach the same limit");
  out.agreement.tolerance = 1e-4;

  const auto oracle = quadratic_minimizer_oracle(fid, filter, oracle_rho > 0.0 ? oracle_rho : rho);
  if (!oracle.unique) {
    for (CheckResult* c : {&out.ista, &out.admm, &out.agreement}) {
      c->skipped = true;
      c->instance += " (minimizer not unique)";
    }
    return out;
  }
  const auto shared = std::make_shared<const KernelFilter>(filter);
  const DenoiserBuilder frozen = [shared](const Vector&) { return *shared; };
  SolverConfig cfg;
  cfg.rho = rho;
  cfg.adapt_iters = 0;
  cfg.max_iters = max_iters;
  cfg.residual_tol = 1e-10;
  const auto ista = pnp_ista(fid, frozen, x0, cfg);
  const auto admm = pnp_admm(fid, frozen, x0, Vector::Zero(x0.size()), cfg);
  const double scale = oracle.solution.norm();
  out.ista.defect = (ista.solution - oracle.solution).norm() / scale;
  out.ista.passed = ista.converged && out.ista.defect < out.ista.tolerance;
  out.admm.defect = (admm.y - oracle.solution).norm() / scale;
  out.admm.passed = admm.converged && out.admm.defect < out.admm.tolerance;
  out.agreement.defect = (ista.solution - admm.y).norm() / ista.solution.norm();
  out.agreement.passed = out.agreement.defect < out.agreement.tolerance;
  return out;
}

struct SuiteOptions {
  std::uint64_t seed = 2021;
  bool include_controls = false;
};

/// Full suite over small dense instances.
inline VerificationReport run_suite(const SuiteOptions& opt = {}) {
  VerificationReport rep;
  auto add = [&](CheckResult c, bool control = false) {
    c.control = control;
    if (!control || opt.include_controls) rep.checks.push_back(std::move(c));
  };
  const std::uint64_t seed = opt.seed;

  add(check_symmetric_averaged(64, seed));
  add(check_symmetric_averaged(Eigen::MatrixXd::Identity(8, 8), {0.5, 0.75, 0.9}, "W=I n=8"));
  add(check_symmetric_averaged(Eigen::MatrixXd::Zero(8, 8), {0.5, 0.75, 0.9}, "W=0 n=8"));
  add(check_symmetric_averaged(64, seed + 1, -0.5), true);

  add(check_row_stochastic_expansion(row_stochastic_example(), "W=[[1,0],[0.5,0.5]]"));
  add(check_row_stochastic_expansion(Eigen::MatrixXd::Constant(2, 2, 0.5), "W=[[0.5,0.5],[0.5,0.5]]"),
      true);

  for (Eigen::Index n : {64, 128}) {
    for (double theta : {0.5, 0.7, 0.9}) {
      add(check_averaged_inequality(n, theta, seed + std::uint64_t(n), 1000));
    }
  }
  add(check_averaged_inequality(64, 0.7, seed, 1000, 1.5), true);

  const Shape small{8, 8};
  KernelConfig kc;
  kc.search_radius = 3;
  kc.patch_radius = 1;
  kc.patch_bandwidth = 0.2;
  const KernelFilter nlm = build_kernel(random_image(small, seed), kc);
  add(check_class_l_conditions(nlm, seed, "NLM 8x8 random guide Ns=3 p=1 h=0.2"));
  add(check_class_l_conditions(KernelFilter::identity(small), seed, "identity 8x8"));
  add(check_class_l_conditions(build_kernel(Image(small, 0.5), kc), seed, "NLM 8x8 constant guide"));
  add(check_class_l_conditions(asymmetric_perturbation(nlm, 1e-3), seed,
                               "NLM 8x8 with K(0,1) += 1e-3"),
      true);

  {
    const Shape s{16, 16};
    const auto sp = make_speckle_instance(s, 5, seed);
    const KernelFilter f = build_kernel(sp.observation.log_obs, despeckle_kernel_config(5));
    const Vector z0 = Vector::Zero(s.size());
    add(check_admm_equivalence(sp.fidelity, f, 0.2, sp.observation.log_obs.pixels, z0, 20,
                               "despeckle 16x16 M=5 rho=0.2"));
    const auto sr = make_superres_instance(s, 2, 10.0, seed);
    const KernelFilter g = build_kernel(Image(s, sr.x0), superres_kernel_config());
    add(check_admm_equivalence(sr.fidelity, g, 2.5, sr.x0, z0, 20, "superres 16x16 K=2 rho=2.5"));
    add(check_admm_equivalence(sp.fidelity, f, 0.2, sp.observation.log_obs.pixels, z0, 20,
                               "despeckle 16x16, T uses 2 rho", 2.0),
        true);
  }

  {
    const Shape s{32, 32};
    const auto sr = make_superres_instance(s, 2, 10.0, seed);
    const KernelFilter f = build_kernel(Image(s, sr.x0), superres_kernel_config());
    const auto fp = check_fixed_point_optimality(sr.fidelity, f, 2.5, sr.x0,
                                                 "superres 32x32 K=2 sigma=10 rho=2.5");
    add(fp.ista);
    add(fp.admm);
    add(fp.agreement);
    if (opt.include_controls) {
      auto ctl = check_fixed_point_optimality(sr.fidelity, f, 2.5, sr.x0,
                                              "superres 32x32, oracle uses 2 rho", 50000, 5.0);
      add(ctl.ista, true);
    }
  }
  return rep;
}

}  // namespace pnpw::verify
