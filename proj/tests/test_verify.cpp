#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pnpw/verify.hpp"

using namespace pnpw;
using namespace pnpw::verify;

namespace {

struct ZeroFidelity {
  [[nodiscard]] double value(const Vector&) const { return 0.0; }
  [[nodiscard]] Vector weighted_prox(const Vector& u, double, const WeightedSpace&) const { return u; }
};

}  // namespace

TEST(SymmetricAveraged, Examples) {
  const std::vector<double> thetas{0.5, 0.75, 0.9};
  EXPECT_TRUE(check_symmetric_averaged(Eigen::MatrixXd::Identity(6, 6), thetas, "I").passed);
  EXPECT_TRUE(check_symmetric_averaged(Eigen::MatrixXd::Zero(6, 6), thetas, "0").passed);
  EXPECT_TRUE(check_symmetric_averaged(64, 1).passed);
  // W = 0 is not averaged for theta < 1/2: the reflection has norm (1-theta)/theta > 1
  EXPECT_FALSE(check_symmetric_averaged(Eigen::MatrixXd::Zero(6, 6), {0.4}, "0").passed);
}

TEST(SymmetricAveraged, ControlWithNegativeSpectrumFails) {
  const auto c = check_symmetric_averaged(64, 1, -0.5);
  EXPECT_FALSE(c.passed);
  EXPECT_GT(c.defect, 0.5);
}

TEST(RowStochastic, CounterexampleNormAndPair) {
  const auto cert = expansion_certificate(row_stochastic_example());
  EXPECT_NEAR(cert.spectral_norm, std::sqrt((1.5 + std::sqrt(1.25)) / 2), 1e-14);
  EXPECT_NEAR(cert.spectral_norm, 1.14412, 1e-4);
  EXPECT_NEAR(cert.ratio, cert.spectral_norm, 1e-14);
  EXPECT_GT(cert.ratio, 1.0);
  EXPECT_TRUE(check_row_stochastic_expansion(row_stochastic_example(), "W").passed);
}

TEST(RowStochastic, DoublyStochasticControlFindsNoViolation) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const auto cert = expansion_certificate(w);
  EXPECT_NEAR(cert.spectral_norm, 1.0, 1e-14);
  EXPECT_FALSE(check_row_stochastic_expansion(w, "control").passed);
}

TEST(AveragedInequality, EqualityCases) {
  const auto id = check_averaged_inequality(Eigen::MatrixXd::Identity(16, 16), 0.7, 1, 100, "S=I");
  EXPECT_TRUE(id.passed);
  EXPECT_LT(id.defect, 1e-12);
  const auto neg = check_averaged_inequality(-Eigen::MatrixXd::Identity(16, 16), 0.5, 2, 100, "S=-I");
  EXPECT_TRUE(neg.passed);
  EXPECT_LT(neg.defect, 1e-12);
}

TEST(AveragedInequality, RandomContractionsPassExpansionsFail) {
  EXPECT_TRUE(check_averaged_inequality(64, 0.7, 3, 1000).passed);
  EXPECT_FALSE(check_averaged_inequality(64, 0.7, 3, 1000, 1.5).passed);
}

TEST(ClassLConditions, Examples) {
  const Shape s{8, 8};
  EXPECT_TRUE(check_class_l_conditions(KernelFilter::identity(s), 1, "I").passed);
  KernelConfig kc;
  kc.search_radius = 3;
  kc.patch_radius = 1;
  kc.patch_bandwidth = 0.2;
  const KernelFilter constant = build_kernel(Image(s, 0.5), kc);
  EXPECT_TRUE(check_class_l_conditions(constant, 2, "const").passed);
  const auto control = check_class_l_conditions(asymmetric_perturbation(constant, 1e-3), 3, "ctl");
  EXPECT_FALSE(control.passed);
  EXPECT_NEAR(control.defect, 1e-3, 1e-12);
}

TEST(AdmmEquivalence, TrivialProblemHasNoDiscrepancy) {
  const KernelFilter id = KernelFilter::identity(Shape{4, 4});
  const Vector y0 = Vector::LinSpaced(16, -1, 1);
  const auto c = check_admm_equivalence(ZeroFidelity{}, id, 1.0, y0, Vector::Zero(16), 20, "trivial");
  EXPECT_TRUE(c.passed);
  EXPECT_EQ(c.defect, 0.0);
}

TEST(AdmmEquivalence, DespeckleAndSuperresInstances) {
  const Shape s{16, 16};
  const auto sp = make_speckle_instance(s, 5, 1);
  const KernelFilter f = build_kernel(sp.observation.log_obs, despeckle_kernel_config(5));
  EXPECT_TRUE(check_admm_equivalence(sp.fidelity, f, 0.2, sp.observation.log_obs.pixels,
                                     Vector::Zero(256), 20, "sp")
                  .passed);
  const auto sr = make_superres_instance(s, 2, 10.0, 1);
  const KernelFilter g = build_kernel(Image(s, sr.x0), superres_kernel_config());
  EXPECT_TRUE(check_admm_equivalence(sr.fidelity, g, 2.5, sr.x0, Vector::Zero(256), 20, "sr").passed);
  EXPECT_FALSE(check_admm_equivalence(sp.fidelity, f, 0.2, sp.observation.log_obs.pixels,
                                      Vector::Zero(256), 20, "ctl", 2.0)
                   .passed);
}

TEST(FixedPointOptimality, TrivialProblemRecoversData) {
  const Shape s{8, 8};
  const Image y = random_image(s, 4);
  const SuperresFidelity fid(y, BlurOperator::delta(), 1, s);
  const auto out = check_fixed_point_optimality(fid, KernelFilter::identity(s), 1.0,
                                                Vector::Zero(64), "trivial");
  EXPECT_TRUE(out.ista.passed);
  EXPECT_TRUE(out.admm.passed);
  EXPECT_TRUE(out.agreement.passed);
}

TEST(FixedPointOptimality, SmallSuperresInstanceAndControl) {
  const Shape s{16, 16};
  const auto sr = make_superres_instance(s, 2, 10.0, 5);
  const KernelFilter f = build_kernel(Image(s, sr.x0), superres_kernel_config());
  const auto out = check_fixed_point_optimality(sr.fidelity, f, 2.5, sr.x0, "sr16");
  EXPECT_TRUE(out.ista.passed) << out.ista.defect;
  EXPECT_TRUE(out.admm.passed) << out.admm.defect;
  EXPECT_TRUE(out.agreement.passed) << out.agreement.defect;
  const auto ctl = check_fixed_point_optimality(sr.fidelity, f, 2.5, sr.x0, "ctl", 50000, 5.0);
  EXPECT_FALSE(ctl.ista.passed);
}

TEST(FixedPointOptimality, NonUniqueMinimizerIsSkipped) {
  const Shape s{8, 8};
  const SuperresFidelity fid(random_image(Shape{4, 4}, 6), BlurOperator::delta(), 2, s);
  const auto out = check_fixed_point_optimality(fid, KernelFilter::identity(s), 1.0,
                                                Vector::Zero(64), "rank deficient");
  EXPECT_TRUE(out.ista.skipped);
  EXPECT_TRUE(out.admm.skipped);
  EXPECT_TRUE(out.agreement.skipped);
}

TEST(Suite, PassesWithFailingControlsAndIsDeterministic) {
  SuiteOptions opt;
  opt.include_controls = true;
  const auto a = run_suite(opt);
  EXPECT_TRUE(a.ok());
  int controls = 0;
  for (const auto& c : a.checks) {
    if (c.control) {
      ++controls;
      EXPECT_FALSE(c.passed) << c.name;
    } else {
      EXPECT_TRUE(c.passed || c.skipped) << c.name << " " << c.instance;
    }
    EXPECT_FALSE(c.property.empty());
  }
  EXPECT_GE(controls, 6);

  std::ostringstream t1, t2;
  a.write_csv(t1);
  run_suite(opt).write_csv(t2);
  EXPECT_EQ(t1.str(), t2.str());
  EXPECT_EQ(t1.str().substr(0, t1.str().find('\n')), "check,pass,defect,tolerance,instance");
}

TEST(Suite, SeedChangesInstancesNotOutcomes) {
  SuiteOptions a, b;
  a.seed = 11;
  b.seed = 12;
  const auto ra = run_suite(a), rb = run_suite(b);
  ASSERT_EQ(ra.checks.size(), rb.checks.size());
  bool some_instance_differs = false;
  for (std::size_t i = 0; i < ra.checks.size(); ++i) {
    EXPECT_EQ(ra.checks[i].passed, rb.checks[i].passed) << ra.checks[i].name;
    some_instance_differs |= ra.checks[i].instance != rb.checks[i].instance ||
                             ra.checks[i].defect != rb.checks[i].defect;
  }
  EXPECT_TRUE(some_instance_differs);
}
