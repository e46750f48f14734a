#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pnpw/fidelity.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/scenes.hpp"

using namespace pnpw;

namespace {

struct SrSetup {
  Shape shape{16, 16};
  BlurOperator op = BlurOperator::gaussian(9, 1.0);
  Eigen::MatrixXd a;  // dense S B
  Image y;
  SrSetup() {
    a = oracle::decimation(16, 16, 2) * oracle::circulant(oracle::gaussian_taps(9, 1.0), 16, 16);
    y = random_image(Shape{8, 8}, 77);
  }
  SuperresFidelity fid(double scale = 1.0) const { return SuperresFidelity(y, op, 2, shape, scale); }
};

WeightedSpace nlm_weights(Shape s, std::uint64_t seed) {
  KernelConfig c;
  c.search_radius = 3;
  c.patch_radius = 1;
  c.patch_bandwidth = 0.2;
  return build_kernel(random_image(s, seed), c).induced_space();
}

}  // namespace

TEST(SuperresFidelity, ConstructionChecks) {
  const Image y(Shape{8, 8});
  const BlurOperator op = BlurOperator::delta();
  EXPECT_THROW(SuperresFidelity(y, op, 2, Shape{16, 18}), ConstructionError);
  EXPECT_THROW(SuperresFidelity(y, op, 0, Shape{16, 16}), ConstructionError);
  EXPECT_THROW(SuperresFidelity(y, op, 2, Shape{16, 16}, 0.0), ConstructionError);
  EXPECT_NO_THROW(SuperresFidelity(y, op, 2, Shape{16, 16}));
}

TEST(SuperresFidelity, ValueExamples) {
  const SrSetup s;
  const auto fid = s.fid();
  std::mt19937_64 rng(1);
  const Vector x = oracle::random_vector(256, rng, 0, 1);
  EXPECT_NEAR(fid.value(x), 0.5 * (s.y.pixels - s.a * x).squaredNorm(), 1e-12);
  EXPECT_NEAR(fid.value(Vector::Zero(256)), 0.5 * s.y.pixels.squaredNorm(), 1e-12);
  const SuperresFidelity exact(Image(Shape{8, 8}, s.a * x), s.op, 2, s.shape);
  EXPECT_LT(exact.value(x), 1e-25);
  EXPECT_LT(exact.weighted_gradient(x, nlm_weights(s.shape, 2)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(fid.value(Vector::Zero(100)), DimensionError);
}

TEST(SuperresFidelity, GradientMatchesFiniteDifferences) {
  const SrSetup s;
  const auto fid = s.fid(1.7);
  std::mt19937_64 rng(2);
  const WeightedSpace unit = WeightedSpace::standard(256);
  const WeightedSpace w = nlm_weights(s.shape, 3);
  auto f = [&](const Vector& v) { return fid.value(v); };
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::random_vector(256, rng, 0, 1), h = oracle::random_vector(256, rng);
    const double fd = oracle::directional(f, x, h);
    EXPECT_LT(std::abs(fid.weighted_gradient(x, unit).dot(h) - fd), 1e-5 * std::abs(fd));
    EXPECT_LT(std::abs(inner(fid.weighted_gradient(x, w), h, w) - fd), 1e-5 * std::abs(fd));
    const Vector dense = 1.7 * s.a.transpose() * (s.a * x - s.y.pixels);
    EXPECT_LT((fid.euclidean_gradient(x) - dense).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SuperresFidelity, SmoothnessBoundTrivialCases) {
  const Image y(Shape{8, 8});
  const SuperresFidelity k1(y, BlurOperator::delta(), 1, Shape{8, 8});
  const double b1 = k1.smoothness_bound(WeightedSpace::standard(64));
  EXPECT_NEAR(b1, 1.01, 1e-8);
  const SuperresFidelity k2(Image(Shape{4, 4}), BlurOperator::delta(), 2, Shape{8, 8});
  EXPECT_NEAR(k2.smoothness_bound(WeightedSpace::standard(64)), 1.01, 1e-8);
}

TEST(SuperresFidelity, SmoothnessBoundMatchesDenseEigenvalue) {
  const SrSetup s;
  const auto fid = s.fid();
  const WeightedSpace w = nlm_weights(s.shape, 4);
  const Vector isq = w.weights().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd m = isq.asDiagonal() * (s.a.transpose() * s.a) * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  const double beta = fid.smoothness_bound(w);
  EXPECT_GE(beta, top * (1 - 1e-6));
  EXPECT_LT(std::abs(beta / top - 1.0), 0.01 + 1e-6);
}

TEST(SuperresFidelity, CocoercivityInWeightedSpace) {
  const SrSetup s;
  const auto fid = s.fid();
  const WeightedSpace w = nlm_weights(s.shape, 5);
  const double beta = fid.smoothness_bound(w);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 500; ++t) {
    const Vector x = oracle::random_vector(256, rng), z = oracle::random_vector(256, rng);
    const Vector dg = fid.weighted_gradient(x, w) - fid.weighted_gradient(z, w);
    EXPECT_GE(inner(dg, x - z, w), norm(dg, w) * norm(dg, w) / beta - 1e-10);
  }
}

TEST(SuperresFidelity, ProxMatchesDenseSolve) {
  const SrSetup s;
  const auto fid = s.fid();
  const WeightedSpace w = nlm_weights(s.shape, 7);
  std::mt19937_64 rng(8);
  const Vector u = oracle::random_vector(256, rng, 0, 1);
  const double rho = 0.3;
  const Eigen::MatrixXd h = s.a.transpose() * s.a + rho * Eigen::MatrixXd(w.weights().asDiagonal());
  const Vector ref = h.llt().solve(s.a.transpose() * s.y.pixels + rho * w.weights().cwiseProduct(u));
  const Vector x = fid.weighted_prox(u, rho, w);
  EXPECT_LT((x - ref).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(fid.prox_stationarity(x, u, rho, w), 1e-9);
}

TEST(SuperresFidelity, ProxTrivialCases) {
  const SrSetup s;
  std::mt19937_64 rng(9);
  const Vector u = oracle::random_vector(256, rng, 0, 1);
  const WeightedSpace w = nlm_weights(s.shape, 10);
  const SuperresFidelity consistent(Image(Shape{8, 8}, s.a * u), s.op, 2, s.shape);
  EXPECT_LT((consistent.weighted_prox(u, 0.5, w) - u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.fid().weighted_prox(u, 1e12, w) - u).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(s.fid().weighted_prox(u, 0.0, w), ConstructionError);
}

TEST(SuperresFidelity, ProxFirmlyNonexpansive) {
  const SrSetup s;
  const auto fid = s.fid();
  const WeightedSpace w = nlm_weights(s.shape, 11);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const Vector u = oracle::random_vector(256, rng), v = oracle::random_vector(256, rng);
    const Vector pu = fid.weighted_prox(u, 0.4, w), pv = fid.weighted_prox(v, 0.4, w);
    EXPECT_LE(norm(pu - pv, w), norm(u - v, w) + 1e-10);
    EXPECT_LE(norm(pu - pv, w) * norm(pu - pv, w), inner(pu - pv, u - v, w) + 1e-10);
  }
}

TEST(SpeckleFidelity, ValueExamples) {
  std::mt19937_64 rng(13);
  const Vector y = oracle::random_vector(64, rng, -2, 0);
  const SpeckleFidelity fid(y, 5);
  EXPECT_NEAR(fid.value(y), 5.0 * (y.array() + 1.0).sum(), 1e-12);
  EXPECT_DOUBLE_EQ(SpeckleFidelity(Vector::Zero(1), 1).value(Vector::Zero(1)), 1.0);
  const Vector x = oracle::random_vector(64, rng, -2, 0);
  double ref = 0.0;
  for (int i = 0; i < 64; ++i) ref += x[i] + std::exp(y[i] - x[i]);
  EXPECT_NEAR(fid.value(x), 5.0 * ref, 1e-12);
  Vector far = y;
  far[3] = y[3] - 701.0;
  EXPECT_TRUE(std::isinf(fid.value(far)));
}

TEST(SpeckleFidelity, ConstructionChecks) {
  EXPECT_THROW(SpeckleFidelity(Vector::Zero(3), 0), ConstructionError);
  Vector y = Vector::Zero(3);
  y[1] = -INFINITY;
  EXPECT_THROW(SpeckleFidelity(y, 3), ConstructionError);
}

TEST(SpeckleFidelity, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  const SpeckleFidelity fid(oracle::random_vector(64, rng, -3, 0), 4);
  const WeightedSpace w(oracle::random_vector(64, rng, 1, 30));
  auto f = [&](const Vector& v) { return fid.value(v); };
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::random_vector(64, rng, -3, 0), h = oracle::random_vector(64, rng);
    const double fd = oracle::directional(f, x, h);
    EXPECT_LT(std::abs(inner(fid.weighted_gradient(x, w), h, w) - fd), 1e-5 * std::abs(fd));
  }
}

TEST(SpeckleFidelity, ProxExamples) {
  std::mt19937_64 rng(15);
  const Vector y = oracle::random_vector(16, rng, -3, 0);
  const SpeckleFidelity fid(y, 5);
  const WeightedSpace unit = WeightedSpace::standard(16);
  EXPECT_LT((fid.weighted_prox(y, 0.2, unit) - y).cwiseAbs().maxCoeff(), 1e-15);
  const Vector u = oracle::random_vector(16, rng, -3, 0);
  EXPECT_LT((fid.weighted_prox(u, 1e12, unit) - u).cwiseAbs().maxCoeff(), 1e-6);

  const SpeckleFidelity one(Vector::Zero(1), 5);
  const double root = oracle::bisect(
      [](double x) { return 5 * (1 - std::exp(-x)) + 0.2 * (x - 1); }, -10, 10);
  const double x = one.weighted_prox(Vector::Ones(1), 0.2, WeightedSpace::standard(1))[0];
  EXPECT_NEAR(x, root, 1e-9);
  EXPECT_NEAR(5 * (1 - std::exp(-root)) + 0.2 * (root - 1), 0.0, 1e-10);
}

TEST(SpeckleFidelity, ProxAgainstBisectionOnExtremeInputs) {
  std::mt19937_64 rng(16);
  const int n = 200;
  const Vector y = oracle::random_vector(n, rng, -6, 0);
  const Vector u = oracle::random_vector(n, rng, -40, 40);
  const WeightedSpace w(oracle::random_vector(n, rng, 0.5, 60));
  for (int looks : {1, 5, 1000000}) {
    for (double rho : {1e-3, 0.2, 50.0}) {
      const SpeckleFidelity fid(y, looks);
      const Vector x = fid.weighted_prox(u, rho, w);
      for (int i = 0; i < n; ++i) {
        const double c = rho * w.weights()[i];
        auto phi = [&](double v) { return looks * (1 - std::exp(y[i] - v)) + c * (v - u[i]); };
        const double ref = oracle::bisect(phi, std::min(u[i], y[i]), std::max(u[i], y[i]));
        EXPECT_NEAR(x[i], ref, 1e-9 * (1 + std::abs(ref))) << "M=" << looks << " rho=" << rho;
      }
      EXPECT_LT(fid.prox_stationarity(x, u, rho, w), 1e-9 * looks);
    }
  }
}

TEST(SpeckleFidelity, ProxStationarityResidual) {
  std::mt19937_64 rng(17);
  const SpeckleFidelity fid(oracle::random_vector(64, rng, -4, 0), 5);
  const WeightedSpace w(oracle::random_vector(64, rng, 5, 40));
  const Vector u = oracle::random_vector(64, rng, -4, 0);
  EXPECT_LT(fid.prox_stationarity(fid.weighted_prox(u, 0.2, w), u, 0.2, w), 1e-9);
}

TEST(SpeckleFidelity, ProxFirmlyNonexpansive) {
  std::mt19937_64 rng(18);
  const SpeckleFidelity fid(oracle::random_vector(64, rng, -4, 0), 5);
  const WeightedSpace w(oracle::random_vector(64, rng, 5, 40));
  for (int t = 0; t < 100; ++t) {
    const Vector u = oracle::random_vector(64, rng, -5, 1), v = oracle::random_vector(64, rng, -5, 1);
    const Vector pu = fid.weighted_prox(u, 0.2, w), pv = fid.weighted_prox(v, 0.2, w);
    EXPECT_LE(norm(pu - pv, w), norm(u - v, w) + 1e-10);
  }
}

TEST(Fidelity, Convexity) {
  const SrSetup s;
  const auto sr = s.fid();
  std::mt19937_64 rng(19);
  const SpeckleFidelity sp(oracle::random_vector(256, rng, -3, 0), 5);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Vector x = oracle::random_vector(256, rng, -3, 1), z = oracle::random_vector(256, rng, -3, 1);
    const double l = lam(rng);
    const Vector m = l * x + (1 - l) * z;
    EXPECT_LE(sr.value(m), l * sr.value(x) + (1 - l) * sr.value(z) + 1e-10);
    EXPECT_LE(sp.value(m), l * sp.value(x) + (1 - l) * sp.value(z) + 1e-10 * sp.value(m));
  }
}
