#pragma once

#include <cstdint>

#include "pnpw/fidelity.hpp"
#include "pnpw/forward_model.hpp"
#include "pnpw/kernel_filter.hpp"
#include "pnpw/scenes.hpp"

// Desk-scale problem instances and kernel presets shared by the CLI, the
// verification suite and the tests.

namespace pnpw {

struct SuperresInstance {
  Image ground_truth;
  SuperresFidelity fidelity;
  Vector x0;  // zero-order-hold upsampling of y
};

inline SuperresInstance make_superres_instance(Shape shape, int factor, double sigma255,
                                               std::uint64_t seed) {
  Image gt = synthetic_scene(shape);
  const BlurOperator op = BlurOperator::gaussian(9, 1.0);
  auto obs = simulate_superres(gt, op, factor, NoiseSpec{GaussianNoise{sigma255}, seed});
  Vector x0 = upsample_zero_order_hold(obs.observation, factor).pixels;
  return {std::move(gt), SuperresFidelity(obs.observation, op, factor, shape), std::move(x0)};
}

struct SpeckleInstance {
  Image reflectance;
  SpeckleObservation observation;
  SpeckleFidelity fidelity;
};

inline SpeckleInstance make_speckle_instance(Shape shape, int looks, std::uint64_t seed) {
  Image r0 = to_reflectance(synthetic_scene(shape));
  auto obs = simulate_speckle(r0, looks, seed);
  SpeckleFidelity fid(obs.log_obs.pixels, looks);
  return {std::move(r0), std::move(obs), std::move(fid)};
}

// NLM filter on a noisy version of the synthetic scene.
inline KernelFilter make_nlm_filter(Shape shape, std::uint64_t seed, const KernelConfig& cfg) {
  Image guide = add_gaussian_noise(synthetic_scene(shape), 20.0, seed);
  return build_kernel(guide, cfg);
}

// Kernel settings used by the desk-scale superresolution instances.
inline KernelConfig superres_kernel_config() {
  KernelConfig cfg;
  cfg.search_radius = 3;
  cfg.patch_radius = 2;
  cfg.patch_bandwidth = 0.15;
  return cfg;
}

// Kernel settings for log-domain despeckling. The bandwidth follows the
// standard deviation of log-Gamma speckle, sqrt(trigamma(M)), which is
// about 0.47 at M = 5. A wide bandwidth keeps the row sums of K large, which
// PnP-ADMM at rho = 0.2 needs to contract quickly.
inline KernelConfig despeckle_kernel_config(int looks) {
  KernelConfig cfg;
  cfg.search_radius = 10;
  cfg.patch_radius = 2;
  cfg.patch_bandwidth = 5.0 * log_speckle_std(looks);
  return cfg;
}

}  // namespace pnpw
