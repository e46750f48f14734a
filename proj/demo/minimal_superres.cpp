// Superresolution of a small synthetic scene with PnP-ISTA, printing the
// PSNR of the zero-order-hold start and of the reconstruction.
#include <iostream>

#include "pnpw/forward_model.hpp"
#include "pnpw/metrics.hpp"
#include "pnpw/scenes.hpp"
#include "pnpw/solvers.hpp"

int main() {
  using namespace pnpw;
  const Shape shape{32, 32};
  const Image truth = synthetic_scene(shape);

  const BlurOperator blur_op = BlurOperator::gaussian(9, 1.0);
  const auto obs = simulate_superres(truth, blur_op, 2, NoiseSpec{GaussianNoise{10.0}, 7});
  const SuperresFidelity fid(obs.observation, blur_op, 2, shape);
  const Image start = upsample_zero_order_hold(obs.observation, 2);

  KernelConfig kernel;
  kernel.search_radius = 3;
  SolverConfig cfg;
  cfg.rho = 2.5;
  cfg.max_iters = 500;

  const auto res = pnp_ista(fid, nlm_builder(shape, kernel), start.pixels, cfg);
  std::cout << "iterations " << res.iterations << ", beta " << res.beta << '\n'
            << "zero-order hold PSNR " << psnr(start, truth) << " dB\n"
            << "PnP-ISTA PSNR        " << psnr(Image(shape, res.solution), truth) << " dB\n";
}
