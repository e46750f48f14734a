#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "pnpw/app.hpp"

namespace {

template <class T>
void optional_option(CLI::App& app, const std::string& name, std::optional<T>& target,
                     const std::string& help) {
  app.add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  using pnpw::app::Command;
  using pnpw::app::DenoiserKind;

  pnpw::app::RunConfig cfg;
  CLI::App app{"Plug-and-play ISTA/ADMM restoration with kernel denoisers"};
  app.set_config("--config", "", "key = value file with the same keys as the flags");

  const std::map<std::string, Command> commands{{"superres", Command::superres},
                                                {"despeckle", Command::despeckle},
                                                {"denoise", Command::denoise},
                                                {"verify", Command::verify},
                                                {"metrics", Command::metrics}};
  app.add_option("command", cfg.command, "superres | despeckle | denoise | verify | metrics")
      ->required()
      ->transform(CLI::CheckedTransformer(commands, CLI::ignore_case));

  app.add_option("--input", cfg.input, "ground-truth image (PGM/PNG); bundled scene if omitted");
  app.add_option("--reference", cfg.reference, "reference image for the metrics command");
  app.add_option("--output", cfg.output, "reconstruction image (.pgm or .png)");
  app.add_option("--trace", cfg.trace, "CSV trace (solvers) or report (verify, metrics)");
  app.add_option("--summary", cfg.summary, "also write the summary to this file");

  app.add_option("--factor", cfg.factor, "superresolution decimation factor")
      ->check(CLI::PositiveNumber);
  optional_option(app, "--sigma", cfg.sigma, "Gaussian noise std on the 0..255 scale");
  app.add_option("--looks", cfg.looks, "number of speckle looks M")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "noise and instance seed");
  app.add_option("--blur-size", cfg.blur_size, "Gaussian blur size; 1 means no blur");
  app.add_option("--blur-sigma", cfg.blur_sigma, "Gaussian blur std in pixels");

  optional_option(app, "--search-radius", cfg.search_radius, "NLM search radius N_s");
  optional_option(app, "--patch-radius", cfg.patch_radius, "NLM patch radius");
  optional_option(app, "--bandwidth", cfg.bandwidth, "NLM patch bandwidth h");
  const std::map<std::string, DenoiserKind> denoisers{{"nlm", DenoiserKind::nlm},
                                                      {"identity", DenoiserKind::identity}};
  app.add_option("--denoiser", cfg.denoiser, "nlm | identity")
      ->transform(CLI::CheckedTransformer(denoisers, CLI::ignore_case));

  optional_option(app, "--rho", cfg.rho, "penalty parameter rho");
  optional_option(app, "--iters", cfg.iters, "maximum iterations");
  optional_option(app, "--adapt-iters", cfg.adapt_iters, "iterations before the kernel is frozen");
  optional_option(app, "--tol", cfg.tol, "residual tolerance after the freeze");

  app.add_flag("--objective", cfg.objective, "record f + rho g after the freeze");
  app.add_flag("--oracle-check", cfg.oracle_check, "compare with the dense minimizer (superres)");
  app.add_flag("--timing", cfg.timing, "write wall time into the trace");
  app.add_flag("--include-controls", cfg.include_controls, "verify: also run failing controls");

  CLI11_PARSE(app, argc, argv);
  return pnpw::app::run(cfg, std::cout, std::cerr);
}
