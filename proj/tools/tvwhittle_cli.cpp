#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "tvwhittle/harness.hpp"

namespace {

using tvwhittle::harness::RunConfig;

void add_common(CLI::App* cmd, RunConfig& cfg) {
  cmd->set_config("--config")->configurable(false);
  cmd->allow_config_extras(CLI::config_extras_mode::error);
  cmd->add_option("--seed", cfg.seed, "base RNG seed");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--threads", cfg.threads, "replication worker threads")
      ->check(CLI::PositiveNumber);
}

void add_mcmc(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--n-iter", cfg.n_iter, "Gibbs iterations");
  cmd->add_option("--burn-in", cfg.burn_in, "discarded iterations");
  cmd->add_option("--thin", cfg.thin, "thinning factor");
  cmd->add_option("--particles", cfg.n_particles, "PGAS particle count");
  cmd->add_flag("!--no-scale-q-prior", cfg.scale_q_prior_by_step,
                "do not multiply the block-Whittle Q prior scale by S");
  cmd->add_option("--q-dof", cfg.q_dof, "IW prior degrees of freedom");
  cmd->add_option("--q-scale-factor", cfg.q_scale_factor,
                  "IW prior scale = factor*(dof-p-1)*I");
  cmd->add_option("--sigma2-shape", cfg.sigma2_shape, "IG prior shape for sigma2");
  cmd->add_option("--sigma2-scale", cfg.sigma2_scale, "IG prior scale for sigma2");
  cmd->add_option("--init-cov-scale", cfg.init_cov_scale, "P0 = scale*I");
  cmd->add_option("--zeta-shape", cfg.zeta_shape, "IG prior shape for the SV innovation variance");
  cmd->add_option("--zeta-scale", cfg.zeta_scale, "IG prior scale for the SV innovation variance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-domain likelihood approximations for Bayesian tvAR inference"};
  app.require_subcommand(1);
  RunConfig cfg;

  CLI::App* grid = app.add_subcommand(
      "grid-ar1", "stationary AR(1) grid-posterior study: Whittle vs exact time domain");
  add_common(grid, cfg);
  grid->add_option("--phi", cfg.phi_list, "true AR parameters");
  grid->add_option("--T", cfg.t_list, "sample sizes");
  grid->add_option("--n-rep", cfg.n_rep, "replications per cell");
  grid->add_option("--grid-points", cfg.grid_points, "posterior grid resolution");
  grid->add_option("--n-curves", cfg.n_curves, "datasets whose posterior curves are written");

  CLI::App* exp = app.add_subcommand(
      "experiment", "replicated simulation study with Gibbs/PGAS posterior sampling");
  add_common(exp, cfg);
  exp->add_option("--experiment", cfg.experiment_id, "experiment id (1, 2 or 3)")
      ->check(CLI::Range(1, 3));
  exp->add_option("--T", cfg.t_len, "series length");
  exp->add_option("--n-rep", cfg.n_rep, "number of replications");
  exp->add_option("--methods", cfg.methods,
                  "comma list of methods, e.g. dw:m=15:mod=taper,bw:N=30:S=15:mod=bc "
                  "(empty = paper defaults)");
  exp->add_option("--time-stride", cfg.time_stride, "time decimation of path CSVs");
  add_mcmc(exp, cfg);

  CLI::App* fit = app.add_subcommand("fit", "fit a tvAR model to a CSV series");
  add_common(fit, cfg);
  fit->add_option("--input", cfg.input_csv, "single- or two-column (date,value) CSV")
      ->required();
  fit->add_option("--difference", cfg.difference, "none | first");
  fit->add_flag("--sv", cfg.sv, "stochastic volatility (random-walk log variance)");
  fit->add_option("--family", cfg.family, "dw | bw | time | stationary");
  fit->add_option("--mod", cfg.modification,
                  "none | taper | taper-rescaled | prewhiten | bc | bc-notaper");
  fit->add_option("--N", cfg.seg_len, "block segment length");
  fit->add_option("--S", cfg.step, "block step size");
  fit->add_option("--m", cfg.half_width, "dynamic-Whittle half width");
  fit->add_option("--order", cfg.ar_order, "AR order of the fitted model");
  fit->add_option("--spec-freqs", cfg.spec_freqs, "spectrogram frequency resolution");
  fit->add_option("--time-stride", cfg.time_stride, "spectrogram time decimation");
  add_mcmc(fit, cfg);

  CLI::App* selftest = app.add_subcommand("selftest", "run the fast invariant suite");
  (void)selftest;

  CLI11_PARSE(app, argc, argv);

  try {
    if (grid->parsed()) {
      cfg.command = "grid-ar1";
      tvwhittle::harness::run_grid_ar1(cfg);
      std::printf("grid-ar1 results written to %s\n", cfg.out_dir.c_str());
    } else if (exp->parsed()) {
      cfg.command = "experiment";
      const auto result = tvwhittle::harness::run_experiment(cfg);
      std::printf("experiment %d: common range [%d, %d], %zu methods; results in %s\n",
                  cfg.experiment_id, result.range_lo, result.range_hi, result.methods.size(),
                  cfg.out_dir.c_str());
      for (const auto& m : result.methods)
        std::printf("  %-24s efficiency %.4f  perturbation %.5f\n", m.label.c_str(), m.efficiency,
                    m.perturbation);
    } else if (fit->parsed()) {
      cfg.command = "fit";
      const auto result = tvwhittle::harness::run_fit(cfg);
      std::printf("fit: T=%d (mean %.6g subtracted); results in %s\n", result.t_len,
                  result.subtracted_mean, cfg.out_dir.c_str());
    } else {
      cfg.command = "selftest";
      const auto checks = tvwhittle::harness::run_selftest();
      bool all_pass = true;
      std::printf("%-34s %-6s %s\n", "check", "status", "max deviation");
      for (const auto& c : checks) {
        std::printf("%-34s %-6s %.3g\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.max_dev);
        all_pass = all_pass && c.pass;
      }
      return all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
