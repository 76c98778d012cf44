#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvwhittle/inference.hpp"
#include "tvwhittle/likelihood.hpp"

namespace tvwhittle::harness {

struct RunConfig {
  std::string command = "selftest";
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  int threads = 1;

  // grid-ar1
  std::vector<double> phi_list = {0.2, 0.5, 0.8};
  std::vector<int> t_list = {50, 100, 200};
  int n_rep = 100;
  int grid_points = 1999;
  int n_curves = 4;

  // experiment
  int experiment_id = 1;
  int t_len = 1500;
  std::string methods;  // comma list of method tokens; empty = paper defaults

  // MCMC settings
  int n_iter = 12000;
  int burn_in = 2000;
  int thin = 2;
  int n_particles = 100;
  bool scale_q_prior_by_step = true;

  // priors
  double q_dof = 10.0;
  double q_scale_factor = 0.005;  // q_scale = factor * (q_dof - p - 1) * I_p
  double sigma2_shape = 0.01;
  double sigma2_scale = 0.01;
  double init_cov_scale = 10.0;
  double zeta_shape = 0.01;
  double zeta_scale = 0.01;

  // fit
  std::string input_csv;
  std::string difference = "none";  // none | first
  bool sv = false;
  std::string family = "dw";  // dw | bw | time | stationary
  std::string modification = "none";
  int seg_len = 100;
  int step = 50;
  int half_width = 50;
  int ar_order = 2;
  int spec_freqs = 65;
  int time_stride = 5;
};

// One inference method of an experiment run ("dw:m=15:mod=taper",
// "bw:N=30:S=15:mod=bc", "time").
struct MethodSpec {
  LikelihoodSpec spec;
  std::string label;
};

MethodSpec parse_method(const std::string& token, const RunConfig& cfg);
std::vector<MethodSpec> experiment_methods(const RunConfig& cfg);

Priors build_priors(const RunConfig& cfg, int order, bool sv);

struct GridCell {
  double phi_true = 0.0;
  int t_len = 0;
  double efficiency = 0.0;
  double perturbation = 0.0;
  int n_rep = 0;
};

struct GridStudyResult {
  std::vector<GridCell> cells;

  const GridCell& cell(double phi_true, int t_len) const;
};

GridStudyResult run_grid_ar1(const RunConfig& cfg);

struct MethodResult {
  std::string label;
  double rmse_method = 0.0;
  double rmse_time = 0.0;
  double efficiency = 0.0;
  double perturbation = 0.0;
};

struct ExperimentResult {
  std::vector<MethodResult> methods;  // excludes the time-domain baseline
  double rmse_time = 0.0;
  int range_lo = 0;  // common evaluation range (1-based, inclusive)
  int range_hi = 0;

  const MethodResult& method(const std::string& label) const;
};

ExperimentResult run_experiment(const RunConfig& cfg);

// Resolved configuration, derived geometry, and prior echo written without
// running any MCMC.
void write_experiment_echo(const RunConfig& cfg, const std::string& path);

struct FitResult {
  int t_len = 0;
  double subtracted_mean = 0.0;
};

FitResult run_fit(const RunConfig& cfg);

struct SelfCheck {
  std::string name;
  bool pass = false;
  double max_dev = 0.0;
};

// Fast invariant suite; the fault flag corrupts the taper-identity check's
// normalizer to exercise the failure path.
std::vector<SelfCheck> run_selftest(bool inject_taper_fault = false);

}  // namespace tvwhittle::harness
