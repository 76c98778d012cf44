#pragma once

#include <span>
#include <vector>

namespace tvwhittle {

// Point-estimate matrix for one replication: n_params x n_times values
// (n_times = 1 for static parameters). All replications must share the truth.
struct EstimatePath {
  int n_params = 0;
  int n_times = 0;
  std::vector<double> values;  // row-major, param-major

  double& at(int param, int t) { return values[static_cast<std::size_t>(param) * n_times + t]; }
  double at(int param, int t) const {
    return values[static_cast<std::size_t>(param) * n_times + t];
  }
};

EstimatePath make_estimate_path(int n_params, int n_times);

// sqrt( sum_i ||est_i - truth||^2 / (N_rep * p * n_times) ).
double rmse(const std::vector<EstimatePath>& estimates, const EstimatePath& truth);

// RMSE_time / RMSE_approx.
double efficiency(double rmse_time, double rmse_approx);

// Per-replication quantile tables: n_params x n_times x n_probs.
struct QuantilePath {
  int n_params = 0;
  int n_times = 0;
  int n_probs = 0;
  std::vector<double> values;

  double& at(int param, int t, int prob) {
    return values[(static_cast<std::size_t>(param) * n_times + t) * n_probs + prob];
  }
  double at(int param, int t, int prob) const {
    return values[(static_cast<std::size_t>(param) * n_times + t) * n_probs + prob];
  }
};

QuantilePath make_quantile_path(int n_params, int n_times, int n_probs);

// Root-mean-square gap between corresponding quantiles of the approximate
// and reference posteriors, averaged over replications, parameters, quantiles
// (and time points, when present).
double perturbation(const std::vector<QuantilePath>& approx,
                    const std::vector<QuantilePath>& reference);

}  // namespace tvwhittle
