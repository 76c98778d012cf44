#pragma once

#include <span>
#include <vector>

#include "tvwhittle/rng.hpp"

namespace tvwhittle {

// Stability parameterization of AR(p) models: unrestricted reals theta map
// through partial autocorrelations r in (-1,1)^p to AR coefficients phi in
// the stable region. theta_to_phi is the composite map g().
std::vector<double> theta_to_r(std::span<const double> theta);
std::vector<double> r_to_phi(std::span<const double> r);
std::vector<double> phi_to_r(std::span<const double> phi);
std::vector<double> r_to_theta(std::span<const double> r);
std::vector<double> theta_to_phi(std::span<const double> theta);

// True iff the AR coefficients lie strictly inside the stability region
// (checked through the inverse partial-autocorrelation recursion).
bool is_stable(std::span<const double> phi);

inline constexpr int kMaxArOrder = 8;

// Allocation-free g(theta) for sampler hot loops; order <= kMaxArOrder.
void theta_to_phi_buf(const double* theta, int order, double* phi_out);

// Per-time parameter path of a time-varying AR(p) process with innovation
// variance path sigma2[t] (constant unless a stochastic-volatility path was
// installed). phi[t] = g(theta[t]) at every t.
struct TvarPath {
  int t_len = 0;
  int order = 0;
  std::vector<std::vector<double>> theta;  // t_len x order
  std::vector<std::vector<double>> phi;    // t_len x order
  std::vector<double> sigma2;              // t_len
};

// Simulates x_t = sum_j phi_{jt} x_{t-j} + eps_t, eps_t ~ N(0, sigma2[t]).
// The first values are seeded by running burn_in steps at the t=1 parameters
// from zero initial conditions, which are then discarded.
std::vector<double> simulate_tvar(const TvarPath& path, RngStream& rng, int burn_in = 200);

// Random-walk log-variance path: log sigma2[t] = log sigma2[t-1] + zeta_t,
// zeta_t ~ N(0, zeta_var), started at log_sigma2_init.
std::vector<double> simulate_sv_variance(int t_len, double log_sigma2_init, double zeta_var,
                                         RngStream& rng);

// Data generating processes of the three simulation experiments.
TvarPath dgp_experiment1(int t_len);
TvarPath dgp_experiment2(int t_len);
TvarPath dgp_experiment3(int t_len);  // supported only for t_len = 1500

}  // namespace tvwhittle
