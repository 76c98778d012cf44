#pragma once

#include <span>
#include <string>
#include <vector>

#include "tvwhittle/localper.hpp"
#include "tvwhittle/modify.hpp"
#include "tvwhittle/spectral.hpp"

namespace tvwhittle {

enum class Family { time_domain, whittle_stationary, block_whittle, dynamic_whittle };

std::string family_label(Family family);

struct LikelihoodSpec {
  Family family = Family::time_domain;
  Modification modification;
  int seg_len = 30;     // block_whittle segment length N
  int step = 15;        // block_whittle step size S
  int half_width = 15;  // dynamic_whittle m (window length 2m+1)
  bool sv = false;
};

// Family-specific data computed once, before inference: all periodogram
// ordinates including per-segment modification filters are frozen here and
// never touched inside the likelihood evaluation loop.
struct PreparedData {
  Family family = Family::time_domain;
  bool sv = false;
  std::vector<double> series;  // time_domain

  Periodogram stationary;  // whittle_stationary

  SegmentGeometry geometry;  // block_whittle
  FourierGrid seg_grid;
  std::vector<std::vector<double>> block_ordinates;  // M x K

  MovingPeriodogram moving;  // dynamic_whittle

  // Number of exponential-model observations (ordinates).
  int n_entries() const;
  // Length of the latent state chain driving the parameter evolution.
  int n_states() const;
  // 1-based time index attached to each state.
  std::vector<int> state_times() const;
};

PreparedData prepare(std::span<const double> x, const LikelihoodSpec& spec);

// Injects externally supplied block ordinates (simulation and testing).
PreparedData make_block_prepared(const SegmentGeometry& geometry,
                                 std::vector<std::vector<double>> ordinates);

// Log-density of one exponential-model observation set: ordinates I_k at
// frequencies omega_k with AR(phi, sigma2) spectral means,
// sum_k -[log f(omega_k) + I_k / f(omega_k)].
double exp_model_logdens(std::span<const double> ordinates, std::span<const double> frequencies,
                         std::span<const double> phi, double sigma2);

// Block Whittle log-likelihood: per-segment parameters (phi[j], sigma2[j]),
// j = 1..M, summed over the segment-length Fourier grid.
double block_whittle_loglik(const PreparedData& data, const std::vector<std::vector<double>>& phi,
                            std::span<const double> sigma2);

// Dynamic Whittle log-likelihood: per-time parameters for t = m+1..T-m, one
// single-frequency exponential observation each.
double dynamic_whittle_loglik(const PreparedData& data,
                              const std::vector<std::vector<double>>& phi,
                              std::span<const double> sigma2);

// Conditional Gaussian tvAR log-likelihood given the first p observations.
double time_domain_tvar_loglik(std::span<const double> x,
                               const std::vector<std::vector<double>>& phi,
                               std::span<const double> sigma2, int order);

}  // namespace tvwhittle
