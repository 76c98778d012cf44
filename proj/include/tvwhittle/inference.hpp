#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tvwhittle/likelihood.hpp"
#include "tvwhittle/rng.hpp"

namespace tvwhittle {

struct Priors {
  double q_dof = 10.0;
  Eigen::MatrixXd q_scale;  // IW scale, order x order
  double sigma2_shape = 0.01;
  double sigma2_scale = 0.01;
  Eigen::VectorXd init_mean;  // a_0, state_dim
  Eigen::MatrixXd init_cov;   // P_0, state_dim x state_dim
  double zeta_shape = 0.01;   // SV log-variance innovation prior
  double zeta_scale = 0.01;

  // Q ~ IW(10, 0.005 (10-p-1) I_p), sigma2 ~ IG(0.01, 0.01),
  // theta_0 ~ N(0, 10 I); state_dim = order + 1 when sv.
  static Priors defaults(int order, bool sv);
  void validate(int order, bool sv) const;
};

struct GibbsConfig {
  int n_iter = 12000;
  int burn_in = 2000;
  int thin = 2;
  int n_particles = 100;
  std::uint64_t seed = 0;
  bool scale_q_prior_by_step = true;  // block family: multiply prior scales by S

  void validate() const;
  int n_stored() const { return (n_iter - burn_in + thin - 1) / thin; }
};

struct PosteriorDraws {
  int order = 0;
  bool sv = false;
  int n_states = 0;
  std::vector<int> state_times;  // 1-based time attached to each state

  std::vector<Eigen::MatrixXd> theta_path;  // per draw, state_dim x n_states
  std::vector<Eigen::MatrixXd> q_draw;
  std::vector<double> sigma2_draw;          // empty under SV
  std::vector<double> zeta_var_draw;        // empty without SV
  std::vector<Eigen::VectorXd> theta0_draw;

  int size() const { return static_cast<int>(theta_path.size()); }
  // AR coefficients g(theta) per state for one stored draw.
  std::vector<std::vector<double>> phi_path(int draw) const;
};

// Per-step observation log-density of the state-space model; states are the
// unrestricted parameters (plus log-variance as the last component under SV).
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;
  virtual int n_steps() const = 0;
  virtual int state_dim() const = 0;
  virtual double log_density(int step, const double* state) const = 0;
};

// Exponential periodogram model over prepared spectral data.
class SpectralObsModel : public ObservationModel {
 public:
  SpectralObsModel(const PreparedData& data, int order);
  int n_steps() const override;
  int state_dim() const override { return order_ + (data_->sv ? 1 : 0); }
  double log_density(int step, const double* state) const override;
  void set_sigma2(double sigma2) { sigma2_ = sigma2; }

 private:
  const PreparedData* data_;
  int order_;
  double sigma2_ = 1.0;
};

// Conditional Gaussian tvAR observation density (the gold standard).
class TimeDomainObsModel : public ObservationModel {
 public:
  TimeDomainObsModel(const PreparedData& data, int order);
  int n_steps() const override { return static_cast<int>(series_->size()); }
  int state_dim() const override { return order_ + (sv_ ? 1 : 0); }
  double log_density(int step, const double* state) const override;
  void set_sigma2(double sigma2) { sigma2_ = sigma2; }

 private:
  const std::vector<double>* series_;
  int order_;
  bool sv_;
  double sigma2_ = 1.0;
};

std::unique_ptr<ObservationModel> make_observation_model(const PreparedData& data, int order);

// One particle-Gibbs-with-ancestor-sampling sweep: bootstrap proposals from
// the random-walk transition N(0, trans_cov), reference trajectory kept in
// the last particle slot, systematic resampling at every step. Returns the
// sampled trajectory (state_dim x n_steps). Leaves the conditional posterior
// of the state path invariant.
Eigen::MatrixXd pgas_update(const ObservationModel& obs, const Eigen::MatrixXd& reference,
                            const Eigen::VectorXd& initial_state,
                            const Eigen::MatrixXd& trans_cov, int n_particles, RngStream& rng);

// Conjugate updates of Algorithm-style Gibbs sampling.
Eigen::MatrixXd update_q(const Eigen::MatrixXd& theta_path, const Eigen::VectorXd& theta0,
                         const Priors& priors, RngStream& rng);
double update_sigma2(const PreparedData& data, const std::vector<std::vector<double>>& phi,
                     const Priors& priors, RngStream& rng);
Eigen::VectorXd update_initial_state(const Eigen::VectorXd& theta1,
                                     const Eigen::MatrixXd& trans_cov, const Priors& priors,
                                     RngStream& rng);

// Full Gibbs sampler: {PGAS path update; Q; sigma2 (or the SV innovation
// variance); initial state} per iteration.
PosteriorDraws gibbs_run(std::span<const double> x, const LikelihoodSpec& spec, int order,
                         const Priors& priors, const GibbsConfig& config);

// Piecewise-constant interpolation from segment centers to every time point:
// value at t is the value at the nearest center at or before t; the first
// center's value extends back to t = 1.
std::vector<double> interpolate_path(std::span<const double> values, std::span<const int> centers,
                                     int t_len);

// Linear interpolation between order statistics at positions (n-1) p + 1.
std::vector<double> posterior_quantiles(std::span<const double> draws,
                                        std::span<const double> probs);

// Distribution samplers shared by the conjugate updates (exposed for tests).
Eigen::MatrixXd sample_inverse_wishart(double dof, const Eigen::MatrixXd& scale, RngStream& rng);
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& rng);

}  // namespace tvwhittle
