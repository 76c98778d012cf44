#include "tvwhittle/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvwhittle/tvar.hpp"

namespace tvwhittle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, double b) {
  const int p = static_cast<int>(a.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p + 1, p + 1);
  out.topLeftCorner(p, p) = a;
  out(p, p) = b;
  return out;
}

}  // namespace

Priors Priors::defaults(int order, bool sv) {
  Priors priors;
  const int d = order + (sv ? 1 : 0);
  priors.q_dof = 10.0;
  priors.q_scale = 0.005 * (10.0 - order - 1.0) * Eigen::MatrixXd::Identity(order, order);
  priors.sigma2_shape = 0.01;
  priors.sigma2_scale = 0.01;
  priors.init_mean = Eigen::VectorXd::Zero(d);
  priors.init_cov = 10.0 * Eigen::MatrixXd::Identity(d, d);
  priors.zeta_shape = 0.01;
  priors.zeta_scale = 0.01;
  return priors;
}

void Priors::validate(int order, bool sv) const {
  const int d = order + (sv ? 1 : 0);
  if (q_scale.rows() != order || q_scale.cols() != order)
    throw std::invalid_argument("Priors: q_scale must be order x order");
  if (!(q_dof > order - 1)) throw std::invalid_argument("Priors: q_dof must exceed order-1");
  if (Eigen::LLT<Eigen::MatrixXd>(q_scale).info() != Eigen::Success)
    throw std::invalid_argument("Priors: q_scale must be positive-definite");
  if (!(sigma2_shape > 0.0) || !(sigma2_scale > 0.0))
    throw std::invalid_argument("Priors: sigma2 prior parameters must be positive");
  if (init_mean.size() != d || init_cov.rows() != d || init_cov.cols() != d)
    throw std::invalid_argument("Priors: initial-state prior dimension mismatch");
  if (Eigen::LLT<Eigen::MatrixXd>(init_cov).info() != Eigen::Success)
    throw std::invalid_argument("Priors: init_cov must be positive-definite");
  if (sv && (!(zeta_shape > 0.0) || !(zeta_scale > 0.0)))
    throw std::invalid_argument("Priors: zeta prior parameters must be positive");
}

void GibbsConfig::validate() const {
  if (!(n_iter > burn_in) || burn_in < 0) throw std::invalid_argument("GibbsConfig: need n_iter > burn_in >= 0");
  if (thin < 1) throw std::invalid_argument("GibbsConfig: thin must be >= 1");
  if (n_particles < 2) throw std::invalid_argument("GibbsConfig: n_particles must be >= 2");
}

std::vector<std::vector<double>> PosteriorDraws::phi_path(int draw) const {
  const Eigen::MatrixXd& path = theta_path.at(draw);
  std::vector<std::vector<double>> phi(n_states, std::vector<double>(order));
  for (int j = 0; j < n_states; ++j)
    theta_to_phi_buf(path.col(j).data(), order, phi[j].data());
  return phi;
}

// ---------------------------------------------------------------------------
// Observation models

SpectralObsModel::SpectralObsModel(const PreparedData& data, int order)
    : data_(&data), order_(order) {
  if (order < 1 || order > kMaxArOrder)
    throw std::invalid_argument("SpectralObsModel: order out of range");
  if (data.family == Family::time_domain)
    throw std::invalid_argument("SpectralObsModel: prepared data is time-domain");
}

int SpectralObsModel::n_steps() const { return data_->n_states(); }

double SpectralObsModel::log_density(int step, const double* state) const {
  double phi[kMaxArOrder];
  theta_to_phi_buf(state, order_, phi);
  const double sigma2 = data_->sv ? std::exp(state[order_]) : sigma2_;
  const double log_scale = std::log(sigma2 / (2.0 * M_PI));
  const double inv_scale = 2.0 * M_PI / sigma2;

  const std::vector<double>* ordinates = nullptr;
  const std::vector<double>* freqs = nullptr;
  double single_ord = 0.0, single_freq = 0.0;
  switch (data_->family) {
    case Family::whittle_stationary:
      ordinates = &data_->stationary.ordinates;
      freqs = &data_->stationary.grid.frequencies;
      break;
    case Family::block_whittle:
      ordinates = &data_->block_ordinates[step];
      freqs = &data_->seg_grid.frequencies;
      break;
    case Family::dynamic_whittle:
      single_ord = data_->moving.ordinates[step];
      single_freq = data_->moving.frequencies[step];
      break;
    default:
      return kNegInf;
  }

  auto term = [&](double ordinate, double omega) {
    double re = 1.0, im = 0.0;
    for (int j = 0; j < order_; ++j) {
      re -= phi[j] * std::cos(omega * (j + 1));
      im += phi[j] * std::sin(omega * (j + 1));
    }
    const double tau = re * re + im * im;
    return -(log_scale - std::log(tau) + ordinate * tau * inv_scale);
  };

  if (ordinates == nullptr) return term(single_ord, single_freq);
  double sum = 0.0;
  for (std::size_t k = 0; k < ordinates->size(); ++k) sum += term((*ordinates)[k], (*freqs)[k]);
  return sum;
}

TimeDomainObsModel::TimeDomainObsModel(const PreparedData& data, int order)
    : series_(&data.series), order_(order), sv_(data.sv) {
  if (order < 1 || order > kMaxArOrder)
    throw std::invalid_argument("TimeDomainObsModel: order out of range");
  if (data.family != Family::time_domain)
    throw std::invalid_argument("TimeDomainObsModel: prepared data is not time-domain");
}

double TimeDomainObsModel::log_density(int step, const double* state) const {
  if (step < order_) return 0.0;  // conditioned on the first p observations
  double phi[kMaxArOrder];
  theta_to_phi_buf(state, order_, phi);
  const double sigma2 = sv_ ? std::exp(state[order_]) : sigma2_;
  double mean = 0.0;
  for (int j = 0; j < order_; ++j) mean += phi[j] * (*series_)[step - 1 - j];
  const double resid = (*series_)[step] - mean;
  return -0.5 * std::log(2.0 * M_PI * sigma2) - 0.5 * resid * resid / sigma2;
}

std::unique_ptr<ObservationModel> make_observation_model(const PreparedData& data, int order) {
  if (data.family == Family::time_domain)
    return std::make_unique<TimeDomainObsModel>(data, order);
  return std::make_unique<SpectralObsModel>(data, order);
}

// ---------------------------------------------------------------------------
// PGAS

Eigen::MatrixXd pgas_update(const ObservationModel& obs, const Eigen::MatrixXd& reference,
                            const Eigen::VectorXd& initial_state,
                            const Eigen::MatrixXd& trans_cov, int n_particles, RngStream& rng) {
  const int n = obs.n_steps();
  const int d = obs.state_dim();
  const int N = n_particles;
  if (n < 1) throw std::invalid_argument("pgas_update: empty state chain");
  if (N < 2) throw std::invalid_argument("pgas_update: need at least 2 particles");
  if (reference.rows() != d || reference.cols() != n)
    throw std::invalid_argument("pgas_update: reference dimension mismatch");
  if (initial_state.size() != d || trans_cov.rows() != d || trans_cov.cols() != d)
    throw std::invalid_argument("pgas_update: initial state / covariance dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt(trans_cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("pgas_update: transition covariance not positive-definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Linv =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));

  std::vector<double> parts(static_cast<std::size_t>(n) * N * d);
  std::vector<int> anc(static_cast<std::size_t>(n) * N, 0);
  std::vector<double> logw(N), w(N), law(N);
  double z[kMaxArOrder + 1];
  auto part = [&](int j, int i) { return &parts[(static_cast<std::size_t>(j) * N + i) * d]; };

  auto propagate = [&](const double* from, double* to) {
    for (int c = 0; c < d; ++c) z[c] = rng.normal();
    for (int r = 0; r < d; ++r) {
      double v = from[r];
      for (int c = 0; c <= r; ++c) v += L(r, c) * z[c];
      to[r] = v;
    }
  };
  auto quad_form = [&](const double* a, const double* b) {
    // || Linv (a - b) ||^2
    double q = 0.0;
    for (int r = 0; r < d; ++r) {
      double y = 0.0;
      for (int c = 0; c <= r; ++c) y += Linv(r, c) * (a[c] - b[c]);
      q += y * y;
    }
    return q;
  };
  auto collapse = [](double v) {
    if (!std::isfinite(v))
      throw std::runtime_error(
          "pgas_update: particle weights collapsed to zero; increase n_particles or check the "
          "observation model");
  };

  for (int i = 0; i < N - 1; ++i) propagate(initial_state.data(), part(0, i));
  for (int r = 0; r < d; ++r) part(0, N - 1)[r] = reference(r, 0);
  for (int i = 0; i < N; ++i) logw[i] = obs.log_density(0, part(0, i));

  for (int j = 1; j < n; ++j) {
    const double max_lw = *std::max_element(logw.begin(), logw.end());
    collapse(max_lw);
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
      w[i] = std::exp(logw[i] - max_lw);
      total += w[i];
    }

    // systematic resampling of the N-1 free ancestors
    {
      const double u = rng.uniform();
      int idx = 0;
      double cum = w[0];
      for (int k = 0; k < N - 1; ++k) {
        const double target = (k + u) / (N - 1) * total;
        while (cum < target && idx < N - 1) cum += w[++idx];
        anc[static_cast<std::size_t>(j) * N + k] = idx;
      }
    }

    // ancestor sampling for the retained reference state
    {
      double max_law = kNegInf;
      for (int i = 0; i < N; ++i) {
        law[i] = logw[i] - 0.5 * quad_form(&reference(0, j), part(j - 1, i));
        max_law = std::max(max_law, law[i]);
      }
      collapse(max_law);
      double atot = 0.0;
      for (int i = 0; i < N; ++i) {
        law[i] = std::exp(law[i] - max_law);
        atot += law[i];
      }
      const double ua = rng.uniform() * atot;
      double cum = 0.0;
      int pick = N - 1;
      for (int i = 0; i < N; ++i) {
        cum += law[i];
        if (cum >= ua) {
          pick = i;
          break;
        }
      }
      anc[static_cast<std::size_t>(j) * N + N - 1] = pick;
    }

    for (int i = 0; i < N - 1; ++i)
      propagate(part(j - 1, anc[static_cast<std::size_t>(j) * N + i]), part(j, i));
    for (int r = 0; r < d; ++r) part(j, N - 1)[r] = reference(r, j);
    for (int i = 0; i < N; ++i) logw[i] = obs.log_density(j, part(j, i));
  }

  const double max_lw = *std::max_element(logw.begin(), logw.end());
  collapse(max_lw);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    w[i] = std::exp(logw[i] - max_lw);
    total += w[i];
  }
  const double u = rng.uniform() * total;
  double cum = 0.0;
  int pick = N - 1;
  for (int i = 0; i < N; ++i) {
    cum += w[i];
    if (cum >= u) {
      pick = i;
      break;
    }
  }

  Eigen::MatrixXd out(d, n);
  int k = pick;
  for (int j = n - 1; j >= 1; --j) {
    for (int r = 0; r < d; ++r) out(r, j) = part(j, k)[r];
    k = anc[static_cast<std::size_t>(j) * N + k];
  }
  for (int r = 0; r < d; ++r) out(r, 0) = part(0, k)[r];
  return out;
}

// ---------------------------------------------------------------------------
// Conjugate updates

Eigen::MatrixXd sample_inverse_wishart(double dof, const Eigen::MatrixXd& scale, RngStream& rng) {
  const int p = static_cast<int>(scale.rows());
  if (!(dof > p - 1)) throw std::invalid_argument("sample_inverse_wishart: dof must exceed p-1");
  Eigen::LLT<Eigen::MatrixXd> llt_scale(scale);
  if (llt_scale.info() != Eigen::Success)
    throw std::runtime_error("sample_inverse_wishart: scale not positive-definite");
  const Eigen::MatrixXd scale_inv =
      llt_scale.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> llt_inv(scale_inv);
  if (llt_inv.info() != Eigen::Success)
    throw std::runtime_error("sample_inverse_wishart: inverse scale not positive-definite");
  const Eigen::MatrixXd L = llt_inv.matrixL();

  // Bartlett decomposition of Wishart(dof, scale^{-1})
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
    A(i, i) = std::sqrt(rng.chi_squared(dof - i));
  }
  const Eigen::MatrixXd LA = L * A;
  const Eigen::MatrixXd W = LA * LA.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt_w(W);
  if (llt_w.info() != Eigen::Success)
    throw std::runtime_error("sample_inverse_wishart: degenerate Wishart draw");
  return llt_w.solve(Eigen::MatrixXd::Identity(p, p));
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_mvn: covariance not positive-definite");
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < mean.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

Eigen::MatrixXd update_q(const Eigen::MatrixXd& theta_path, const Eigen::VectorXd& theta0,
                         const Priors& priors, RngStream& rng) {
  const int p = static_cast<int>(theta_path.rows());
  const int n = static_cast<int>(theta_path.cols());
  if (n < 1) throw std::invalid_argument("update_q: empty path");
  if (theta0.size() != p) throw std::invalid_argument("update_q: theta0 dimension mismatch");
  Eigen::MatrixXd stat = priors.q_scale;
  Eigen::VectorXd prev = theta0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd diff = theta_path.col(j) - prev;
    stat += diff * diff.transpose();
    prev = theta_path.col(j);
  }
  return sample_inverse_wishart(priors.q_dof + n, stat, rng);
}

double update_sigma2(const PreparedData& data, const std::vector<std::vector<double>>& phi,
                     const Priors& priors, RngStream& rng) {
  double stat = 0.0;
  int count = 0;
  switch (data.family) {
    case Family::whittle_stationary: {
      if (phi.size() != 1) throw std::invalid_argument("update_sigma2: expected one state");
      for (int k = 0; k < data.stationary.grid.size(); ++k) {
        stat += 2.0 * M_PI * ar_transfer_sq(phi[0], data.stationary.grid.frequencies[k]) *
                data.stationary.ordinates[k];
        ++count;
      }
      break;
    }
    case Family::block_whittle: {
      if (static_cast<int>(phi.size()) != data.geometry.n_segments)
        throw std::invalid_argument("update_sigma2: path length != segment count");
      for (int j = 0; j < data.geometry.n_segments; ++j)
        for (int k = 0; k < data.seg_grid.size(); ++k) {
          stat += 2.0 * M_PI * ar_transfer_sq(phi[j], data.seg_grid.frequencies[k]) *
                  data.block_ordinates[j][k];
          ++count;
        }
      break;
    }
    case Family::dynamic_whittle: {
      if (static_cast<int>(phi.size()) != data.moving.size())
        throw std::invalid_argument("update_sigma2: path length != entry count");
      for (int i = 0; i < data.moving.size(); ++i) {
        stat += 2.0 * M_PI * ar_transfer_sq(phi[i], data.moving.frequencies[i]) *
                data.moving.ordinates[i];
        ++count;
      }
      break;
    }
    case Family::time_domain:
      throw std::invalid_argument("update_sigma2: spectral families only");
  }
  if (!std::isfinite(stat)) throw std::runtime_error("update_sigma2: non-finite statistic");
  return rng.inverse_gamma(priors.sigma2_shape + count, priors.sigma2_scale + stat);
}

Eigen::VectorXd update_initial_state(const Eigen::VectorXd& theta1,
                                     const Eigen::MatrixXd& trans_cov, const Priors& priors,
                                     RngStream& rng) {
  const int d = static_cast<int>(theta1.size());
  if (trans_cov.rows() != d || priors.init_cov.rows() != d)
    throw std::invalid_argument("update_initial_state: dimension mismatch");
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt_q(trans_cov);
  Eigen::LLT<Eigen::MatrixXd> llt_p(priors.init_cov);
  if (llt_q.info() != Eigen::Success || llt_p.info() != Eigen::Success)
    throw std::runtime_error("update_initial_state: covariance not positive-definite");
  const Eigen::MatrixXd q_inv = llt_q.solve(eye);
  const Eigen::MatrixXd p_inv = llt_p.solve(eye);
  Eigen::LLT<Eigen::MatrixXd> llt_prec(Eigen::MatrixXd(q_inv + p_inv));
  if (llt_prec.info() != Eigen::Success)
    throw std::runtime_error("update_initial_state: singular precision");
  const Eigen::MatrixXd omega = llt_prec.solve(eye);
  const Eigen::VectorXd mean = omega * (q_inv * theta1 + p_inv * priors.init_mean);
  return sample_mvn(mean, omega, rng);
}

// ---------------------------------------------------------------------------
// Full Gibbs sampler

PosteriorDraws gibbs_run(std::span<const double> x, const LikelihoodSpec& spec, int order,
                         const Priors& priors, const GibbsConfig& config) {
  config.validate();
  if (order < 1 || order > kMaxArOrder) throw std::invalid_argument("gibbs_run: order out of range");
  priors.validate(order, spec.sv);
  if (spec.sv && spec.family == Family::whittle_stationary)
    throw std::invalid_argument("gibbs_run: SV needs a time-varying family");

  const PreparedData data = prepare(x, spec);
  const int n = data.n_states();
  const int d = order + (spec.sv ? 1 : 0);
  RngStream rng(config.seed);

  Priors eff = priors;
  if (spec.family == Family::block_whittle && config.scale_q_prior_by_step) {
    eff.q_scale *= static_cast<double>(spec.step);
    eff.zeta_scale *= static_cast<double>(spec.step);
  }

  std::unique_ptr<ObservationModel> obs = make_observation_model(data, order);
  auto* spectral_obs = dynamic_cast<SpectralObsModel*>(obs.get());
  auto* time_obs = dynamic_cast<TimeDomainObsModel*>(obs.get());

  double sigma2 = 0.0;
  for (const double v : x) sigma2 += v * v;
  sigma2 /= static_cast<double>(x.size());
  if (!(sigma2 > 0.0)) sigma2 = 1.0;
  double zeta_var = eff.zeta_scale / (eff.zeta_shape + 1.0);  // prior mode

  Eigen::VectorXd theta0 = eff.init_mean;
  if (spec.sv) theta0[order] = std::log(sigma2);
  Eigen::MatrixXd path(d, n);
  for (int j = 0; j < n; ++j) path.col(j) = theta0;

  Eigen::MatrixXd q = eff.q_dof > order + 1
                          ? Eigen::MatrixXd(eff.q_scale / (eff.q_dof - order - 1.0))
                          : eff.q_scale;

  PosteriorDraws draws;
  draws.order = order;
  draws.sv = spec.sv;
  draws.n_states = n;
  draws.state_times = data.state_times();
  const int n_keep = config.n_stored();
  draws.theta_path.reserve(n_keep);
  draws.q_draw.reserve(n_keep);
  draws.theta0_draw.reserve(n_keep);

  std::vector<std::vector<double>> phi(n, std::vector<double>(order));
  for (int it = 0; it < config.n_iter; ++it) {
    const Eigen::MatrixXd trans_cov = spec.sv ? block_diag(q, zeta_var) : q;
    if (spectral_obs != nullptr) spectral_obs->set_sigma2(sigma2);
    if (time_obs != nullptr) time_obs->set_sigma2(sigma2);
    path = pgas_update(*obs, path, theta0, trans_cov, config.n_particles, rng);

    q = update_q(path.topRows(order), theta0.head(order), eff, rng);

    for (int j = 0; j < n; ++j) theta_to_phi_buf(path.col(j).data(), order, phi[j].data());
    if (spec.sv) {
      double stat = 0.0;
      double prev = theta0[order];
      for (int j = 0; j < n; ++j) {
        const double diff = path(order, j) - prev;
        stat += diff * diff;
        prev = path(order, j);
      }
      zeta_var = rng.inverse_gamma(eff.zeta_shape + 0.5 * n, eff.zeta_scale + 0.5 * stat);
    } else if (spec.family == Family::time_domain) {
      double rss = 0.0;
      const int t_len = static_cast<int>(x.size());
      for (int t = order; t < t_len; ++t) {
        double mean = 0.0;
        for (int j = 0; j < order; ++j) mean += phi[t][j] * x[t - 1 - j];
        const double resid = x[t] - mean;
        rss += resid * resid;
      }
      sigma2 = rng.inverse_gamma(eff.sigma2_shape + 0.5 * (t_len - order),
                                 eff.sigma2_scale + 0.5 * rss);
    } else {
      sigma2 = update_sigma2(data, phi, eff, rng);
    }

    const Eigen::MatrixXd trans_cov_new = spec.sv ? block_diag(q, zeta_var) : q;
    theta0 = update_initial_state(path.col(0), trans_cov_new, eff, rng);

    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      for (int j = 0; j < n; ++j)
        if (!is_stable(phi[j]))
          throw std::runtime_error("gibbs_run: stored path failed the stability check");
      draws.theta_path.push_back(path);
      draws.q_draw.push_back(q);
      draws.theta0_draw.push_back(theta0);
      if (spec.sv)
        draws.zeta_var_draw.push_back(zeta_var);
      else
        draws.sigma2_draw.push_back(sigma2);
    }
  }
  return draws;
}

// ---------------------------------------------------------------------------
// Post-processing

std::vector<double> interpolate_path(std::span<const double> values, std::span<const int> centers,
                                     int t_len) {
  if (values.empty() || values.size() != centers.size())
    throw std::invalid_argument("interpolate_path: empty or mismatched inputs");
  std::vector<double> out(t_len);
  int idx = 0;
  for (int t = 1; t <= t_len; ++t) {
    while (idx + 1 < static_cast<int>(centers.size()) && centers[idx + 1] <= t) ++idx;
    out[t - 1] = t < centers[0] ? values[0] : values[idx];
  }
  return out;
}

std::vector<double> posterior_quantiles(std::span<const double> draws,
                                        std::span<const double> probs) {
  if (draws.size() < 2) throw std::invalid_argument("posterior_quantiles: need at least 2 draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double prob = probs[i];
    if (!(prob >= 0.0 && prob <= 1.0))
      throw std::invalid_argument("posterior_quantiles: probability outside [0,1]");
    const double pos = (n - 1.0) * prob;
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out[i] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  return out;
}

}  // namespace tvwhittle
