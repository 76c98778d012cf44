#include "tvwhittle/tvar.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tvwhittle {

namespace {

// The Levinson-type recursions are run in long double: the inverse divides by
// (1 - r_k^2) at every level, which compounds badly when several |r_k| are
// close to one.
std::vector<long double> levinson_forward(std::span<const long double> r) {
  const int p = static_cast<int>(r.size());
  std::vector<long double> phi;
  if (p == 0) return phi;
  phi = {r[0]};
  std::vector<long double> next;
  for (int k = 2; k <= p; ++k) {
    const long double rk = r[k - 1];
    next.assign(k, 0.0L);
    for (int j = 0; j < k - 1; ++j) next[j] = phi[j] - rk * phi[k - 2 - j];
    next[k - 1] = rk;
    phi = next;
  }
  return phi;
}

bool levinson_inverse(std::span<const long double> phi, std::vector<long double>& r) {
  const int p = static_cast<int>(phi.size());
  r.assign(p, 0.0L);
  std::vector<long double> cur(phi.begin(), phi.end());
  std::vector<long double> prev;
  for (int k = p; k >= 1; --k) {
    const long double rk = cur[k - 1];
    if (!(std::abs(rk) < 1.0L)) return false;
    r[k - 1] = rk;
    prev.assign(k - 1, 0.0L);
    const long double denom = 1.0L - rk * rk;
    for (int j = 0; j < k - 1; ++j) prev[j] = (cur[j] + rk * cur[k - 2 - j]) / denom;
    cur = prev;
  }
  return true;
}

}  // namespace

std::vector<double> theta_to_r(std::span<const double> theta) {
  std::vector<double> r(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta[i])) throw std::invalid_argument("theta_to_r: non-finite theta");
    const long double t = theta[i];
    r[i] = static_cast<double>(t / std::sqrt(1.0L + t * t));
  }
  return r;
}

std::vector<double> r_to_theta(std::span<const double> r) {
  std::vector<double> theta(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(std::abs(r[i]) < 1.0)) throw std::domain_error("r_to_theta: |r| must be < 1");
    const long double v = r[i];
    theta[i] = static_cast<double>(v / std::sqrt(1.0L - v * v));
  }
  return theta;
}

std::vector<double> r_to_phi(std::span<const double> r) {
  std::vector<long double> rl(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(std::abs(r[i]) < 1.0)) throw std::domain_error("r_to_phi: |r| must be < 1");
    rl[i] = r[i];
  }
  const std::vector<long double> phil = levinson_forward(rl);
  std::vector<double> phi(phil.size());
  for (std::size_t i = 0; i < phil.size(); ++i) phi[i] = static_cast<double>(phil[i]);
  return phi;
}

std::vector<double> phi_to_r(std::span<const double> phi) {
  std::vector<long double> phil(phi.begin(), phi.end());
  std::vector<long double> rl;
  if (!levinson_inverse(phil, rl))
    throw std::domain_error("phi_to_r: coefficients outside the stability region");
  std::vector<double> r(rl.size());
  for (std::size_t i = 0; i < rl.size(); ++i) r[i] = static_cast<double>(rl[i]);
  return r;
}

std::vector<double> theta_to_phi(std::span<const double> theta) {
  std::vector<long double> rl(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta[i])) throw std::invalid_argument("theta_to_phi: non-finite theta");
    const long double t = theta[i];
    rl[i] = t / std::sqrt(1.0L + t * t);
  }
  const std::vector<long double> phil = levinson_forward(rl);
  std::vector<double> phi(phil.size());
  for (std::size_t i = 0; i < phil.size(); ++i) phi[i] = static_cast<double>(phil[i]);
  return phi;
}

void theta_to_phi_buf(const double* theta, int order, double* phi_out) {
  if (order > kMaxArOrder) throw std::invalid_argument("theta_to_phi_buf: order too large");
  long double r[kMaxArOrder];
  long double cur[kMaxArOrder];
  long double next[kMaxArOrder];
  for (int i = 0; i < order; ++i) {
    const long double t = theta[i];
    r[i] = t / std::sqrt(1.0L + t * t);
  }
  if (order == 0) return;
  cur[0] = r[0];
  for (int k = 2; k <= order; ++k) {
    const long double rk = r[k - 1];
    for (int j = 0; j < k - 1; ++j) next[j] = cur[j] - rk * cur[k - 2 - j];
    next[k - 1] = rk;
    for (int j = 0; j < k; ++j) cur[j] = next[j];
  }
  for (int j = 0; j < order; ++j) phi_out[j] = static_cast<double>(cur[j]);
}

bool is_stable(std::span<const double> phi) {
  std::vector<long double> phil(phi.begin(), phi.end());
  for (const double v : phi)
    if (!std::isfinite(v)) return false;
  std::vector<long double> rl;
  return levinson_inverse(phil, rl);
}

std::vector<double> simulate_tvar(const TvarPath& path, RngStream& rng, int burn_in) {
  if (path.t_len <= 0 || static_cast<int>(path.phi.size()) != path.t_len ||
      static_cast<int>(path.sigma2.size()) != path.t_len)
    throw std::invalid_argument("simulate_tvar: inconsistent path");
  if (burn_in < 0) throw std::invalid_argument("simulate_tvar: negative burn_in");
  const int p = path.order;
  for (int t = 0; t < path.t_len; ++t) {
    if (!is_stable(path.phi[t]))
      throw std::domain_error("simulate_tvar: unstable coefficients at t=" + std::to_string(t + 1));
    if (!(path.sigma2[t] > 0.0)) throw std::domain_error("simulate_tvar: sigma2 must be > 0");
  }

  std::vector<double> lags(p, 0.0);  // lags[0] = x_{t-1}, lags[1] = x_{t-2}, ...
  const double sd0 = std::sqrt(path.sigma2[0]);
  for (int b = 0; b < burn_in; ++b) {
    double mean = 0.0;
    for (int j = 0; j < p; ++j) mean += path.phi[0][j] * lags[j];
    const double x = mean + sd0 * rng.normal();
    for (int j = p - 1; j > 0; --j) lags[j] = lags[j - 1];
    if (p > 0) lags[0] = x;
  }

  std::vector<double> out(path.t_len);
  for (int t = 0; t < path.t_len; ++t) {
    double mean = 0.0;
    for (int j = 0; j < p; ++j) mean += path.phi[t][j] * lags[j];
    const double x = mean + std::sqrt(path.sigma2[t]) * rng.normal();
    out[t] = x;
    for (int j = p - 1; j > 0; --j) lags[j] = lags[j - 1];
    if (p > 0) lags[0] = x;
  }
  return out;
}

std::vector<double> simulate_sv_variance(int t_len, double log_sigma2_init, double zeta_var,
                                         RngStream& rng) {
  if (t_len <= 0) throw std::invalid_argument("simulate_sv_variance: t_len must be positive");
  if (!(zeta_var >= 0.0)) throw std::invalid_argument("simulate_sv_variance: zeta_var must be >= 0");
  std::vector<double> sigma2(t_len);
  const double sd = std::sqrt(zeta_var);
  double logv = log_sigma2_init;
  for (int t = 0; t < t_len; ++t) {
    logv += sd * rng.normal();
    sigma2[t] = std::exp(logv);
  }
  return sigma2;
}

namespace {

TvarPath path_from_phi(std::vector<std::vector<double>> phi, int order) {
  TvarPath path;
  path.t_len = static_cast<int>(phi.size());
  path.order = order;
  path.phi = std::move(phi);
  path.theta.resize(path.t_len);
  for (int t = 0; t < path.t_len; ++t)
    path.theta[t] = r_to_theta(phi_to_r(path.phi[t]));
  path.sigma2.assign(path.t_len, 1.0);
  return path;
}

TvarPath path_from_theta(std::vector<std::vector<double>> theta, int order) {
  TvarPath path;
  path.t_len = static_cast<int>(theta.size());
  path.order = order;
  path.theta = std::move(theta);
  path.phi.resize(path.t_len);
  for (int t = 0; t < path.t_len; ++t) path.phi[t] = theta_to_phi(path.theta[t]);
  path.sigma2.assign(path.t_len, 1.0);
  return path;
}

}  // namespace

TvarPath dgp_experiment1(int t_len) {
  if (t_len < 2) throw std::invalid_argument("dgp_experiment1: t_len must be >= 2");
  std::vector<std::vector<double>> phi(t_len);
  for (int t = 1; t <= t_len; ++t) {
    const double tu = static_cast<double>(t - 1) / static_cast<double>(t_len - 1);
    phi[t - 1] = {-1.8 * std::cos(1.5 - std::cos(4.0 * M_PI * tu)), -0.9};
  }
  return path_from_phi(std::move(phi), 2);
}

TvarPath dgp_experiment2(int t_len) {
  if (t_len < 2) throw std::invalid_argument("dgp_experiment2: t_len must be >= 2");
  std::vector<std::vector<double>> phi(t_len, {1.4, -0.7, 0.2});
  return path_from_phi(std::move(phi), 3);
}

TvarPath dgp_experiment3(int t_len) {
  if (t_len != 1500)
    throw std::invalid_argument("dgp_experiment3: the piecewise parameter paths are defined for t_len = 1500 only");
  std::vector<std::vector<double>> theta(t_len);
  for (int t = 1; t <= t_len; ++t) {
    double th1, th2;
    if (t <= 500) {
      th1 = 1.5 - 4.0 * (t - 1) / 500.0;
      th2 = 1.0 - 2.0 * (t - 1) / 500.0;
    } else if (t <= 1000) {
      th1 = -2.5 + 4.5 * (t - 501) / 500.0;
      th2 = -1.0 + (t - 501) / 500.0;
    } else {
      th1 = 2.0 - 4.0 * (t - 1001) / 500.0;
      th2 = -0.5 * (t - 1001) / 500.0;
    }
    theta[t - 1] = {th1, th2};
  }
  return path_from_theta(std::move(theta), 2);
}

}  // namespace tvwhittle
