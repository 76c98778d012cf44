#include "tvwhittle/modify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvwhittle/tvar.hpp"

namespace tvwhittle {

namespace {

double sample_variance(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (const double v : x) var += (v - mean) * (v - mean);
  return var / n;
}

std::complex<double> ar_polynomial(std::span<const double> phi, std::complex<double> z) {
  std::complex<double> val = 1.0;
  std::complex<double> zp = 1.0;
  for (const double c : phi) {
    zp *= z;
    val -= c * zp;
  }
  return val;
}

void require_stable_filter(const FittedAR& fitted, const char* where) {
  if (fitted.order != static_cast<int>(fitted.coeffs.size()))
    throw std::invalid_argument(std::string(where) + ": order/coefficient mismatch");
  if (fitted.order > 0 && !is_stable(fitted.coeffs))
    throw std::domain_error(std::string(where) + ": unstable prediction filter");
}

}  // namespace

TaperWindow hanning_window(int seg_len) {
  if (seg_len < 2) throw std::invalid_argument("hanning_window: N must be >= 2");
  TaperWindow win;
  win.weights.resize(seg_len);
  for (int s = 1; s <= seg_len; ++s)
    win.weights[s - 1] = 0.5 * (1.0 - std::cos(2.0 * M_PI * s / seg_len));
  win.h2_sum = 0.0;
  for (int j = 0; j < seg_len; ++j) {
    const double h = 0.5 * (1.0 - std::cos(2.0 * M_PI * j / seg_len));
    win.h2_sum += h * h;
  }
  return win;
}

RescaledSegment rescale_tapered_segment(std::span<const double> raw,
                                        std::span<const double> tapered) {
  if (raw.size() != tapered.size() || raw.empty())
    throw std::invalid_argument("rescale_tapered_segment: size mismatch");
  RescaledSegment out;
  out.values.assign(tapered.begin(), tapered.end());
  const double var_raw = sample_variance(raw);
  const double var_tap = sample_variance(tapered);
  double scale_ref = 0.0;
  for (const double v : raw) scale_ref = std::max(scale_ref, v * v);
  const double tiny = 1e-28 * (scale_ref + std::numeric_limits<double>::min());
  if (var_raw <= tiny || var_tap <= tiny) {
    out.degenerate = true;
    return out;
  }
  out.factor = std::sqrt(var_raw / var_tap);
  for (double& v : out.values) v *= out.factor;
  return out;
}

FittedAR fit_ar_hq(std::span<const double> segment, int p_max) {
  const int n = static_cast<int>(segment.size());
  if (p_max < 0) throw std::invalid_argument("fit_ar_hq: p_max must be >= 0");
  if (n <= p_max + 1) throw std::invalid_argument("fit_ar_hq: segment too short for p_max");

  double sigma2 = 0.0;
  for (const double v : segment) sigma2 += v * v;
  sigma2 /= n;

  std::vector<std::vector<double>> coeffs_by_order(p_max + 1);
  std::vector<double> sigma2_by_order(p_max + 1);
  sigma2_by_order[0] = sigma2;

  std::vector<double> f(segment.begin(), segment.end());
  std::vector<double> b(segment.begin(), segment.end());
  std::vector<double> a;
  for (int k = 1; k <= p_max; ++k) {
    double num = 0.0, den = 0.0;
    for (int t = k; t < n; ++t) {
      num += f[t] * b[t - 1];
      den += f[t] * f[t] + b[t - 1] * b[t - 1];
    }
    const double rk = den > 0.0 ? 2.0 * num / den : 0.0;
    std::vector<double> next(k);
    for (int j = 0; j < k - 1; ++j) next[j] = a[j] - rk * a[k - 2 - j];
    next[k - 1] = rk;
    a = std::move(next);
    for (int t = n - 1; t >= k; --t) {
      const double ft = f[t], bt = b[t - 1];
      f[t] = ft - rk * bt;
      b[t] = bt - rk * ft;
    }
    sigma2 *= (1.0 - rk * rk);
    coeffs_by_order[k] = a;
    sigma2_by_order[k] = sigma2;
  }

  const double loglog_n = std::log(std::log(static_cast<double>(n)));
  int best = 0;
  double best_hq = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= p_max; ++p) {
    const double hq = (sigma2_by_order[p] > 0.0
                           ? std::log(sigma2_by_order[p])
                           : -std::numeric_limits<double>::infinity()) +
                      2.0 * p * loglog_n / n;
    if (hq < best_hq) {
      best_hq = hq;
      best = p;
    }
  }
  FittedAR fit;
  fit.order = best;
  fit.coeffs = coeffs_by_order[best];
  fit.sigma2 = sigma2_by_order[best];
  return fit;
}

std::vector<double> prewhiten_periodogram(std::span<const double> segment, const FittedAR& fitted,
                                          const FourierGrid& grid) {
  require_stable_filter(fitted, "prewhiten_periodogram");
  const int n = static_cast<int>(segment.size());
  const int p = fitted.order;
  if (n <= p) throw std::invalid_argument("prewhiten_periodogram: segment shorter than order");
  std::vector<double> resid(n - p);
  for (int t = p; t < n; ++t) {
    double e = segment[t];
    for (int j = 0; j < p; ++j) e -= fitted.coeffs[j] * segment[t - 1 - j];
    resid[t - p] = e;
  }
  const double norm = 2.0 * M_PI * (n - p);
  std::vector<double> out(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const double omega = grid.frequencies[k];
    const double ie = std::norm(dft(resid, omega)) / norm;
    out[k] = ie / ar_transfer_sq(fitted.coeffs, omega);
  }
  return out;
}

std::complex<double> predictive_dft_at(std::span<const double> segment, const FittedAR& fitted,
                                       double omega) {
  require_stable_filter(fitted, "predictive_dft");
  const int n = static_cast<int>(segment.size());
  const int p = fitted.order;
  if (p == 0) return {0.0, 0.0};
  if (n < p) throw std::invalid_argument("predictive_dft: segment shorter than order");

  // The AR recursion makes both prediction tails geometric; summing
  // sum_{h>=1} xhat_{T+h} z^h against the recursion gives the exact rational
  // form S = phi(z)^{-1} sum_{h=1}^p z^h sum_{j=h}^p phi_j x_{T+h-j} (and the
  // mirrored expression with w = conj(z) for the backcasts).
  const std::complex<double> z(std::cos(omega), -std::sin(omega));
  const std::complex<double> w = std::conj(z);
  const std::span<const double> phi(fitted.coeffs);

  std::complex<double> right = 0.0;
  std::complex<double> zh = 1.0;
  for (int h = 1; h <= p; ++h) {
    zh *= z;
    double inner = 0.0;
    for (int j = h; j <= p; ++j) inner += phi[j - 1] * segment[n + h - j - 1];
    right += zh * inner;
  }
  right /= ar_polynomial(phi, z);

  std::complex<double> left = 0.0;
  std::complex<double> wh = 1.0;
  for (int h = 1; h <= p; ++h) {
    wh *= w;
    double inner = 0.0;
    for (int j = h; j <= p; ++j) inner += phi[j - 1] * segment[j - h];
    left += wh * inner;
  }
  left /= ar_polynomial(phi, w);

  const std::complex<double> phase_t(std::cos(omega * n), -std::sin(omega * n));
  return phase_t * right + z * left;
}

std::vector<std::complex<double>> predictive_dft(std::span<const double> segment,
                                                 const FittedAR& fitted, const FourierGrid& grid) {
  std::vector<std::complex<double>> out(grid.size());
  for (int k = 0; k < grid.size(); ++k) out[k] = predictive_dft_at(segment, fitted, grid.frequencies[k]);
  return out;
}

double complete_periodogram_at(std::span<const double> segment, const FittedAR& fitted,
                               double omega) {
  const std::complex<double> J = dft(segment, omega);
  const std::complex<double> Jtilde = J + predictive_dft_at(segment, fitted, omega);
  return std::real(Jtilde * std::conj(J)) / (2.0 * M_PI * static_cast<double>(segment.size()));
}

std::vector<double> complete_periodogram(std::span<const double> segment, const FittedAR& fitted,
                                         const FourierGrid& grid) {
  const std::vector<std::complex<double>> J = dft_batch(segment, grid);
  const std::vector<std::complex<double>> Jhat = predictive_dft(segment, fitted, grid);
  const double norm = 2.0 * M_PI * static_cast<double>(segment.size());
  std::vector<double> out(grid.size());
  for (int k = 0; k < grid.size(); ++k)
    out[k] = std::real((J[k] + Jhat[k]) * std::conj(J[k])) / norm;
  return out;
}

namespace {

double tapered_complete_at(std::span<const double> segment, const FittedAR& fitted, double omega,
                           const TaperWindow& window, double h1_sum) {
  const int n = static_cast<int>(segment.size());
  std::vector<double> tapered(n);
  for (int s = 0; s < n; ++s) tapered[s] = window.weights[s] * segment[s];
  const std::complex<double> Jh = dft(tapered, omega);
  const std::complex<double> Jtilde =
      dft(segment, omega) + predictive_dft_at(segment, fitted, omega);
  return std::real(Jtilde * std::conj(Jh)) / (2.0 * M_PI * h1_sum);
}

double taper_h1(const TaperWindow& window) {
  double h1 = 0.0;
  for (const double w : window.weights) h1 += w;
  if (!(h1 > 0.0)) throw std::invalid_argument("taper window has zero mass");
  return h1;
}

}  // namespace

double complete_periodogram_tapered_at(std::span<const double> segment, const FittedAR& fitted,
                                       double omega, const TaperWindow& window) {
  if (window.weights.size() != segment.size())
    throw std::invalid_argument("complete_periodogram_tapered: window/segment size mismatch");
  return tapered_complete_at(segment, fitted, omega, window, taper_h1(window));
}

std::vector<double> complete_periodogram_tapered(std::span<const double> segment,
                                                 const FittedAR& fitted, const FourierGrid& grid,
                                                 const TaperWindow& window) {
  if (window.weights.size() != segment.size())
    throw std::invalid_argument("complete_periodogram_tapered: window/segment size mismatch");
  const double h1 = taper_h1(window);
  const int n = static_cast<int>(segment.size());
  std::vector<double> tapered(n);
  for (int s = 0; s < n; ++s) tapered[s] = window.weights[s] * segment[s];
  const std::vector<std::complex<double>> Jh = dft_batch(tapered, grid);
  const std::vector<std::complex<double>> J = dft_batch(segment, grid);
  const std::vector<std::complex<double>> Jhat = predictive_dft(segment, fitted, grid);
  std::vector<double> out(grid.size());
  for (int k = 0; k < grid.size(); ++k)
    out[k] = std::real((J[k] + Jhat[k]) * std::conj(Jh[k])) / (2.0 * M_PI * h1);
  return out;
}

std::string Modification::label() const {
  switch (scheme) {
    case ModScheme::none:
      return "none";
    case ModScheme::taper:
      return "taper";
    case ModScheme::taper_rescaled:
      return "taper-rescaled";
    case ModScheme::prewhiten:
      return "prewhiten";
    case ModScheme::boundary_correct:
      return bc_with_taper ? "bc" : "bc-notaper";
  }
  return "?";
}

Modification parse_modification(const std::string& token) {
  Modification mod;
  if (token == "none") {
    mod.scheme = ModScheme::none;
  } else if (token == "taper") {
    mod.scheme = ModScheme::taper;
  } else if (token == "taper-rescaled") {
    mod.scheme = ModScheme::taper_rescaled;
  } else if (token == "prewhiten") {
    mod.scheme = ModScheme::prewhiten;
  } else if (token == "bc") {
    mod.scheme = ModScheme::boundary_correct;
    mod.bc_with_taper = true;
  } else if (token == "bc-notaper") {
    mod.scheme = ModScheme::boundary_correct;
    mod.bc_with_taper = false;
  } else {
    throw std::invalid_argument("unknown modification '" + token + "'");
  }
  return mod;
}

namespace {

FittedAR fit_for_segment(const Modification& mod, std::span<const double> segment) {
  const int n = static_cast<int>(segment.size());
  const int p_max = std::max(0, std::min(mod.p_max, n - 2));
  return fit_ar_hq(segment, p_max);
}

}  // namespace

std::vector<double> apply_modification(const Modification& mod, std::span<const double> segment,
                                       const FourierGrid& grid) {
  const int n = static_cast<int>(segment.size());
  if (grid.t_origin != n)
    throw std::invalid_argument("apply_modification: grid built for a different segment length");
  switch (mod.scheme) {
    case ModScheme::none:
      return periodogram(segment, grid).ordinates;
    case ModScheme::taper: {
      const TaperWindow win = hanning_window(n);
      std::vector<double> tapered(n);
      for (int s = 0; s < n; ++s) tapered[s] = win.weights[s] * segment[s];
      const std::vector<std::complex<double>> J = dft_batch(tapered, grid);
      std::vector<double> out(grid.size());
      for (int k = 0; k < grid.size(); ++k) out[k] = std::norm(J[k]) / (2.0 * M_PI * win.h2_sum);
      return out;
    }
    case ModScheme::taper_rescaled: {
      const TaperWindow win = hanning_window(n);
      std::vector<double> tapered(n);
      for (int s = 0; s < n; ++s) tapered[s] = win.weights[s] * segment[s];
      const RescaledSegment rescaled = rescale_tapered_segment(segment, tapered);
      return periodogram(rescaled.values, grid).ordinates;
    }
    case ModScheme::prewhiten:
      return prewhiten_periodogram(segment, fit_for_segment(mod, segment), grid);
    case ModScheme::boundary_correct: {
      const FittedAR fit = fit_for_segment(mod, segment);
      if (mod.bc_with_taper)
        return complete_periodogram_tapered(segment, fit, grid, hanning_window(n));
      return complete_periodogram(segment, fit, grid);
    }
  }
  throw std::logic_error("apply_modification: unreachable");
}

double apply_modification_at(const Modification& mod, std::span<const double> segment,
                             double omega) {
  const int n = static_cast<int>(segment.size());
  switch (mod.scheme) {
    case ModScheme::none:
      return std::norm(dft(segment, omega)) / (2.0 * M_PI * n);
    case ModScheme::taper: {
      const TaperWindow win = hanning_window(n);
      std::vector<double> tapered(n);
      for (int s = 0; s < n; ++s) tapered[s] = win.weights[s] * segment[s];
      return std::norm(dft(tapered, omega)) / (2.0 * M_PI * win.h2_sum);
    }
    case ModScheme::taper_rescaled: {
      const TaperWindow win = hanning_window(n);
      std::vector<double> tapered(n);
      for (int s = 0; s < n; ++s) tapered[s] = win.weights[s] * segment[s];
      const RescaledSegment rescaled = rescale_tapered_segment(segment, tapered);
      return std::norm(dft(rescaled.values, omega)) / (2.0 * M_PI * n);
    }
    case ModScheme::prewhiten: {
      const FittedAR fit = fit_for_segment(mod, segment);
      const int p = fit.order;
      std::vector<double> resid(n - p);
      for (int t = p; t < n; ++t) {
        double e = segment[t];
        for (int j = 0; j < p; ++j) e -= fit.coeffs[j] * segment[t - 1 - j];
        resid[t - p] = e;
      }
      const double ie = std::norm(dft(resid, omega)) / (2.0 * M_PI * (n - p));
      return ie / ar_transfer_sq(fit.coeffs, omega);
    }
    case ModScheme::boundary_correct: {
      const FittedAR fit = fit_for_segment(mod, segment);
      if (mod.bc_with_taper)
        return complete_periodogram_tapered_at(segment, fit, omega, hanning_window(n));
      return complete_periodogram_at(segment, fit, omega);
    }
  }
  throw std::logic_error("apply_modification_at: unreachable");
}

}  // namespace tvwhittle
