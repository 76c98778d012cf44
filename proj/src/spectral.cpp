#include "tvwhittle/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "tvwhittle/tvar.hpp"

namespace tvwhittle {

namespace {

std::mutex fftw_mutex;

// FFTW plan creation is not thread-safe; all calls are serialized. The
// periodogram data for a run is computed once before inference, so this is
// never on a hot path.
std::vector<std::complex<double>> fft_forward(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> in(n), out(n);
  for (int t = 0; t < n; ++t) in[t] = x[t];
  std::lock_guard<std::mutex> lock(fftw_mutex);
  fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace

FourierGrid fourier_frequencies(int t_len, bool include_boundary) {
  if (t_len < 2) throw std::invalid_argument("fourier_frequencies: T must be >= 2");
  FourierGrid grid;
  grid.t_origin = t_len;
  const int k_interior_max = (t_len + 1) / 2 - 1;  // ceil(T/2) - 1
  for (int k = 1; k <= k_interior_max; ++k) {
    grid.k_index.push_back(k);
    grid.frequencies.push_back(2.0 * M_PI * k / t_len);
  }
  if (include_boundary && t_len % 2 == 0) {
    grid.k_index.push_back(t_len / 2);
    grid.frequencies.push_back(M_PI);
  }
  return grid;
}

std::complex<double> dft(std::span<const double> x, double omega) {
  for (const double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("dft: non-finite value");
  // Recurrence-free direct evaluation keeps full accuracy for arbitrary omega.
  std::complex<double> sum = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double arg = -omega * static_cast<double>(t + 1);
    sum += x[t] * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  return sum;
}

std::vector<std::complex<double>> dft_batch(std::span<const double> x, const FourierGrid& grid) {
  const int n = static_cast<int>(x.size());
  if (grid.t_origin != n)
    throw std::invalid_argument("dft_batch: grid was built for a different series length");
  for (const double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("dft_batch: non-finite value");
  const std::vector<std::complex<double>> fft = fft_forward(x);
  // FFT indexes t from 0; the t = 1..T convention adds the phase e^{-i omega}.
  std::vector<std::complex<double>> out(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double omega = grid.frequencies[i];
    out[i] = fft[grid.k_index[i]] * std::complex<double>(std::cos(omega), -std::sin(omega));
  }
  return out;
}

Periodogram periodogram(std::span<const double> x, const FourierGrid& grid) {
  if (grid.t_origin != static_cast<int>(x.size()))
    throw std::invalid_argument("periodogram: grid/series length mismatch");
  Periodogram pg;
  pg.grid = grid;
  pg.ordinates.resize(grid.size());
  const std::vector<std::complex<double>> J = dft_batch(x, grid);
  const double norm = 2.0 * M_PI * static_cast<double>(x.size());
  for (int i = 0; i < grid.size(); ++i) pg.ordinates[i] = std::norm(J[i]) / norm;
  return pg;
}

double ar_transfer_sq(std::span<const double> phi, double omega) {
  double re = 1.0, im = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double arg = -omega * static_cast<double>(j + 1);
    re -= phi[j] * std::cos(arg);
    im -= phi[j] * std::sin(arg);
  }
  return re * re + im * im;
}

double ar_spectral_density(const ARSpec& spec, double omega) {
  if (!(spec.sigma2 > 0.0)) throw std::domain_error("ar_spectral_density: sigma2 must be > 0");
  if (!is_stable(spec.phi)) throw std::domain_error("ar_spectral_density: unstable coefficients");
  return spec.sigma2 / (2.0 * M_PI) / ar_transfer_sq(spec.phi, omega);
}

double whittle_loglik(std::span<const double> ordinates, std::span<const double> f) {
  if (ordinates.size() != f.size())
    throw std::invalid_argument("whittle_loglik: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < ordinates.size(); ++k) {
    if (!(f[k] > 0.0)) throw std::domain_error("whittle_loglik: spectral density must be > 0");
    sum += std::log(f[k]) + ordinates[k] / f[k];
  }
  return -0.5 * sum;
}

double whittle_loglik(const Periodogram& pg, const std::function<double(double)>& f) {
  std::vector<double> fv(pg.grid.size());
  for (int k = 0; k < pg.grid.size(); ++k) fv[k] = f(pg.grid.frequencies[k]);
  return whittle_loglik(pg.ordinates, fv);
}

double exact_ar1_loglik(std::span<const double> x, double phi, double sigma2) {
  if (!(std::abs(phi) < 1.0)) throw std::domain_error("exact_ar1_loglik: |phi| must be < 1");
  if (!(sigma2 > 0.0)) throw std::domain_error("exact_ar1_loglik: sigma2 must be > 0");
  if (x.size() < 1) throw std::invalid_argument("exact_ar1_loglik: empty series");
  const double v0 = sigma2 / (1.0 - phi * phi);
  double ll = -0.5 * std::log(2.0 * M_PI * v0) - 0.5 * x[0] * x[0] / v0;
  const double log_norm = -0.5 * std::log(2.0 * M_PI * sigma2);
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double resid = x[t] - phi * x[t - 1];
    ll += log_norm - 0.5 * resid * resid / sigma2;
  }
  return ll;
}

GridPosterior grid_posterior(
    std::span<const double> x, std::span<const double> grid_phi,
    const std::function<double(std::span<const double>, double)>& loglik) {
  if (grid_phi.empty()) throw std::invalid_argument("grid_posterior: empty grid");
  for (const double g : grid_phi)
    if (!(std::abs(g) < 0.999 + 1e-12))
      throw std::invalid_argument("grid_posterior: grid point outside (-0.999, 0.999)");

  GridPosterior post;
  post.grid.assign(grid_phi.begin(), grid_phi.end());
  std::vector<double> ll(grid_phi.size());
  double max_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_phi.size(); ++i) {
    ll[i] = loglik(x, grid_phi[i]);
    max_ll = std::max(max_ll, ll[i]);
  }
  if (!std::isfinite(max_ll))
    throw std::runtime_error("grid_posterior: degenerate posterior (all log-likelihoods -inf)");

  post.weights.resize(grid_phi.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid_phi.size(); ++i) {
    post.weights[i] = std::exp(ll[i] - max_ll);
    total += post.weights[i];
  }
  for (double& w : post.weights) w /= total;

  // Quantiles by linear interpolation of the discrete CDF through the grid
  // points; probabilities at or below the first CDF value clamp to the first
  // grid point.
  std::vector<double> cdf(post.weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < post.weights.size(); ++i) {
    acc += post.weights[i];
    cdf[i] = acc;
  }
  for (std::size_t qi = 0; qi < kQuantileProbs.size(); ++qi) {
    const double prob = kQuantileProbs[qi];
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), prob);
    if (it == cdf.begin()) {
      post.quantiles[qi] = post.grid.front();
    } else if (it == cdf.end()) {
      post.quantiles[qi] = post.grid.back();
    } else {
      const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
      const double c0 = cdf[i - 1], c1 = cdf[i];
      const double g0 = post.grid[i - 1], g1 = post.grid[i];
      post.quantiles[qi] = c1 > c0 ? g0 + (prob - c0) / (c1 - c0) * (g1 - g0) : g1;
    }
  }
  return post;
}

}  // namespace tvwhittle
