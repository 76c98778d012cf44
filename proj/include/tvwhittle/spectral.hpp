#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace tvwhittle {

// Positive Fourier frequencies 2*pi*k/t_origin, zero always excluded
// (zero-mean convention) and pi excluded unless explicitly requested.
struct FourierGrid {
  std::vector<double> frequencies;  // strictly increasing, in (0, pi]
  std::vector<int> k_index;         // frequency = 2*pi*k/t_origin
  int t_origin = 0;

  int size() const { return static_cast<int>(frequencies.size()); }
};

FourierGrid fourier_frequencies(int t_len, bool include_boundary = false);

// DFT with the t = 1..T convention: J(omega) = sum_t x_t exp(-i omega t).
std::complex<double> dft(std::span<const double> x, double omega);

// Batch DFT over a grid built from t_origin = x.size(); FFT-backed.
std::vector<std::complex<double>> dft_batch(std::span<const double> x, const FourierGrid& grid);

struct Periodogram {
  FourierGrid grid;
  std::vector<double> ordinates;  // |J(omega_k)|^2 / (2 pi T)
};

Periodogram periodogram(std::span<const double> x, const FourierGrid& grid);

// Stationary AR(p) spectrum parameters; phi must be stable, sigma2 > 0.
struct ARSpec {
  std::vector<double> phi;
  double sigma2 = 1.0;
};

double ar_spectral_density(const ARSpec& spec, double omega);

// Squared modulus of the AR lag polynomial at e^{-i omega},
// |1 - sum_j phi_j e^{-i omega j}|^2.
double ar_transfer_sq(std::span<const double> phi, double omega);

// -1/2 sum_k [log f(omega_k) + I(omega_k)/f(omega_k)] over the grid.
double whittle_loglik(const Periodogram& pg, const std::function<double(double)>& f);
double whittle_loglik(std::span<const double> ordinates, std::span<const double> f);

// Exact Gaussian AR(1) log-likelihood with x_1 from the stationary
// distribution N(0, sigma2/(1-phi^2)).
double exact_ar1_loglik(std::span<const double> x, double phi, double sigma2);

inline constexpr std::array<double, 7> kQuantileProbs = {0.025, 0.10, 0.25,
                                                         0.50,  0.75, 0.90, 0.975};

struct GridPosterior {
  std::vector<double> grid;
  std::vector<double> weights;           // normalized to sum 1
  std::array<double, 7> quantiles{};     // at kQuantileProbs
};

// Uniform-prior posterior over grid_phi from a log-likelihood callback;
// normalized with max-log subtraction, quantiles by linear interpolation of
// the discrete CDF.
GridPosterior grid_posterior(
    std::span<const double> x, std::span<const double> grid_phi,
    const std::function<double(std::span<const double>, double)>& loglik);

}  // namespace tvwhittle
