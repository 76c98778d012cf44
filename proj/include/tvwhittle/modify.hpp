#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "tvwhittle/spectral.hpp"

namespace tvwhittle {

struct TaperWindow {
  std::vector<double> weights;  // h(s/N) for s = 1..N
  double h2_sum = 0.0;          // H_N = sum_{j=0}^{N-1} h^2(j/N)
  bool rescale = false;
};

// Hanning taper h(u) = (1 - cos(2 pi u)) / 2.
TaperWindow hanning_window(int seg_len);

struct RescaledSegment {
  std::vector<double> values;
  double factor = 1.0;
  bool degenerate = false;  // zero raw or tapered variance; values left unscaled
};

// Scales the tapered segment so its empirical variance matches the raw
// segment's. Degenerate variances leave the tapered segment unchanged.
RescaledSegment rescale_tapered_segment(std::span<const double> raw,
                                        std::span<const double> tapered);

struct FittedAR {
  int order = 0;
  std::vector<double> coeffs;  // x_t = sum_j coeffs[j] x_{t-j} + e_t
  double sigma2 = 0.0;         // innovation variance estimate
};

// Burg fits of order 0..p_max; the order minimizing the Hannan-Quinn
// criterion log(sigma2_p) + 2 p log(log n)/n is returned.
FittedAR fit_ar_hq(std::span<const double> segment, int p_max);

// Residual periodogram of e_t = x_t - sum_j phi_j x_{t-j} (t = p+1..N,
// normalizer 2 pi (N-p)) divided by the squared transfer function.
std::vector<double> prewhiten_periodogram(std::span<const double> segment, const FittedAR& fitted,
                                          const FourierGrid& grid);

// DFT of the best-linear-predictor extrapolations of the fitted AR model
// beyond both segment boundaries, in the t = 1..T, e^{-i omega t} convention;
// the geometric tails are summed in closed form.
std::complex<double> predictive_dft_at(std::span<const double> segment, const FittedAR& fitted,
                                       double omega);
std::vector<std::complex<double>> predictive_dft(std::span<const double> segment,
                                                 const FittedAR& fitted, const FourierGrid& grid);

// Re[(J + Jhat) conj(J)] / (2 pi N); negative values are retained.
std::vector<double> complete_periodogram(std::span<const double> segment, const FittedAR& fitted,
                                         const FourierGrid& grid);
double complete_periodogram_at(std::span<const double> segment, const FittedAR& fitted,
                               double omega);

// Hybrid of boundary correction and tapering:
// Re[(J + Jhat) conj(J_h)] / (2 pi sum(h)), exactly unbiased under the true
// prediction filter.
std::vector<double> complete_periodogram_tapered(std::span<const double> segment,
                                                 const FittedAR& fitted, const FourierGrid& grid,
                                                 const TaperWindow& window);
double complete_periodogram_tapered_at(std::span<const double> segment, const FittedAR& fitted,
                                       double omega, const TaperWindow& window);

enum class ModScheme { none, taper, taper_rescaled, prewhiten, boundary_correct };

struct Modification {
  ModScheme scheme = ModScheme::none;
  bool bc_with_taper = true;  // hybrid variant of boundary_correct
  int p_max = 10;             // per-segment AR order cap for prewhiten/boundary_correct

  std::string label() const;
};

Modification parse_modification(const std::string& token);

// Ordinates of one segment under the chosen scheme, over the supplied grid
// (grid.t_origin must equal the segment length). Prediction/prewhitening
// filters are fitted on this segment by fit_ar_hq.
std::vector<double> apply_modification(const Modification& mod, std::span<const double> segment,
                                       const FourierGrid& grid);

// Single-frequency variant used by the moving periodogram.
double apply_modification_at(const Modification& mod, std::span<const double> segment,
                             double omega);

}  // namespace tvwhittle
