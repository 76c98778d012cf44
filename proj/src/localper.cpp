#include "tvwhittle/localper.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tvwhittle {

namespace {

double weight_norm(std::span<const double> weights, int seg_len) {
  if (weights.empty()) return static_cast<double>(seg_len);
  double h2 = 0.0;
  for (const double w : weights) h2 += w * w;
  if (!(h2 > 0.0)) throw std::invalid_argument("taper weights have zero energy");
  return h2;
}

std::vector<double> windowed_ordinates(std::span<const double> x, int start0, int seg_len,
                                       const FourierGrid& grid, std::span<const double> weights) {
  if (!weights.empty() && static_cast<int>(weights.size()) != seg_len)
    throw std::invalid_argument("taper weights length must equal the segment length");
  std::vector<double> seg(x.begin() + start0, x.begin() + start0 + seg_len);
  if (!weights.empty())
    for (int s = 0; s < seg_len; ++s) seg[s] *= weights[s];
  const std::vector<std::complex<double>> J = dft_batch(seg, grid);
  const double norm = 2.0 * M_PI * weight_norm(weights, seg_len);
  std::vector<double> out(grid.size());
  for (int k = 0; k < grid.size(); ++k) out[k] = std::norm(J[k]) / norm;
  return out;
}

double windowed_ordinate_at(std::span<const double> x, int start0, int seg_len, double omega,
                            std::span<const double> weights) {
  if (!weights.empty() && static_cast<int>(weights.size()) != seg_len)
    throw std::invalid_argument("taper weights length must equal the segment length");
  double re = 0.0, im = 0.0;
  for (int s = 1; s <= seg_len; ++s) {
    const double v = weights.empty() ? x[start0 + s - 1] : weights[s - 1] * x[start0 + s - 1];
    re += v * std::cos(omega * s);
    im -= v * std::sin(omega * s);
  }
  return (re * re + im * im) / (2.0 * M_PI * weight_norm(weights, seg_len));
}

}  // namespace

SegmentGeometry segment_geometry(int t_len, int seg_len, int step) {
  if (seg_len < 2 || seg_len > t_len || step < 1 || step > seg_len)
    throw std::invalid_argument("segment_geometry: need 1 <= S <= N <= T");
  if (seg_len % 2 != 0)
    throw std::invalid_argument(
        "segment_geometry: N must be even so that centers t_j = S(j-1)+N/2 are integral; "
        "trim or pad the segment length");
  if ((t_len - seg_len) % step != 0)
    throw std::invalid_argument(
        "segment_geometry: (T-N) must be divisible by S; trim the series to T = N + k*S");
  SegmentGeometry g;
  g.t_len = t_len;
  g.seg_len = seg_len;
  g.step = step;
  g.n_segments = (t_len - seg_len) / step + 1;
  g.centers.resize(g.n_segments);
  for (int j = 1; j <= g.n_segments; ++j) g.centers[j - 1] = step * (j - 1) + seg_len / 2;
  return g;
}

std::vector<double> local_periodogram(std::span<const double> x, int center, int seg_len,
                                      const FourierGrid& grid, std::span<const double> weights) {
  if (seg_len % 2 != 0)
    throw std::invalid_argument("local_periodogram: segment length must be even");
  const int start1 = center - seg_len / 2 + 1;  // 1-based first index
  if (start1 < 1 || start1 + seg_len - 1 > static_cast<int>(x.size()))
    throw std::out_of_range("local_periodogram: segment [" + std::to_string(start1) + ", " +
                            std::to_string(start1 + seg_len - 1) + "] outside the series");
  return windowed_ordinates(x, start1 - 1, seg_len, grid, weights);
}

BlockPeriodogram block_periodogram(std::span<const double> x, const SegmentGeometry& geometry,
                                   std::span<const double> weights) {
  if (geometry.t_len != static_cast<int>(x.size()))
    throw std::invalid_argument("block_periodogram: geometry built for a different length");
  BlockPeriodogram bp;
  bp.geometry = geometry;
  bp.grid = fourier_frequencies(geometry.seg_len);
  bp.ordinates.resize(geometry.n_segments);
  for (int j = 0; j < geometry.n_segments; ++j)
    bp.ordinates[j] = local_periodogram(x, geometry.centers[j], geometry.seg_len, bp.grid, weights);
  return bp;
}

MovingPeriodogram moving_periodogram(std::span<const double> x, int half_width,
                                     std::span<const double> weights) {
  const int t_len = static_cast<int>(x.size());
  const int m = half_width;
  if (m < 1 || t_len < 2 * m + 1)
    throw std::invalid_argument("moving_periodogram: need T >= 2m+1 with m >= 1");
  const int seg_len = 2 * m + 1;
  MovingPeriodogram mp;
  mp.half_width = m;
  mp.t_len = t_len;
  const int n = t_len - 2 * m;
  mp.ordinates.resize(n);
  mp.freq_index.resize(n);
  mp.frequencies.resize(n);
  for (int i = 0; i < n; ++i) {
    const int t = m + 1 + i;
    const int mod_t = 1 + ((t - 1) % m);
    const double omega = 2.0 * M_PI * mod_t / seg_len;
    mp.freq_index[i] = mod_t;
    mp.frequencies[i] = omega;
    mp.ordinates[i] = windowed_ordinate_at(x, t - m - 1, seg_len, omega, weights);
  }
  return mp;
}

namespace {
int floor_div2(int n) { return (n - (n < 0 ? 1 : 0)) / 2; }
}  // namespace

double preperiodogram(std::span<const double> x, int t, double omega) {
  const int t_len = static_cast<int>(x.size());
  if (t < 1 || t > t_len) throw std::invalid_argument("preperiodogram: t outside 1..T");
  double re = 0.0, im = 0.0;
  for (int k = -2 * t_len; k <= 2 * t_len; ++k) {
    // with u = t/T the index floor(uT + 0.5 +- k/2) is exactly t + floor((1 +- k)/2)
    const int a = t + floor_div2(k + 1);
    const int b = t + floor_div2(1 - k);
    if (a < 1 || a > t_len || b < 1 || b > t_len) continue;
    const double prod = x[a - 1] * x[b - 1];
    re += prod * std::cos(omega * k);
    im -= prod * std::sin(omega * k);
  }
  // the index pairs are symmetric in k, so the imaginary part cancels
  if (std::abs(im) > 1e-10 * (1.0 + std::abs(re)))
    throw std::runtime_error("preperiodogram: imaginary part failed to cancel");
  return re / (2.0 * M_PI);
}

}  // namespace tvwhittle
