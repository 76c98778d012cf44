#pragma once

#include <span>
#include <vector>

#include "tvwhittle/spectral.hpp"

namespace tvwhittle {

// Sliding-window geometry: segment j (1-based) covers time indices
// S(j-1)+1 .. S(j-1)+N and is centered at t_j = S(j-1) + N/2.
struct SegmentGeometry {
  int t_len = 0;
  int seg_len = 0;
  int step = 0;
  int n_segments = 0;
  std::vector<int> centers;  // 1-based t_j
};

SegmentGeometry segment_geometry(int t_len, int seg_len, int step);

// Local periodogram of the length-N window centered at t (1-based), over the
// supplied grid. Optional taper weights w_s (s = 1..N) switch the normalizer
// from 2*pi*N to 2*pi*sum(w^2).
std::vector<double> local_periodogram(std::span<const double> x, int center, int seg_len,
                                      const FourierGrid& grid,
                                      std::span<const double> weights = {});

struct BlockPeriodogram {
  SegmentGeometry geometry;
  FourierGrid grid;                            // built on the segment length
  std::vector<std::vector<double>> ordinates;  // M x K
};

BlockPeriodogram block_periodogram(std::span<const double> x, const SegmentGeometry& geometry,
                                   std::span<const double> weights = {});

// Moving periodogram of the dynamic Whittle likelihood: one ordinate per
// time point t = m+1..T-m, at the cycling frequency omega_{mod(t)} with
// mod(t) = 1 + ((t-1) mod m), over the window t-m..t+m of length N = 2m+1.
struct MovingPeriodogram {
  int half_width = 0;                // m
  int t_len = 0;
  std::vector<double> ordinates;     // entry i is time t = m+1+i
  std::vector<int> freq_index;       // mod(t) in 1..m
  std::vector<double> frequencies;   // 2*pi*mod(t)/(2m+1)

  int size() const { return static_cast<int>(ordinates.size()); }
  int time_of(int i) const { return half_width + 1 + i; }
};

MovingPeriodogram moving_periodogram(std::span<const double> x, int half_width,
                                     std::span<const double> weights = {});

// Preperiodogram at time t (1-based): lag products around floor(uT + 0.5)
// with u = t/T, summed over lags whose index pairs stay inside 1..T.
double preperiodogram(std::span<const double> x, int t, double omega);

}  // namespace tvwhittle
