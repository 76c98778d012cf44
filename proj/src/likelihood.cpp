#include "tvwhittle/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "tvwhittle/tvar.hpp"

namespace tvwhittle {

std::string family_label(Family family) {
  switch (family) {
    case Family::time_domain:
      return "time";
    case Family::whittle_stationary:
      return "stationary";
    case Family::block_whittle:
      return "bw";
    case Family::dynamic_whittle:
      return "dw";
  }
  return "?";
}

int PreparedData::n_entries() const {
  switch (family) {
    case Family::time_domain:
      return static_cast<int>(series.size());
    case Family::whittle_stationary:
      return static_cast<int>(stationary.ordinates.size());
    case Family::block_whittle:
      return geometry.n_segments * seg_grid.size();
    case Family::dynamic_whittle:
      return moving.size();
  }
  return 0;
}

int PreparedData::n_states() const {
  switch (family) {
    case Family::time_domain:
      return static_cast<int>(series.size());
    case Family::whittle_stationary:
      return 1;
    case Family::block_whittle:
      return geometry.n_segments;
    case Family::dynamic_whittle:
      return moving.size();
  }
  return 0;
}

std::vector<int> PreparedData::state_times() const {
  std::vector<int> times;
  switch (family) {
    case Family::time_domain:
      times.resize(series.size());
      for (std::size_t t = 0; t < series.size(); ++t) times[t] = static_cast<int>(t + 1);
      break;
    case Family::whittle_stationary:
      times = {1};
      break;
    case Family::block_whittle:
      times = geometry.centers;
      break;
    case Family::dynamic_whittle:
      times.resize(moving.size());
      for (int i = 0; i < moving.size(); ++i) times[i] = moving.time_of(i);
      break;
  }
  return times;
}

PreparedData prepare(std::span<const double> x, const LikelihoodSpec& spec) {
  if (x.size() < 2) throw std::invalid_argument("prepare: series too short");
  for (const double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("prepare: non-finite value in series");

  PreparedData data;
  data.family = spec.family;
  data.sv = spec.sv;
  data.series.assign(x.begin(), x.end());

  switch (spec.family) {
    case Family::time_domain:
      break;
    case Family::whittle_stationary: {
      data.stationary.grid = fourier_frequencies(static_cast<int>(x.size()));
      data.stationary.ordinates = apply_modification(spec.modification, x, data.stationary.grid);
      break;
    }
    case Family::block_whittle: {
      data.geometry = segment_geometry(static_cast<int>(x.size()), spec.seg_len, spec.step);
      data.seg_grid = fourier_frequencies(spec.seg_len);
      data.block_ordinates.resize(data.geometry.n_segments);
      for (int j = 0; j < data.geometry.n_segments; ++j) {
        const int start0 = data.geometry.centers[j] - spec.seg_len / 2;  // 0-based
        const std::span<const double> segment = x.subspan(start0, spec.seg_len);
        data.block_ordinates[j] = apply_modification(spec.modification, segment, data.seg_grid);
      }
      break;
    }
    case Family::dynamic_whittle: {
      const int m = spec.half_width;
      data.moving = moving_periodogram(x, m);
      if (spec.modification.scheme != ModScheme::none) {
        const int seg_len = 2 * m + 1;
        for (int i = 0; i < data.moving.size(); ++i) {
          const int t = data.moving.time_of(i);
          const std::span<const double> window = x.subspan(t - m - 1, seg_len);
          data.moving.ordinates[i] =
              apply_modification_at(spec.modification, window, data.moving.frequencies[i]);
        }
      }
      break;
    }
  }
  return data;
}

PreparedData make_block_prepared(const SegmentGeometry& geometry,
                                 std::vector<std::vector<double>> ordinates) {
  if (static_cast<int>(ordinates.size()) != geometry.n_segments)
    throw std::invalid_argument("make_block_prepared: ordinate rows != segment count");
  PreparedData data;
  data.family = Family::block_whittle;
  data.geometry = geometry;
  data.seg_grid = fourier_frequencies(geometry.seg_len);
  for (const auto& row : ordinates)
    if (static_cast<int>(row.size()) != data.seg_grid.size())
      throw std::invalid_argument("make_block_prepared: ordinate row length != grid size");
  data.block_ordinates = std::move(ordinates);
  return data;
}

double exp_model_logdens(std::span<const double> ordinates, std::span<const double> frequencies,
                         std::span<const double> phi, double sigma2) {
  if (ordinates.size() != frequencies.size())
    throw std::invalid_argument("exp_model_logdens: length mismatch");
  if (!(sigma2 > 0.0)) throw std::domain_error("exp_model_logdens: sigma2 must be > 0");
  const double log_scale = std::log(sigma2 / (2.0 * M_PI));
  const double inv_scale = 2.0 * M_PI / sigma2;
  double sum = 0.0;
  for (std::size_t k = 0; k < ordinates.size(); ++k) {
    const double tau = ar_transfer_sq(phi, frequencies[k]);
    sum -= log_scale - std::log(tau) + ordinates[k] * tau * inv_scale;
  }
  return sum;
}

double block_whittle_loglik(const PreparedData& data, const std::vector<std::vector<double>>& phi,
                            std::span<const double> sigma2) {
  if (data.family != Family::block_whittle)
    throw std::invalid_argument("block_whittle_loglik: data prepared for a different family");
  const int m_segments = data.geometry.n_segments;
  if (static_cast<int>(phi.size()) != m_segments ||
      static_cast<int>(sigma2.size()) != m_segments)
    throw std::invalid_argument("block_whittle_loglik: path length != segment count");
  double total = 0.0;
  for (int j = 0; j < m_segments; ++j) {
    if (!is_stable(phi[j]))
      throw std::domain_error("block_whittle_loglik: unstable coefficients in path");
    total += exp_model_logdens(data.block_ordinates[j], data.seg_grid.frequencies, phi[j],
                               sigma2[j]);
  }
  return total;
}

double dynamic_whittle_loglik(const PreparedData& data,
                              const std::vector<std::vector<double>>& phi,
                              std::span<const double> sigma2) {
  if (data.family != Family::dynamic_whittle)
    throw std::invalid_argument("dynamic_whittle_loglik: data prepared for a different family");
  const int n = data.moving.size();
  if (static_cast<int>(phi.size()) != n || static_cast<int>(sigma2.size()) != n)
    throw std::invalid_argument("dynamic_whittle_loglik: path length != entry count");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!is_stable(phi[i]))
      throw std::domain_error("dynamic_whittle_loglik: unstable coefficients in path");
    const double ordinate = data.moving.ordinates[i];
    const double frequency = data.moving.frequencies[i];
    total += exp_model_logdens({&ordinate, 1}, {&frequency, 1}, phi[i], sigma2[i]);
  }
  return total;
}

double time_domain_tvar_loglik(std::span<const double> x,
                               const std::vector<std::vector<double>>& phi,
                               std::span<const double> sigma2, int order) {
  const int t_len = static_cast<int>(x.size());
  if (static_cast<int>(phi.size()) != t_len || static_cast<int>(sigma2.size()) != t_len)
    throw std::invalid_argument("time_domain_tvar_loglik: path length != series length");
  if (order < 0 || order >= t_len)
    throw std::invalid_argument("time_domain_tvar_loglik: invalid order");
  double total = 0.0;
  for (int t = order; t < t_len; ++t) {
    if (!(sigma2[t] > 0.0)) throw std::domain_error("time_domain_tvar_loglik: sigma2 must be > 0");
    if (!is_stable(phi[t]))
      throw std::domain_error("time_domain_tvar_loglik: unstable coefficients in path");
    double mean = 0.0;
    for (int j = 0; j < order; ++j) mean += phi[t][j] * x[t - 1 - j];
    const double resid = x[t] - mean;
    total += -0.5 * std::log(2.0 * M_PI * sigma2[t]) - 0.5 * resid * resid / sigma2[t];
  }
  return total;
}

}  // namespace tvwhittle
