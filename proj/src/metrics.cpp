#include "tvwhittle/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace tvwhittle {

EstimatePath make_estimate_path(int n_params, int n_times) {
  if (n_params < 1 || n_times < 1) throw std::invalid_argument("make_estimate_path: bad shape");
  EstimatePath path;
  path.n_params = n_params;
  path.n_times = n_times;
  path.values.assign(static_cast<std::size_t>(n_params) * n_times, 0.0);
  return path;
}

double rmse(const std::vector<EstimatePath>& estimates, const EstimatePath& truth) {
  if (estimates.empty()) throw std::invalid_argument("rmse: no replications");
  double total = 0.0;
  for (const EstimatePath& est : estimates) {
    if (est.n_params != truth.n_params || est.n_times != truth.n_times)
      throw std::invalid_argument("rmse: shape mismatch");
    for (std::size_t i = 0; i < est.values.size(); ++i) {
      const double diff = est.values[i] - truth.values[i];
      total += diff * diff;
    }
  }
  const double denom = static_cast<double>(estimates.size()) * truth.n_params * truth.n_times;
  return std::sqrt(total / denom);
}

double efficiency(double rmse_time, double rmse_approx) {
  if (!(rmse_approx > 0.0)) throw std::invalid_argument("efficiency: zero approximate RMSE");
  return rmse_time / rmse_approx;
}

QuantilePath make_quantile_path(int n_params, int n_times, int n_probs) {
  if (n_params < 1 || n_times < 1 || n_probs < 1)
    throw std::invalid_argument("make_quantile_path: bad shape");
  QuantilePath path;
  path.n_params = n_params;
  path.n_times = n_times;
  path.n_probs = n_probs;
  path.values.assign(static_cast<std::size_t>(n_params) * n_times * n_probs, 0.0);
  return path;
}

double perturbation(const std::vector<QuantilePath>& approx,
                    const std::vector<QuantilePath>& reference) {
  if (approx.empty() || approx.size() != reference.size())
    throw std::invalid_argument("perturbation: replication count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const QuantilePath& a = approx[i];
    const QuantilePath& b = reference[i];
    if (a.n_params != b.n_params || a.n_times != b.n_times || a.n_probs != b.n_probs)
      throw std::invalid_argument("perturbation: quantile grid mismatch");
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double diff = a.values[k] - b.values[k];
      total += diff * diff;
    }
  }
  const QuantilePath& first = approx.front();
  const double denom = static_cast<double>(approx.size()) * first.n_params * first.n_times *
                       first.n_probs;
  return std::sqrt(total / denom);
}

}  // namespace tvwhittle
