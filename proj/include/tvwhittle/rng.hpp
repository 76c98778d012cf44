#pragma once

#include <cstdint>
#include <random>

namespace tvwhittle {

// Seeded random stream. Distributions are constructed per call so the output
// sequence is a pure function of the engine state; replications use
// independent streams with seed = base_seed + replication_index.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }
  double chi_squared(double dof) {
    return std::chi_squared_distribution<double>(dof)(engine_);
  }
  // inv-gamma(shape, scale) with density ~ x^{-shape-1} exp(-scale/x).
  double inverse_gamma(double shape, double scale) {
    return 1.0 / std::gamma_distribution<double>(shape, 1.0 / scale)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tvwhittle
