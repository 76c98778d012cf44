#include "tvwhittle/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tvwhittle/csv.hpp"
#include "tvwhittle/metrics.hpp"
#include "tvwhittle/modify.hpp"
#include "tvwhittle/tvar.hpp"

namespace tvwhittle::harness {

namespace {

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::vector<double> simulate_stationary_ar1(double phi, int t_len, RngStream& rng) {
  std::vector<double> x(t_len);
  x[0] = rng.normal(0.0, std::sqrt(1.0 / (1.0 - phi * phi)));
  for (int t = 1; t < t_len; ++t) x[t] = phi * x[t - 1] + rng.normal();
  return x;
}

void write_config_common(std::ofstream& out, const RunConfig& cfg) {
  out << "command=" << cfg.command << "\n";
  out << "seed=" << cfg.seed << "\n";
  out << "out_dir=" << cfg.out_dir << "\n";
  out << "threads=" << cfg.threads << "\n";
}

void write_mcmc_and_priors(std::ofstream& out, const RunConfig& cfg, int order, bool sv) {
  const GibbsConfig gc{cfg.n_iter, cfg.burn_in, cfg.thin, cfg.n_particles, cfg.seed,
                       cfg.scale_q_prior_by_step};
  out << "mcmc.n_iter=" << cfg.n_iter << "\n";
  out << "mcmc.burn_in=" << cfg.burn_in << "\n";
  out << "mcmc.thin=" << cfg.thin << "\n";
  out << "mcmc.n_particles=" << cfg.n_particles << "\n";
  out << "mcmc.stored_draws=" << gc.n_stored() << "\n";
  out << "mcmc.scale_q_prior_by_step=" << (cfg.scale_q_prior_by_step ? 1 : 0) << "\n";
  const Priors priors = build_priors(cfg, order, sv);
  out << "prior.order=" << order << "\n";
  out << "prior.q_dof=" << format_double(priors.q_dof) << "\n";
  out << "prior.q_scale_diag=" << format_double(priors.q_scale(0, 0)) << "\n";
  out << "prior.sigma2_shape=" << format_double(priors.sigma2_shape) << "\n";
  out << "prior.sigma2_scale=" << format_double(priors.sigma2_scale) << "\n";
  out << "prior.init_mean=" << format_double(priors.init_mean[0]) << "\n";
  out << "prior.init_cov_diag=" << format_double(priors.init_cov(0, 0)) << "\n";
  if (sv) {
    out << "prior.zeta_shape=" << format_double(priors.zeta_shape) << "\n";
    out << "prior.zeta_scale=" << format_double(priors.zeta_scale) << "\n";
  }
}

struct ValidRange {
  int lo = 1;
  int hi = 1;
};

ValidRange method_valid_range(const LikelihoodSpec& spec, int t_len) {
  switch (spec.family) {
    case Family::time_domain:
    case Family::whittle_stationary:
      return {1, t_len};
    case Family::block_whittle: {
      const SegmentGeometry g = segment_geometry(t_len, spec.seg_len, spec.step);
      return {g.centers.front(), g.centers.back()};
    }
    case Family::dynamic_whittle:
      return {spec.half_width + 1, t_len - spec.half_width};
  }
  return {1, t_len};
}

int experiment_order(int experiment_id) {
  switch (experiment_id) {
    case 1:
      return 2;
    case 2:
      return 3;
    case 3:
      return 2;
  }
  throw std::invalid_argument("experiment id must be 1, 2 or 3");
}

TvarPath experiment_truth(int experiment_id, int t_len) {
  switch (experiment_id) {
    case 1:
      return dgp_experiment1(t_len);
    case 2:
      return dgp_experiment2(t_len);
    case 3:
      return dgp_experiment3(t_len);
  }
  throw std::invalid_argument("experiment id must be 1, 2 or 3");
}

// Posterior summaries of one Gibbs run, organized per parameter.
struct MethodSummary {
  // quantiles over time, interpolated to t = 1..t_len
  // [param][t][prob], prob order = kQuantileProbs
  std::vector<std::vector<std::array<double, 7>>> quantiles;
  std::vector<std::vector<double>> median;  // [param][t]
};

MethodSummary summarize_phi_draws(const PosteriorDraws& draws, int t_len) {
  const int order = draws.order;
  const int n_states = draws.n_states;
  const int n_draws = draws.size();
  // flat buffer: [param][state][draw]
  std::vector<double> buf(static_cast<std::size_t>(order) * n_states * n_draws);
  std::vector<double> phi(order);
  for (int d = 0; d < n_draws; ++d) {
    const Eigen::MatrixXd& path = draws.theta_path[d];
    for (int j = 0; j < n_states; ++j) {
      theta_to_phi_buf(path.col(j).data(), order, phi.data());
      for (int a = 0; a < order; ++a)
        buf[(static_cast<std::size_t>(a) * n_states + j) * n_draws + d] = phi[a];
    }
  }
  const std::vector<double> probs(kQuantileProbs.begin(), kQuantileProbs.end());
  MethodSummary summary;
  summary.quantiles.assign(order, {});
  summary.median.assign(order, {});
  for (int a = 0; a < order; ++a) {
    // per-state quantile paths, then piecewise-constant interpolation in time
    std::vector<std::vector<double>> per_prob(7, std::vector<double>(n_states));
    for (int j = 0; j < n_states; ++j) {
      const std::span<const double> slice(
          &buf[(static_cast<std::size_t>(a) * n_states + j) * n_draws], n_draws);
      const std::vector<double> q = posterior_quantiles(slice, probs);
      for (int r = 0; r < 7; ++r) per_prob[r][j] = q[r];
    }
    std::vector<std::vector<double>> per_prob_t(7);
    for (int r = 0; r < 7; ++r)
      per_prob_t[r] = interpolate_path(per_prob[r], draws.state_times, t_len);
    summary.quantiles[a].resize(t_len);
    summary.median[a].resize(t_len);
    for (int t = 0; t < t_len; ++t) {
      for (int r = 0; r < 7; ++r) summary.quantiles[a][t][r] = per_prob_t[r][t];
      summary.median[a][t] = per_prob_t[3][t];
    }
  }
  return summary;
}

}  // namespace

MethodSpec parse_method(const std::string& token, const RunConfig& cfg) {
  MethodSpec method;
  const std::vector<std::string> parts = split(token, ':');
  if (parts.empty()) throw std::invalid_argument("empty method token");
  const std::string& fam = parts[0];
  std::string mod = "none";
  int seg_len = cfg.seg_len, step = cfg.step, half_width = cfg.half_width;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto pos = parts[i].find('=');
    if (pos == std::string::npos)
      throw std::invalid_argument("method token field '" + parts[i] + "' is not key=value");
    const std::string key = parts[i].substr(0, pos);
    const std::string value = parts[i].substr(pos + 1);
    if (key == "mod")
      mod = value;
    else if (key == "N")
      seg_len = std::stoi(value);
    else if (key == "S")
      step = std::stoi(value);
    else if (key == "m")
      half_width = std::stoi(value);
    else
      throw std::invalid_argument("unknown method key '" + key + "'");
  }
  if (fam == "time") {
    method.spec.family = Family::time_domain;
    method.label = "time";
    return method;
  }
  method.spec.modification = parse_modification(mod);
  if (fam == "dw") {
    method.spec.family = Family::dynamic_whittle;
    method.spec.half_width = half_width;
    method.label = "dw-m" + std::to_string(half_width) + "-" + mod;
  } else if (fam == "bw") {
    method.spec.family = Family::block_whittle;
    method.spec.seg_len = seg_len;
    method.spec.step = step;
    method.label = "bw-N" + std::to_string(seg_len) + "-S" + std::to_string(step) + "-" + mod;
  } else if (fam == "stationary") {
    method.spec.family = Family::whittle_stationary;
    method.label = "stationary-" + mod;
  } else {
    throw std::invalid_argument("unknown family '" + fam + "'");
  }
  return method;
}

std::vector<MethodSpec> experiment_methods(const RunConfig& cfg) {
  std::vector<MethodSpec> methods;
  if (!cfg.methods.empty()) {
    for (const std::string& token : split(cfg.methods, ','))
      if (!token.empty() && token != "time") methods.push_back(parse_method(token, cfg));
    return methods;
  }
  const std::vector<std::string> mods = {"none", "taper", "prewhiten", "bc"};
  for (const int m : {15, 30})
    for (const std::string& mod : mods)
      methods.push_back(parse_method("dw:m=" + std::to_string(m) + ":mod=" + mod, cfg));
  for (const auto& [n, s] : std::vector<std::pair<int, int>>{{30, 15}, {60, 30}})
    for (const std::string& mod : mods)
      methods.push_back(
          parse_method("bw:N=" + std::to_string(n) + ":S=" + std::to_string(s) + ":mod=" + mod,
                       cfg));
  return methods;
}

Priors build_priors(const RunConfig& cfg, int order, bool sv) {
  Priors priors = Priors::defaults(order, sv);
  priors.q_dof = cfg.q_dof;
  priors.q_scale = cfg.q_scale_factor * (cfg.q_dof - order - 1.0) *
                   Eigen::MatrixXd::Identity(order, order);
  priors.sigma2_shape = cfg.sigma2_shape;
  priors.sigma2_scale = cfg.sigma2_scale;
  const int d = order + (sv ? 1 : 0);
  priors.init_mean = Eigen::VectorXd::Zero(d);
  priors.init_cov = cfg.init_cov_scale * Eigen::MatrixXd::Identity(d, d);
  priors.zeta_shape = cfg.zeta_shape;
  priors.zeta_scale = cfg.zeta_scale;
  return priors;
}

const GridCell& GridStudyResult::cell(double phi_true, int t_len) const {
  for (const GridCell& c : cells)
    if (c.t_len == t_len && std::abs(c.phi_true - phi_true) < 1e-12) return c;
  throw std::out_of_range("grid cell not found");
}

GridStudyResult run_grid_ar1(const RunConfig& cfg) {
  for (const double phi : cfg.phi_list)
    if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("grid-ar1: |phi| must be < 1");
  if (cfg.n_rep < 1 || cfg.grid_points < 2) throw std::invalid_argument("grid-ar1: bad config");
  ensure_dir(cfg.out_dir);
  {
    std::ofstream echo(cfg.out_dir + "/config_echo.txt");
    write_config_common(echo, cfg);
    echo << "n_rep=" << cfg.n_rep << "\n";
    echo << "grid_points=" << cfg.grid_points << "\n";
    for (const double phi : cfg.phi_list) echo << "phi=" << format_double(phi) << "\n";
    for (const int t : cfg.t_list) echo << "T=" << t << "\n";
  }

  std::vector<double> grid(cfg.grid_points);
  for (int i = 0; i < cfg.grid_points; ++i)
    grid[i] = -0.999 + 1.998 * static_cast<double>(i) / (cfg.grid_points - 1);

  CsvWriter summary(cfg.out_dir + "/summary.csv",
                    {"phi_true", "T", "efficiency", "perturbation", "n_rep"});
  CsvWriter curves(cfg.out_dir + "/posterior_curves.csv",
                   {"phi_true", "T", "rep", "phi", "posterior_time", "posterior_whittle"});

  GridStudyResult result;
  int cell_index = 0;
  for (const int t_len : cfg.t_list) {
    const FourierGrid fgrid = fourier_frequencies(t_len);
    std::vector<double> cos_omega(fgrid.size());
    for (int k = 0; k < fgrid.size(); ++k) cos_omega[k] = std::cos(fgrid.frequencies[k]);

    for (const double phi_true : cfg.phi_list) {
      std::vector<EstimatePath> est_time, est_whittle;
      std::vector<QuantilePath> q_time, q_whittle;
      EstimatePath truth = make_estimate_path(1, 1);
      truth.at(0, 0) = phi_true;

      for (int rep = 0; rep < cfg.n_rep; ++rep) {
        RngStream rng(cfg.seed + 1000000ULL * static_cast<std::uint64_t>(cell_index + 1) + rep);
        const std::vector<double> x = simulate_stationary_ar1(phi_true, t_len, rng);
        const Periodogram pg = periodogram(x, fgrid);

        const auto time_ll = [](std::span<const double> data, double phi) {
          return exact_ar1_loglik(data, phi, 1.0);
        };
        // Whittle likelihood over the full symmetric Fourier set (zero and pi
        // removed); equals twice the positive-interior-grid sum.
        const auto whittle_ll = [&pg, &cos_omega](std::span<const double>, double phi) {
          double sum = 0.0;
          for (std::size_t k = 0; k < pg.ordinates.size(); ++k) {
            const double tau = 1.0 + phi * phi - 2.0 * phi * cos_omega[k];
            const double f = 1.0 / (2.0 * M_PI * tau);
            sum += std::log(f) + pg.ordinates[k] / f;
          }
          return -sum;
        };

        const GridPosterior post_time = grid_posterior(x, grid, time_ll);
        const GridPosterior post_whittle = grid_posterior(x, grid, whittle_ll);

        // uniform prior: the posterior mode on the grid is the grid MLE
        const auto mode_of = [&grid](const GridPosterior& post) {
          const auto it = std::max_element(post.weights.begin(), post.weights.end());
          return grid[static_cast<std::size_t>(it - post.weights.begin())];
        };
        EstimatePath et = make_estimate_path(1, 1);
        et.at(0, 0) = mode_of(post_time);
        est_time.push_back(et);
        EstimatePath ew = make_estimate_path(1, 1);
        ew.at(0, 0) = mode_of(post_whittle);
        est_whittle.push_back(ew);

        QuantilePath qt = make_quantile_path(1, 1, 7);
        QuantilePath qw = make_quantile_path(1, 1, 7);
        for (int r = 0; r < 7; ++r) {
          qt.at(0, 0, r) = post_time.quantiles[r];
          qw.at(0, 0, r) = post_whittle.quantiles[r];
        }
        q_time.push_back(qt);
        q_whittle.push_back(qw);

        if (rep < cfg.n_curves) {
          for (int i = 0; i < cfg.grid_points; ++i) {
            curves.field(phi_true).field(t_len).field(rep);
            curves.field(grid[i]).field(post_time.weights[i]).field(post_whittle.weights[i]);
            curves.end_row();
          }
        }
      }

      GridCell cell;
      cell.phi_true = phi_true;
      cell.t_len = t_len;
      cell.n_rep = cfg.n_rep;
      const double rmse_time = rmse(est_time, truth);
      const double rmse_whittle = rmse(est_whittle, truth);
      cell.efficiency = efficiency(rmse_time, rmse_whittle);
      cell.perturbation = perturbation(q_whittle, q_time);
      result.cells.push_back(cell);

      summary.field(phi_true).field(t_len).field(cell.efficiency).field(cell.perturbation);
      summary.field(cfg.n_rep);
      summary.end_row();
      summary.flush();
      ++cell_index;
    }
  }
  return result;
}

const MethodResult& ExperimentResult::method(const std::string& label) const {
  for (const MethodResult& m : methods)
    if (m.label == label) return m;
  throw std::out_of_range("method '" + label + "' not found in experiment results");
}

void write_experiment_echo(const RunConfig& cfg, const std::string& path) {
  const int order = experiment_order(cfg.experiment_id);
  std::ofstream echo(path);
  if (!echo) throw std::runtime_error("cannot open " + path);
  write_config_common(echo, cfg);
  echo << "experiment=" << cfg.experiment_id << "\n";
  echo << "T=" << cfg.t_len << "\n";
  echo << "n_rep=" << cfg.n_rep << "\n";
  write_mcmc_and_priors(echo, cfg, order, false);
  for (const MethodSpec& method : experiment_methods(cfg)) {
    const std::string prefix = "method." + method.label + ".";
    echo << prefix << "family=" << family_label(method.spec.family) << "\n";
    echo << prefix << "modification=" << method.spec.modification.label() << "\n";
    if (method.spec.family == Family::block_whittle) {
      const SegmentGeometry g = segment_geometry(cfg.t_len, method.spec.seg_len, method.spec.step);
      echo << prefix << "seg_len=" << method.spec.seg_len << "\n";
      echo << prefix << "step=" << method.spec.step << "\n";
      echo << prefix << "n_segments=" << g.n_segments << "\n";
    } else if (method.spec.family == Family::dynamic_whittle) {
      echo << prefix << "half_width=" << method.spec.half_width << "\n";
      echo << prefix << "n_entries=" << cfg.t_len - 2 * method.spec.half_width << "\n";
    }
    const ValidRange range = method_valid_range(method.spec, cfg.t_len);
    echo << prefix << "range_lo=" << range.lo << "\n";
    echo << prefix << "range_hi=" << range.hi << "\n";
  }
}

namespace {

struct RepMethodOutput {
  MethodSummary summary;
};

struct RepOutput {
  std::vector<RepMethodOutput> per_method;  // index 0 = time-domain baseline
};

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg) {
  const int order = experiment_order(cfg.experiment_id);
  const TvarPath truth_path = experiment_truth(cfg.experiment_id, cfg.t_len);
  const int t_len = cfg.t_len;
  if (cfg.n_rep < 1) throw std::invalid_argument("experiment: n_rep must be >= 1");

  std::vector<MethodSpec> methods = experiment_methods(cfg);
  MethodSpec time_method;
  time_method.spec.family = Family::time_domain;
  time_method.label = "time";
  std::vector<MethodSpec> all_methods;
  all_methods.push_back(time_method);
  for (const MethodSpec& m : methods) all_methods.push_back(m);

  ValidRange common{1, t_len};
  for (const MethodSpec& m : all_methods) {
    const ValidRange r = method_valid_range(m.spec, t_len);
    common.lo = std::max(common.lo, r.lo);
    common.hi = std::min(common.hi, r.hi);
  }
  if (common.lo > common.hi) throw std::invalid_argument("experiment: empty common time range");
  const int n_common = common.hi - common.lo + 1;

  ensure_dir(cfg.out_dir);
  write_experiment_echo(cfg, cfg.out_dir + "/config_echo.txt");
  {
    CsvWriter truth_csv(cfg.out_dir + "/truth.csv", {"param", "t", "value"});
    for (int a = 0; a < order; ++a)
      for (int t = 1; t <= t_len; ++t) {
        truth_csv.field(a + 1).field(t).field(truth_path.phi[t - 1][a]);
        truth_csv.end_row();
      }
  }
  CsvWriter medians_csv(cfg.out_dir + "/medians.csv", {"rep", "method", "param", "t", "median"});
  CsvWriter quantiles_csv(cfg.out_dir + "/quantiles.csv",
                          {"rep", "method", "param", "t", "q025", "q10", "q25", "q50", "q75",
                           "q90", "q975"});

  const GibbsConfig gibbs_base{cfg.n_iter,      cfg.burn_in, cfg.thin,
                               cfg.n_particles, 0,           cfg.scale_q_prior_by_step};
  gibbs_base.validate();
  const Priors priors = build_priors(cfg, order, false);

  const auto compute_rep = [&](int rep) {
    RngStream data_rng(cfg.seed + static_cast<std::uint64_t>(rep));
    const std::vector<double> x = simulate_tvar(truth_path, data_rng);
    RepOutput out;
    out.per_method.resize(all_methods.size());
    for (std::size_t mi = 0; mi < all_methods.size(); ++mi) {
      GibbsConfig gc = gibbs_base;
      gc.seed = cfg.seed + 1000003ULL * (mi + 1) + static_cast<std::uint64_t>(rep);
      const PosteriorDraws draws = gibbs_run(x, all_methods[mi].spec, order, priors, gc);
      out.per_method[mi].summary = summarize_phi_draws(draws, t_len);
    }
    return out;
  };

  const auto write_rep = [&](int rep, const RepOutput& out) {
    for (std::size_t mi = 0; mi < all_methods.size(); ++mi) {
      const MethodSummary& s = out.per_method[mi].summary;
      for (int a = 0; a < order; ++a)
        for (int t = 1; t <= t_len; t += cfg.time_stride) {
          medians_csv.field(rep).field(all_methods[mi].label).field(a + 1).field(t);
          medians_csv.field(s.median[a][t - 1]);
          medians_csv.end_row();
          quantiles_csv.field(rep).field(all_methods[mi].label).field(a + 1).field(t);
          for (int r = 0; r < 7; ++r) quantiles_csv.field(s.quantiles[a][t - 1][r]);
          quantiles_csv.end_row();
        }
    }
    medians_csv.flush();
    quantiles_csv.flush();
  };

  std::vector<RepOutput> outputs(cfg.n_rep);
  if (cfg.threads <= 1) {
    for (int rep = 0; rep < cfg.n_rep; ++rep) {
      outputs[rep] = compute_rep(rep);
      write_rep(rep, outputs[rep]);
    }
  } else {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<bool> done(cfg.n_rep, false);
    std::atomic<int> next{0};
    std::exception_ptr error;
    const int n_workers = std::min(cfg.threads, cfg.n_rep);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        try {
          for (int rep = next.fetch_add(1); rep < cfg.n_rep; rep = next.fetch_add(1)) {
            RepOutput out = compute_rep(rep);
            std::lock_guard<std::mutex> lock(mu);
            outputs[rep] = std::move(out);
            done[rep] = true;
            cv.notify_all();
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          cv.notify_all();
        }
      });
    }
    // single writer keeps the files in replication order
    {
      std::unique_lock<std::mutex> lock(mu);
      for (int rep = 0; rep < cfg.n_rep; ++rep) {
        cv.wait(lock, [&]() { return done[rep] || error; });
        if (error) break;
        lock.unlock();
        write_rep(rep, outputs[rep]);
        lock.lock();
      }
    }
    for (std::thread& w : workers) w.join();
    if (error) std::rethrow_exception(error);
  }

  // truth and metric assembly over the common range
  EstimatePath truth = make_estimate_path(order, n_common);
  for (int a = 0; a < order; ++a)
    for (int t = 0; t < n_common; ++t)
      truth.at(a, t) = truth_path.phi[common.lo - 1 + t][a];

  const auto restrict_est = [&](const MethodSummary& s) {
    EstimatePath est = make_estimate_path(order, n_common);
    for (int a = 0; a < order; ++a)
      for (int t = 0; t < n_common; ++t) est.at(a, t) = s.median[a][common.lo - 1 + t];
    return est;
  };
  const auto restrict_quant = [&](const MethodSummary& s) {
    QuantilePath q = make_quantile_path(order, n_common, 7);
    for (int a = 0; a < order; ++a)
      for (int t = 0; t < n_common; ++t)
        for (int r = 0; r < 7; ++r) q.at(a, t, r) = s.quantiles[a][common.lo - 1 + t][r];
    return q;
  };

  std::vector<EstimatePath> time_est;
  std::vector<QuantilePath> time_quant;
  for (int rep = 0; rep < cfg.n_rep; ++rep) {
    time_est.push_back(restrict_est(outputs[rep].per_method[0].summary));
    time_quant.push_back(restrict_quant(outputs[rep].per_method[0].summary));
  }
  ExperimentResult result;
  result.range_lo = common.lo;
  result.range_hi = common.hi;
  result.rmse_time = rmse(time_est, truth);

  CsvWriter summary_csv(cfg.out_dir + "/summary.csv",
                        {"method", "family", "modification", "n_rep", "rmse", "rmse_time",
                         "efficiency", "perturbation"});
  for (std::size_t mi = 1; mi < all_methods.size(); ++mi) {
    std::vector<EstimatePath> est;
    std::vector<QuantilePath> quant;
    for (int rep = 0; rep < cfg.n_rep; ++rep) {
      est.push_back(restrict_est(outputs[rep].per_method[mi].summary));
      quant.push_back(restrict_quant(outputs[rep].per_method[mi].summary));
    }
    MethodResult mr;
    mr.label = all_methods[mi].label;
    mr.rmse_method = rmse(est, truth);
    mr.rmse_time = result.rmse_time;
    mr.efficiency = efficiency(result.rmse_time, mr.rmse_method);
    mr.perturbation = perturbation(quant, time_quant);
    result.methods.push_back(mr);

    summary_csv.field(mr.label).field(family_label(all_methods[mi].spec.family));
    summary_csv.field(all_methods[mi].spec.modification.label()).field(cfg.n_rep);
    summary_csv.field(mr.rmse_method).field(mr.rmse_time).field(mr.efficiency);
    summary_csv.field(mr.perturbation);
    summary_csv.end_row();
  }
  return result;
}

namespace {

std::vector<double> load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.empty() || fields.size() > 2)
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": expected 1 or 2 columns, got " + std::to_string(fields.size()));
    const std::string& value_field = fields.back();
    if (line_number == 1) {
      // optional header
      try {
        values.push_back(parse_double(value_field, line_number));
      } catch (const std::runtime_error&) {
        continue;
      }
    } else {
      values.push_back(parse_double(value_field, line_number));
    }
  }
  if (values.size() < 3) throw std::runtime_error(path + ": fewer than 3 observations");
  return values;
}

Family parse_family(const std::string& token) {
  if (token == "dw" || token == "dynamic") return Family::dynamic_whittle;
  if (token == "bw" || token == "block") return Family::block_whittle;
  if (token == "time") return Family::time_domain;
  if (token == "stationary") return Family::whittle_stationary;
  throw std::invalid_argument("unknown family '" + token + "'");
}

}  // namespace

FitResult run_fit(const RunConfig& cfg) {
  std::vector<double> x = load_series_csv(cfg.input_csv);
  if (cfg.difference == "first") {
    std::vector<double> diff(x.size() - 1);
    for (std::size_t t = 0; t + 1 < x.size(); ++t) diff[t] = x[t + 1] - x[t];
    x = std::move(diff);
  } else if (cfg.difference != "none") {
    throw std::invalid_argument("difference must be 'none' or 'first'");
  }
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;
  const int t_len = static_cast<int>(x.size());

  LikelihoodSpec spec;
  spec.family = parse_family(cfg.family);
  spec.modification = parse_modification(cfg.modification);
  spec.seg_len = cfg.seg_len;
  spec.step = cfg.step;
  spec.half_width = cfg.half_width;
  spec.sv = cfg.sv;
  const int order = cfg.ar_order;

  ensure_dir(cfg.out_dir);
  {
    std::ofstream echo(cfg.out_dir + "/config_echo.txt");
    write_config_common(echo, cfg);
    echo << "input_csv=" << cfg.input_csv << "\n";
    echo << "difference=" << cfg.difference << "\n";
    echo << "subtracted_mean=" << format_double(mean) << "\n";
    echo << "T=" << t_len << "\n";
    echo << "family=" << family_label(spec.family) << "\n";
    echo << "modification=" << spec.modification.label() << "\n";
    echo << "sv=" << (cfg.sv ? 1 : 0) << "\n";
    if (spec.family == Family::block_whittle) {
      echo << "seg_len=" << cfg.seg_len << "\n";
      echo << "step=" << cfg.step << "\n";
    } else if (spec.family == Family::dynamic_whittle) {
      echo << "half_width=" << cfg.half_width << "\n";
    }
    write_mcmc_and_priors(echo, cfg, order, cfg.sv);
  }

  const Priors priors = build_priors(cfg, order, cfg.sv);
  const GibbsConfig gc{cfg.n_iter,      cfg.burn_in, cfg.thin,
                       cfg.n_particles, cfg.seed,    cfg.scale_q_prior_by_step};
  const PosteriorDraws draws = gibbs_run(x, spec, order, priors, gc);
  const int n_draws = draws.size();
  const int n_states = draws.n_states;

  const MethodSummary phi_summary = summarize_phi_draws(draws, t_len);
  const std::vector<double> probs(kQuantileProbs.begin(), kQuantileProbs.end());

  // sigma2 quantile paths: per-state under SV, constant otherwise
  std::vector<std::array<double, 7>> sigma2_q(t_len);
  if (cfg.sv) {
    std::vector<std::vector<double>> per_prob(7, std::vector<double>(n_states));
    std::vector<double> slice(n_draws);
    for (int j = 0; j < n_states; ++j) {
      for (int d = 0; d < n_draws; ++d) slice[d] = draws.theta_path[d](order, j);
      const std::vector<double> q = posterior_quantiles(slice, probs);
      for (int r = 0; r < 7; ++r) per_prob[r][j] = std::exp(q[r]);
    }
    for (int r = 0; r < 7; ++r) {
      const std::vector<double> path = interpolate_path(per_prob[r], draws.state_times, t_len);
      for (int t = 0; t < t_len; ++t) sigma2_q[t][r] = path[t];
    }
  } else {
    const std::vector<double> q = posterior_quantiles(draws.sigma2_draw, probs);
    for (int t = 0; t < t_len; ++t)
      for (int r = 0; r < 7; ++r) sigma2_q[t][r] = q[r];
  }

  {
    CsvWriter pq(cfg.out_dir + "/path_quantiles.csv",
                 {"param", "t", "q025", "q10", "q25", "q50", "q75", "q90", "q975"});
    for (int a = 0; a < order; ++a)
      for (int t = 1; t <= t_len; ++t) {
        pq.field("phi" + std::to_string(a + 1)).field(t);
        for (int r = 0; r < 7; ++r) pq.field(phi_summary.quantiles[a][t - 1][r]);
        pq.end_row();
      }
    for (int t = 1; t <= t_len; ++t) {
      pq.field("sigma2").field(t);
      for (int r = 0; r < 7; ++r) pq.field(sigma2_q[t - 1][r]);
      pq.end_row();
    }
  }

  // posterior median log-spectrogram and log squared transfer function
  {
    std::vector<int> state_of_time(t_len);
    {
      std::vector<double> idx(n_states);
      for (int j = 0; j < n_states; ++j) idx[j] = j;
      const std::vector<double> path = interpolate_path(idx, draws.state_times, t_len);
      for (int t = 0; t < t_len; ++t) state_of_time[t] = static_cast<int>(path[t]);
    }
    std::vector<double> omegas(cfg.spec_freqs);
    for (int l = 0; l < cfg.spec_freqs; ++l)
      omegas[l] = M_PI * (l + 1) / static_cast<double>(cfg.spec_freqs + 1);

    CsvWriter spec_csv(cfg.out_dir + "/spectrogram.csv", {"t", "omega", "log_f_median"});
    CsvWriter trans_csv(cfg.out_dir + "/transfer.csv", {"t", "omega", "log_transfer_sq_median"});
    std::vector<double> phi(order);
    std::vector<std::vector<double>> logf(cfg.spec_freqs, std::vector<double>(n_draws));
    std::vector<std::vector<double>> logtau(cfg.spec_freqs, std::vector<double>(n_draws));
    for (int t = 1; t <= t_len; t += cfg.time_stride) {
      const int j = state_of_time[t - 1];
      for (int d = 0; d < n_draws; ++d) {
        theta_to_phi_buf(draws.theta_path[d].col(j).data(), order, phi.data());
        const double sigma2 =
            cfg.sv ? std::exp(draws.theta_path[d](order, j)) : draws.sigma2_draw[d];
        for (int l = 0; l < cfg.spec_freqs; ++l) {
          const double tau = ar_transfer_sq(phi, omegas[l]);
          logtau[l][d] = std::log(tau);
          logf[l][d] = std::log(sigma2 / (2.0 * M_PI)) - logtau[l][d];
        }
      }
      for (int l = 0; l < cfg.spec_freqs; ++l) {
        auto median_of = [](std::vector<double>& v) {
          const std::size_t mid = v.size() / 2;
          std::nth_element(v.begin(), v.begin() + mid, v.end());
          double hi = v[mid];
          if (v.size() % 2 == 0) {
            const double lo = *std::max_element(v.begin(), v.begin() + mid);
            return 0.5 * (lo + hi);
          }
          return hi;
        };
        spec_csv.field(t).field(omegas[l]).field(median_of(logf[l]));
        spec_csv.end_row();
        trans_csv.field(t).field(omegas[l]).field(median_of(logtau[l]));
        trans_csv.end_row();
      }
    }
  }

  FitResult result;
  result.t_len = t_len;
  result.subtracted_mean = mean;
  return result;
}

// ---------------------------------------------------------------------------
// selftest

namespace {

SelfCheck check_result(const std::string& name, double max_dev, double tol) {
  return SelfCheck{name, max_dev <= tol, max_dev};
}

}  // namespace

std::vector<SelfCheck> run_selftest(bool inject_taper_fault) {
  std::vector<SelfCheck> checks;
  RngStream rng(20240901);

  {  // Parseval over the full symmetric set
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int t_len = 8 + 4 * trial;
      std::vector<double> x(t_len);
      double mean = 0.0;
      for (double& v : x) mean += (v = rng.normal());
      mean /= t_len;
      for (double& v : x) v -= mean;
      const FourierGrid grid = fourier_frequencies(t_len, true);
      const Periodogram pg = periodogram(x, grid);
      double total = 0.0;
      for (int k = 0; k < grid.size(); ++k)
        total += (grid.frequencies[k] < M_PI - 1e-12 ? 2.0 : 1.0) * pg.ordinates[k];
      double ss = 0.0;
      for (const double v : x) ss += v * v;
      worst = std::max(worst, std::abs(total - ss / (2.0 * M_PI)) / (ss / (2.0 * M_PI)));
    }
    checks.push_back(check_result("parseval", worst, 1e-10));
  }

  {  // FFT batch vs direct DFT
    double worst = 0.0;
    for (const int t_len : {7, 33}) {
      std::vector<double> x(t_len);
      for (double& v : x) v = rng.normal();
      const FourierGrid grid = fourier_frequencies(t_len, true);
      const auto batch = dft_batch(x, grid);
      for (int k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(batch[k] - dft(x, grid.frequencies[k])));
    }
    checks.push_back(check_result("fft_vs_naive_dft", worst, 1e-9));
  }

  {  // parameterization roundtrips
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
      const int p = 1 + trial % 6;
      std::vector<double> r(p), theta(p);
      for (int i = 0; i < p; ++i) {
        r[i] = 1.998 * rng.uniform() - 0.999;
        theta[i] = 10.0 * rng.uniform() - 5.0;
      }
      const std::vector<double> r2 = phi_to_r(r_to_phi(r));
      for (int i = 0; i < p; ++i) worst = std::max(worst, std::abs(r2[i] - r[i]));
      const std::vector<double> t2 = r_to_theta(theta_to_r(theta));
      for (int i = 0; i < p; ++i) worst = std::max(worst, std::abs(t2[i] - theta[i]));
    }
    checks.push_back(check_result("parameterization_roundtrip", worst, 1e-10));
  }

  {  // Hanning normalizer
    const TaperWindow win = hanning_window(4);
    checks.push_back(check_result("hanning_normalizer", std::abs(win.h2_sum - 1.5), 1e-14));
  }

  {  // identity taper reproduces the plain periodogram
    const int seg_len = 16;
    std::vector<double> x(64);
    for (double& v : x) v = rng.normal();
    const double fault = inject_taper_fault ? 1.01 : 1.0;
    std::vector<double> ones(seg_len, fault);
    const FourierGrid grid = fourier_frequencies(seg_len);
    const std::vector<double> tapered = local_periodogram(x, 20, seg_len, grid, ones);
    const std::vector<double> plain = local_periodogram(x, 20, seg_len, grid);
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k)
      worst = std::max(worst, std::abs(tapered[k] - plain[k]));
    checks.push_back(check_result("taper_identity", worst, 1e-12));
  }

  {  // block / dynamic likelihoods against naive double loops
    const int t_len = 60;
    std::vector<double> x(t_len);
    for (double& v : x) v = rng.normal();
    LikelihoodSpec spec;
    spec.family = Family::block_whittle;
    spec.seg_len = 12;
    spec.step = 6;
    const PreparedData data = prepare(x, spec);
    std::vector<std::vector<double>> phi(data.geometry.n_segments);
    std::vector<double> sigma2(data.geometry.n_segments);
    for (int j = 0; j < data.geometry.n_segments; ++j) {
      phi[j] = {0.6 * std::sin(0.3 * j), -0.2};
      sigma2[j] = 0.5 + 0.1 * j;
    }
    const double fast = block_whittle_loglik(data, phi, sigma2);
    double naive = 0.0;
    for (int j = 0; j < data.geometry.n_segments; ++j)
      for (int k = 0; k < data.seg_grid.size(); ++k) {
        const ARSpec ar{phi[j], sigma2[j]};
        const double f = ar_spectral_density(ar, data.seg_grid.frequencies[k]);
        naive -= std::log(f) + data.block_ordinates[j][k] / f;
      }
    const double dev = std::abs(fast - naive) / std::abs(naive);
    checks.push_back(check_result("block_whittle_vs_naive", dev, 1e-11));
  }

  {  // time-domain tvAR vs exact AR(1) likelihood decomposition
    const int t_len = 40;
    std::vector<double> x(t_len);
    for (double& v : x) v = rng.normal();
    const double phi = 0.6, sigma2 = 1.3;
    std::vector<std::vector<double>> path(t_len, {phi});
    const std::vector<double> s2(t_len, sigma2);
    const double cond = time_domain_tvar_loglik(x, path, s2, 1);
    const double v0 = sigma2 / (1.0 - phi * phi);
    const double init = -0.5 * std::log(2.0 * M_PI * v0) - 0.5 * x[0] * x[0] / v0;
    const double dev = std::abs(exact_ar1_loglik(x, phi, sigma2) - init - cond);
    checks.push_back(check_result("time_domain_vs_exact_ar1", dev, 1e-10));
  }

  {  // conjugate-update moments (reduced draws)
    const int n_draws = 20000;
    Eigen::MatrixXd scale(2, 2);
    scale << 2.0, 0.3, 0.3, 1.0;
    const double dof = 8.0;
    Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < n_draws; ++i) mean_acc += sample_inverse_wishart(dof, scale, rng);
    mean_acc /= n_draws;
    const Eigen::MatrixXd expected = scale / (dof - 2 - 1);
    const double dev_iw = (mean_acc - expected).cwiseAbs().maxCoeff();

    double ig_acc = 0.0;
    for (int i = 0; i < n_draws; ++i) ig_acc += rng.inverse_gamma(5.0, 8.0);
    const double dev_ig = std::abs(ig_acc / n_draws - 8.0 / 4.0);
    checks.push_back(check_result("conjugate_moments", std::max(dev_iw, dev_ig), 0.05));
  }

  {  // complete periodogram exact expectation (oracle filter)
    const int t_len = 8;
    const double phi = 0.6;
    const FourierGrid grid = fourier_frequencies(t_len);
    const FittedAR filter{1, {phi}, 1.0};
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
      const double omega = grid.frequencies[k];
      // coefficient vectors of the bilinear form via unit probes
      std::vector<std::complex<double>> c(t_len), d(t_len);
      for (int t = 0; t < t_len; ++t) {
        std::vector<double> e(t_len, 0.0);
        e[t] = 1.0;
        d[t] = dft(e, omega);
        c[t] = d[t] + predictive_dft_at(e, filter, omega);
      }
      std::complex<double> expectation = 0.0;
      for (int t = 0; t < t_len; ++t)
        for (int s = 0; s < t_len; ++s)
          expectation += c[t] * std::conj(d[s]) * std::pow(phi, std::abs(t - s)) /
                         (1.0 - phi * phi);
      const double mean_val = std::real(expectation) / (2.0 * M_PI * t_len);
      const double f = ar_spectral_density(ARSpec{{phi}, 1.0}, omega);
      worst = std::max(worst, std::abs(mean_val - f));
    }
    checks.push_back(check_result("complete_periodogram_unbiased", worst, 1e-10));
  }

  {  // grid quantile interpolation examples
    std::vector<double> draws{1, 2, 3, 4};
    const std::vector<double> probs{0.0, 0.5, 1.0};
    const std::vector<double> q = posterior_quantiles(draws, probs);
    const double dev =
        std::max({std::abs(q[0] - 1.0), std::abs(q[1] - 2.5), std::abs(q[2] - 4.0)});
    checks.push_back(check_result("quantile_interpolation", dev, 1e-14));
  }

  return checks;
}

}  // namespace tvwhittle::harness
