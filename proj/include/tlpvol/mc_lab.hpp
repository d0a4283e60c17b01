#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tlpvol/asymptotics.hpp"
#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/threshold_regression.hpp"

namespace tlpvol {

struct ExperimentConfig {
  ModelSpec model;
  std::size_t n = 5000;
  double T = 1.0;
  std::size_t replications = 100;
  std::vector<double> x_points;
  double eta = 0.5;
  double phi = 0.3;
  std::optional<double> bandwidth;  // overrides h = delta^phi when set
  double threshold_scale = 1.0;
  std::string kernel = "one_sided_epanechnikov";
  std::vector<Estimator> estimators{Estimator{}};
  std::uint64_t master_seed = 1;
  double level = 0.95;
  std::size_t refinement = 10;
  bool parallel = true;
  double max_failure_fraction = 0.2;
  nlohmann::json model_echo;  // caller-supplied description of `model`

  double delta() const { return T / static_cast<double>(n); }
  double h() const;
  double threshold() const;
  void validate() const;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::size_t x_index = 0;
  std::size_t estimator_index = 0;
  bool ok = false;
  double sigma2_hat = 0.0;
  double z = 0.0;
  bool covered = false;
  double flagged_fraction = 0.0;
  double local_time_hat = 0.0;
  std::size_t n_effective = 0;
  std::string error;
};

/// Increment classification against the simulated jump bookkeeping.
struct ClassificationCounts {
  std::size_t jump_intervals = 0;
  std::size_t jump_intervals_excluded = 0;
  std::size_t clean_intervals = 0;
  std::size_t clean_intervals_excluded = 0;

  double jump_exclusion_rate() const {
    return jump_intervals == 0 ? 0.0 : double(jump_intervals_excluded) / jump_intervals;
  }
  double clean_exclusion_rate() const {
    return clean_intervals == 0 ? 0.0 : double(clean_intervals_excluded) / clean_intervals;
  }
  ClassificationCounts& operator+=(const ClassificationCounts& o);
};

struct ReplicateResult {
  std::size_t replicate = 0;
  std::vector<ReplicateRecord> records;  // x-major, then estimator
  std::optional<ClassificationCounts> classification;
};

struct CellReport {
  double x = 0.0;
  Estimator estimator;
  double sigma2_true = 0.0;
  double bias_term = 0.0;  // analytic bias used in Z and the interval
  std::vector<double> z_samples;
  std::vector<double> sigma2_hats;
  std::size_t failures = 0;
  double ks_distance = 0.0;
  double coverage = 0.0;
  double mean_bias = 0.0;
  double rmse = 0.0;
  double mean_flagged_fraction = 0.0;
  double mean_n_effective = 0.0;
  double mean_z = 0.0;
  double var_z = 0.0;
};

struct MCReport {
  ExperimentConfig config;
  double h = 0.0;
  double threshold = 0.0;
  RateReport rates;
  std::vector<CellReport> cells;  // x-major, then estimator
  std::optional<ClassificationCounts> classification;
  std::vector<ReplicateRecord> rows;
  std::vector<std::string> warnings;

  const CellReport& cell(std::size_t x_index, std::size_t estimator_index) const {
    return cells.at(x_index * config.estimators.size() + estimator_index);
  }
};

/// Z = sqrt(h L_hat / delta) (sigma2_hat - sigma2_true - bias) / sqrt(2 sigma2_true^2 v).
double standardize(double sigma2_hat, double sigma2_true, double bias, double h, double delta,
                   double local_time_hat, double v_x);

/// One-sample Kolmogorov-Smirnov distance to the standard normal CDF.
double ks_distance(std::span<const double> samples);

/// Limit-law constants (variance constant, analytic bias) for one estimator at x.
struct EstimatorConstants {
  double variance = 0.0;
  double bias = 0.0;
};
EstimatorConstants estimator_constants(const Estimator& est, const KernelSpec& kernel,
                                       const ModelSpec& model, double x, double h);

/// Simulates replicate r with seed derive_seed(master_seed, r) and evaluates
/// every (x, estimator) cell on it.
ReplicateResult run_replicate(const ExperimentConfig& config, std::size_t r);

/// Combines replicate results; input order is irrelevant (sorted by index).
/// Throws NumericalError when any cell fails in more than
/// max_failure_fraction of the replicates.
MCReport aggregate(const ExperimentConfig& config, std::vector<ReplicateResult> results);

MCReport run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const MCReport& report);
/// Columns r,x,estimator,sigma2_hat,z,covered,flagged_fraction; the config
/// echo precedes the header as '#' comment lines.
void write_report_csv(std::ostream& out, const MCReport& report);
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace tlpvol
