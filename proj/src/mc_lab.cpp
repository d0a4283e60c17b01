#include "tlpvol/mc_lab.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>

#include "tlpvol/errors.hpp"
#include "tlpvol/normal.hpp"

namespace tlpvol {

ClassificationCounts& ClassificationCounts::operator+=(const ClassificationCounts& o) {
  jump_intervals += o.jump_intervals;
  jump_intervals_excluded += o.jump_intervals_excluded;
  clean_intervals += o.clean_intervals;
  clean_intervals_excluded += o.clean_intervals_excluded;
  return *this;
}

double ExperimentConfig::h() const {
  if (bandwidth) return *bandwidth;
  return std::pow(delta(), phi);
}

double ExperimentConfig::threshold() const {
  return ThresholdSpec(eta, threshold_scale).value(delta());
}

void ExperimentConfig::validate() const {
  if (n < 2) throw ValidationError("experiment: n must be at least 2");
  if (!(T > 0.0)) throw ValidationError("experiment: T must be positive");
  if (replications < 1) throw ValidationError("experiment: replications must be >= 1");
  if (x_points.empty()) throw ValidationError("experiment: x_points must be non-empty");
  if (estimators.empty()) throw ValidationError("experiment: at least one estimator required");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("experiment: level must lie in (0, 1)");
  if (bandwidth && !(*bandwidth > 0.0)) throw ValidationError("experiment: bandwidth must be positive");
  if (!bandwidth && !(phi > 0.0)) throw ValidationError("experiment: phi must be positive");
  if (!model.drift || !model.diffusion) throw ValidationError("experiment: model incomplete");
  (void)threshold();
  validate_jump_spec(model.jumps);
}

double standardize(double sigma2_hat, double sigma2_true, double bias, double h, double delta,
                   double local_time_hat, double v_x) {
  if (!(local_time_hat > 0.0)) throw NumericalError("standardize: no local occupation (L_hat <= 0)");
  if (!(v_x > 0.0)) throw ValidationError("standardize: variance constant must be positive");
  const double rate = std::sqrt(h * local_time_hat / delta);
  return rate * (sigma2_hat - sigma2_true - bias) / std::sqrt(2.0 * sigma2_true * sigma2_true * v_x);
}

double ks_distance(std::span<const double> samples) {
  if (samples.empty()) throw ValidationError("ks_distance: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw ValidationError("ks_distance: non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i]);
    d = std::max({d, (i + 1) / m - f, f - i / m});
  }
  return d;
}

EstimatorConstants estimator_constants(const Estimator& est, const KernelSpec& kernel,
                                       const ModelSpec& model, double x, double h) {
  EstimatorConstants c;
  const auto nw_bias = [&] {
    return model.diffusion2_slope ? h * kernel_moment(kernel, 1, 1) * (*model.diffusion2_slope)(x)
                                  : 0.0;
  };
  const auto ll_bias = [&] {
    return model.diffusion2_curvature ? bias_correction(kernel, (*model.diffusion2_curvature)(x), h)
                                      : 0.0;
  };
  switch (est.kind) {
    case EstimatorKind::local_linear:
      c.variance = variance_constant(kernel);
      c.bias = ll_bias();
      break;
    case EstimatorKind::nw_threshold:
    case EstimatorKind::nw_plain:
      c.variance = local_poly_variance_constant(kernel, 0);
      c.bias = nw_bias();
      break;
    case EstimatorKind::local_poly:
      c.variance = local_poly_variance_constant(kernel, est.p);
      // Higher orders would need (sigma^2)^{(p+1)}; left uncorrected.
      c.bias = est.p == 0 ? nw_bias() : (est.p == 1 ? ll_bias() : 0.0);
      break;
  }
  return c;
}

namespace {

struct CellPlan {
  double x;
  Estimator estimator;
  double sigma2_true;
  EstimatorConstants constants;
};

KernelSpec resolve_experiment_kernel(const ExperimentConfig& config) {
  return resolve_kernel(config.kernel);
}

std::vector<CellPlan> plan_cells(const ExperimentConfig& config, const KernelSpec& kernel) {
  std::vector<CellPlan> plan;
  const double h = config.h();
  for (double x : config.x_points) {
    const double s2 = config.model.sigma2(x);
    if (!(s2 > 0.0)) {
      std::ostringstream os;
      os << "experiment: sigma^2(" << x << ") = " << s2 << " is not strictly positive";
      throw ValidationError(os.str());
    }
    for (const auto& e : config.estimators)
      plan.push_back({x, e, s2, estimator_constants(e, kernel, config.model, x, h)});
  }
  return plan;
}

ReplicateResult run_planned_replicate(const ExperimentConfig& config, const KernelSpec& kernel,
                                      const std::vector<CellPlan>& plan, std::size_t r) {
  const Path path = simulate_path(config.model, config.n, config.T,
                                  derive_seed(config.master_seed, r), {config.refinement});
  const double h = config.h();
  const double thr = config.threshold();
  const double delta = path.delta;

  ReplicateResult out;
  out.replicate = r;
  out.records.reserve(plan.size());
  const std::size_t ne = config.estimators.size();
  for (std::size_t c = 0; c < plan.size(); ++c) {
    const CellPlan& cell = plan[c];
    ReplicateRecord rec;
    rec.replicate = r;
    rec.x_index = c / ne;
    rec.estimator_index = c % ne;
    try {
      const EstimateResult est = estimate(path, cell.x, h, kernel, thr, cell.estimator);
      rec.sigma2_hat = est.sigma2_hat;
      rec.local_time_hat = est.local_time_hat;
      rec.n_effective = est.n_effective;
      rec.flagged_fraction = est.flagged_fraction;
      rec.z = standardize(est.sigma2_hat, cell.sigma2_true, cell.constants.bias, h, delta,
                          est.local_time_hat, cell.constants.variance);
      const InferenceResult ci = confidence_interval(est, delta, config.level,
                                                     cell.constants.variance, cell.constants.bias);
      rec.covered = ci.ci_low <= cell.sigma2_true && cell.sigma2_true <= ci.ci_high;
      rec.ok = std::isfinite(rec.z);
      if (!rec.ok) rec.error = "non-finite standardized statistic";
    } catch (const NumericalError& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.records.push_back(std::move(rec));
  }

  if (path.jump_mask) {
    const auto keep = classify_increments(path, thr);
    ClassificationCounts counts;
    for (std::size_t i = 0; i < path.n; ++i) {
      const bool jump = (*path.jump_mask)[i] != 0;
      const bool excluded = keep[i] == 0;
      if (jump) {
        ++counts.jump_intervals;
        if (excluded) ++counts.jump_intervals_excluded;
      } else {
        ++counts.clean_intervals;
        if (excluded) ++counts.clean_intervals_excluded;
      }
    }
    out.classification = counts;
  }
  return out;
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

ReplicateResult run_replicate(const ExperimentConfig& config, std::size_t r) {
  config.validate();
  const KernelSpec kernel = resolve_experiment_kernel(config);
  return run_planned_replicate(config, kernel, plan_cells(config, kernel), r);
}

MCReport aggregate(const ExperimentConfig& config, std::vector<ReplicateResult> results) {
  const KernelSpec kernel = resolve_experiment_kernel(config);
  const auto plan = plan_cells(config, kernel);
  std::sort(results.begin(), results.end(),
            [](const ReplicateResult& a, const ReplicateResult& b) { return a.replicate < b.replicate; });

  MCReport report;
  report.config = config;
  report.h = config.h();
  report.threshold = config.threshold();

  const bool ia = config.model.jumps.ia.has_value();
  const double alpha = (ia && config.model.jumps.ia->kind == IaKind::symmetric_alpha_stable)
                           ? config.model.jumps.ia->alpha
                           : 0.0;
  const double phi = config.bandwidth ? std::log(*config.bandwidth) / std::log(config.delta())
                                      : config.phi;
  report.rates = check_rate_conditions({config.eta, phi, alpha}, ia);
  if (!report.rates.passed())
    report.warnings.push_back("rate conditions violated:\n" + report.rates.to_string());

  for (const auto& res : results) {
    if (res.classification) {
      if (!report.classification) report.classification.emplace();
      *report.classification += *res.classification;
    }
    for (const auto& rec : res.records) report.rows.push_back(rec);
  }

  for (std::size_t c = 0; c < plan.size(); ++c) {
    const CellPlan& p = plan[c];
    CellReport cell;
    cell.x = p.x;
    cell.estimator = p.estimator;
    cell.sigma2_true = p.sigma2_true;
    cell.bias_term = p.constants.bias;
    std::size_t covered = 0;
    double sq_err = 0.0, flagged = 0.0, neff = 0.0;
    for (const auto& res : results) {
      const ReplicateRecord& rec = res.records.at(c);
      if (!rec.ok) {
        ++cell.failures;
        continue;
      }
      cell.z_samples.push_back(rec.z);
      cell.sigma2_hats.push_back(rec.sigma2_hat);
      if (rec.covered) ++covered;
      const double err = rec.sigma2_hat - p.sigma2_true;
      sq_err += err * err;
      flagged += rec.flagged_fraction;
      neff += static_cast<double>(rec.n_effective);
    }
    const double ok = static_cast<double>(cell.z_samples.size());
    const double m = static_cast<double>(results.size());
    if (cell.failures > config.max_failure_fraction * m) {
      std::ostringstream os;
      os << "experiment: " << cell.failures << " of " << results.size() << " replicates failed at x = "
         << p.x << " for " << p.estimator.name() << " (bandwidth or x misconfigured)";
      throw NumericalError(os.str());
    }
    if (ok > 0) {
      cell.coverage = covered / ok;
      cell.mean_bias = sample_mean(cell.sigma2_hats) - p.sigma2_true;
      cell.rmse = std::sqrt(sq_err / ok);
      cell.mean_flagged_fraction = flagged / ok;
      cell.mean_n_effective = neff / ok;
      cell.mean_z = sample_mean(cell.z_samples);
      double ss = 0.0;
      for (double z : cell.z_samples) ss += (z - cell.mean_z) * (z - cell.mean_z);
      cell.var_z = ok > 1 ? ss / (ok - 1) : 0.0;
      cell.ks_distance = ks_distance(cell.z_samples);
      if (cell.mean_n_effective < 50) {
        std::ostringstream os;
        os << "x = " << p.x << " (" << p.estimator.name() << "): mean n_effective "
           << cell.mean_n_effective << " below 50";
        report.warnings.push_back(os.str());
      }
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

MCReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const KernelSpec kernel = resolve_experiment_kernel(config);
  const auto plan = plan_cells(config, kernel);
  const auto reps = static_cast<std::ptrdiff_t>(config.replications);
  std::vector<ReplicateResult> results(config.replications);
  std::vector<std::exception_ptr> errors(config.replications);
#pragma omp parallel for schedule(dynamic) if (config.parallel)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    try {
      results[r] = run_planned_replicate(config, kernel, plan, static_cast<std::size_t>(r));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return aggregate(config, std::move(results));
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["n"] = config.n;
  j["T"] = config.T;
  j["delta"] = config.delta();
  j["replications"] = config.replications;
  j["x_points"] = config.x_points;
  j["eta"] = config.eta;
  j["phi"] = config.phi;
  j["bandwidth"] = config.bandwidth ? nlohmann::json(*config.bandwidth) : nlohmann::json(nullptr);
  j["h"] = config.h();
  j["threshold_scale"] = config.threshold_scale;
  j["threshold"] = config.threshold();
  j["kernel"] = config.kernel;
  std::vector<std::string> names;
  for (const auto& e : config.estimators) names.push_back(e.name());
  j["estimators"] = names;
  j["master_seed"] = config.master_seed;
  j["level"] = config.level;
  j["refinement"] = config.refinement;
  j["model"] = config.model_echo;
  return j;
}

nlohmann::json report_to_json(const MCReport& report) {
  nlohmann::json j;
  j["experiment"] = config_to_json(report.config);
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& c : report.rates.checks)
    rates.push_back({{"condition", c.name}, {"slack", c.slack}, {"passed", c.passed}});
  j["rate_conditions"] = rates;
  j["warnings"] = report.warnings;
  if (report.classification) {
    const auto& c = *report.classification;
    j["classification"] = {{"jump_intervals", c.jump_intervals},
                           {"jump_intervals_excluded", c.jump_intervals_excluded},
                           {"clean_intervals", c.clean_intervals},
                           {"clean_intervals_excluded", c.clean_intervals_excluded},
                           {"jump_exclusion_rate", c.jump_exclusion_rate()},
                           {"clean_exclusion_rate", c.clean_exclusion_rate()}};
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"x", c.x},
                     {"estimator", c.estimator.name()},
                     {"sigma2_true", c.sigma2_true},
                     {"bias_term", c.bias_term},
                     {"ks_distance", c.ks_distance},
                     {"coverage", c.coverage},
                     {"mean_bias", c.mean_bias},
                     {"rmse", c.rmse},
                     {"mean_flagged_fraction", c.mean_flagged_fraction},
                     {"mean_n_effective", c.mean_n_effective},
                     {"mean_z", c.mean_z},
                     {"var_z", c.var_z},
                     {"failures", c.failures},
                     {"z_samples", c.z_samples},
                     {"sigma2_hat", c.sigma2_hats}});
  }
  j["cells"] = cells;
  return j;
}

void write_report_csv(std::ostream& out, const MCReport& report) {
  out << "# " << config_to_json(report.config).dump() << "\n";
  out << "r,x,estimator,sigma2_hat,z,covered,flagged_fraction\n";
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& rec : report.rows) {
    const auto& cfg = report.config;
    out << rec.replicate << ',' << num(cfg.x_points[rec.x_index]) << ','
        << cfg.estimators[rec.estimator_index].name() << ',';
    if (rec.ok)
      out << num(rec.sigma2_hat) << ',' << num(rec.z) << ',' << (rec.covered ? 1 : 0) << ','
          << num(rec.flagged_fraction) << '\n';
    else
      out << "nan,nan,nan,nan\n";
  }
}

}  // namespace tlpvol
