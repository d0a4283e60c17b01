#include "tlpvol/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "tlpvol/asymptotics.hpp"
#include "tlpvol/errors.hpp"
#include "tlpvol/io.hpp"
#include "tlpvol/mc_lab.hpp"
#include "tlpvol/model_registry.hpp"
#include "tlpvol/threshold_regression.hpp"

namespace tlpvol {

double default_pilot_bandwidth(const Path& path) {
  const auto& v = path.values;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  if (!(sd > 0.0)) throw NumericalError("constant path: no pilot bandwidth");
  return 1.06 * sd * std::pow(static_cast<double>(path.n), -0.2);
}

BandwidthChoice select_bandwidth(const Path& path, double x, const KernelSpec& kernel,
                                 double threshold, std::optional<double> pilot_h,
                                 std::optional<double> curvature) {
  BandwidthChoice b;
  b.pilot_h = pilot_h ? *pilot_h : default_pilot_bandwidth(path);
  b.local_time_hat = local_time_hat(path, x, b.pilot_h, kernel);
  if (!(b.local_time_hat > 0.0)) throw NumericalError("no local occupation at the pilot bandwidth");
  b.curvature = curvature ? *curvature : plugin_curvature(path, x, b.pilot_h, kernel, threshold);
  b.h = optimal_bandwidth(path.delta, b.local_time_hat, b.curvature, kernel);
  return b;
}

namespace {

std::vector<std::string> provenance(const RunConfig& c) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : c.resolved) lines.push_back(k + " = " + v);
  return lines;
}

void write_comments(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) os << "# " << l << '\n';
}

// Writes to `file`, or to `fallback` when the path is empty or "-".
template <class F>
void with_output(const std::string& file, std::ostream& fallback, F&& body) {
  if (file.empty() || file == "-") {
    body(fallback);
    return;
  }
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file);
  body(os);
  if (!os) throw DataError("write failed: " + file);
}

double threshold_for(const RunConfig& c, double delta) {
  return ThresholdSpec(c.eta, c.threshold_scale).value(delta);
}

int run_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const ModelSpec model = build_model(c.model);
  const Path path = simulate_path(model, c.n, c.T, c.seed, SimOptions{c.refinement});
  auto lines = provenance(c);
  if (path.fa_jump_times) lines.push_back("fa_jumps = " + std::to_string(path.fa_jump_times->size()));
  with_output(c.output, out, [&](std::ostream& os) { write_observations(os, path, lines); });
  if (!c.jump_times.empty()) {
    with_output(c.jump_times, out, [&](std::ostream& os) {
      write_comments(os, lines);
      write_jump_times(os, path);
    });
  }
  if (!c.output.empty()) err << "wrote " << path.n + 1 << " observations to " << c.output << '\n';
  return 0;
}

// Variance constant and bias used for the interval of a non-local-linear estimator.
double variance_for(const Estimator& e, const KernelSpec& kernel) {
  switch (e.kind) {
    case EstimatorKind::local_linear: return variance_constant(kernel);
    case EstimatorKind::nw_threshold:
    case EstimatorKind::nw_plain: return local_poly_variance_constant(kernel, 0);
    case EstimatorKind::local_poly: return local_poly_variance_constant(kernel, e.p);
  }
  return 0.0;
}

int run_estimate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Path path = read_observations(c.input);
  const KernelSpec kernel = resolve_kernel(c.kernel);
  const double threshold = threshold_for(c, path.delta);

  std::vector<double> hs(c.x_points.size(), c.h.value_or(0.0));
  std::vector<std::string> h_errors(c.x_points.size());
  auto lines = provenance(c);
  lines.push_back("delta = " + format_double(path.delta));
  lines.push_back("threshold = " + format_double(threshold));
  if (c.h_auto) {
    for (std::size_t i = 0; i < c.x_points.size(); ++i) {
      try {
        const auto b = select_bandwidth(path, c.x_points[i], kernel, threshold, c.h_pilot, c.curvature);
        hs[i] = b.h;
        lines.push_back("h_auto x = " + format_double(c.x_points[i]) + ": h = " + format_double(b.h) +
                        ", pilot_h = " + format_double(b.pilot_h) + ", L_hat = " +
                        format_double(b.local_time_hat) + ", curvature = " + format_double(b.curvature));
      } catch (const NumericalError& e) {
        h_errors[i] = e.what();
      }
    }
  }

  std::size_t failed = 0, total = 0;
  std::ostringstream body;
  body << "x,estimator,sigma2_hat,L_hat,se,ci_low,ci_high,flagged_fraction,h\n";
  for (const auto& est : c.estimators) {
    const double v = variance_for(est, kernel);
    for (std::size_t i = 0; i < c.x_points.size(); ++i) {
      ++total;
      const double x = c.x_points[i];
      const std::string nan = "nan";
      std::string error = h_errors[i];
      std::optional<InferenceResult> inf;
      if (error.empty()) {
        try {
          const auto r = estimate(path, x, hs[i], kernel, threshold, est);
          const double bias = (est.kind == EstimatorKind::local_linear && c.curvature)
                                  ? bias_correction(kernel, *c.curvature, hs[i])
                                  : 0.0;
          inf = confidence_interval(r, path.delta, c.level, v, bias);
        } catch (const NumericalError& e) {
          error = e.what();
        }
      }
      body << format_double(x) << ',' << est.name() << ',';
      if (inf) {
        body << format_double(inf->estimate.sigma2_hat) << ',' << format_double(inf->estimate.local_time_hat)
             << ',' << format_double(inf->std_error) << ',' << format_double(inf->ci_low) << ','
             << format_double(inf->ci_high) << ',' << format_double(inf->estimate.flagged_fraction);
      } else {
        ++failed;
        err << "warning: x = " << x << " (" << est.name() << "): " << error << '\n';
        body << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan;
      }
      body << ',' << (hs[i] > 0.0 ? format_double(hs[i]) : nan) << '\n';
    }
  }
  with_output(c.output, out, [&](std::ostream& os) {
    write_comments(os, lines);
    os << body.str();
  });
  if (failed == total) throw NumericalError("estimation failed at every evaluation point");
  return 0;
}

int run_mc(const RunConfig& c, std::ostream& out, std::ostream& err) {
  ExperimentConfig e;
  e.model = build_model(c.model);
  e.model_echo = recipe_to_json(c.model);
  e.n = c.n;
  e.T = c.T;
  e.replications = c.replications;
  e.x_points = c.x_points;
  e.eta = c.eta;
  if (c.phi) e.phi = *c.phi;
  e.bandwidth = c.h;
  e.threshold_scale = c.threshold_scale;
  e.kernel = c.kernel;
  e.estimators = c.estimators;
  e.master_seed = c.seed;
  e.level = c.level;
  e.refinement = c.refinement;

  const MCReport report = run_experiment(e);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';

  if (!c.report_json.empty()) {
    auto j = report_to_json(report);
    nlohmann::json resolved = nlohmann::json::object();
    for (const auto& [k, v] : c.resolved) resolved[k] = v;
    j["resolved_config"] = resolved;
    with_output(c.report_json, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }
  if (!c.report_csv.empty()) {
    with_output(c.report_csv, out, [&](std::ostream& os) {
      write_comments(os, provenance(c));
      write_report_csv(os, report);
    });
  }

  err << "h = " << report.h << ", threshold = " << report.threshold << ", M = " << e.replications << '\n';
  for (const auto& cell : report.cells) {
    err << "x = " << cell.x << "  " << cell.estimator.name() << ": ks = " << cell.ks_distance
        << ", coverage = " << cell.coverage << ", mean bias = " << cell.mean_bias
        << ", failures = " << cell.failures << '\n';
  }
  return 0;
}

int run_bandwidth(const RunConfig& c, std::ostream& out, std::ostream&) {
  const KernelSpec kernel = resolve_kernel(c.kernel);
  std::ostringstream body;
  if (c.input.empty()) {
    body << "h\n" << format_double(optimal_bandwidth(*c.delta, *c.local_time, *c.curvature, kernel)) << '\n';
  } else {
    const Path path = read_observations(c.input);
    const double threshold = threshold_for(c, path.delta);
    body << "x,h,pilot_h,L_hat,curvature\n";
    for (double x : c.x_points) {
      const auto b = select_bandwidth(path, x, kernel, threshold, c.h_pilot, c.curvature);
      body << format_double(x) << ',' << format_double(b.h) << ',' << format_double(b.pilot_h) << ','
           << format_double(b.local_time_hat) << ',' << format_double(b.curvature) << '\n';
    }
  }
  with_output(c.output, out, [&](std::ostream& os) {
    write_comments(os, provenance(c));
    os << body.str();
  });
  return 0;
}

int run_check(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto report = check_rate_conditions({c.eta, *c.phi, c.alpha}, c.ia_present);
  out << (c.ia_present ? "infinite activity" : "finite activity") << ": eta = " << c.eta
      << ", phi = " << *c.phi;
  if (c.ia_present) out << ", alpha = " << c.alpha;
  out << '\n' << report.to_string();
  return report.passed() ? 0 : 1;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  for (const auto& w : c.warnings) err << "warning: " << w << '\n';
  switch (c.mode) {
    case Mode::simulate: return run_simulate(c, out, err);
    case Mode::estimate: return run_estimate(c, out, err);
    case Mode::mc: return run_mc(c, out, err);
    case Mode::bandwidth: return run_bandwidth(c, out, err);
    case Mode::check: return run_check(c, out, err);
  }
  return 1;
}

struct Subcommand {
  Mode mode;
  CLI::App* app = nullptr;
  std::string config;
  std::map<std::string, std::string> values;
  bool ia_flag = false;
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Threshold local-polynomial estimation of sigma^2(x) for jump-diffusions", "tlpvol"};
  app.set_help_flag("--help", "print this help");  // -h is taken by the bandwidth key
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, Mode>> commands = {
      {"simulate", Mode::simulate}, {"estimate", Mode::estimate}, {"mc", Mode::mc},
      {"bandwidth", Mode::bandwidth}, {"check-conditions", Mode::check}};
  const std::map<Mode, std::string> help = {
      {Mode::simulate, "simulate a jump-diffusion path and write t,x CSV"},
      {Mode::estimate, "estimate sigma^2 at x points from an observation CSV"},
      {Mode::mc, "Monte Carlo study of the estimator's limit law"},
      {Mode::bandwidth, "MSE-optimal bandwidth"},
      {Mode::check, "check the eta/phi/alpha rate conditions"}};

  std::vector<std::unique_ptr<Subcommand>> subs;
  for (const auto& [name, mode] : commands) {
    auto s = std::make_unique<Subcommand>();
    s->mode = mode;
    s->app = app.add_subcommand(name, help.at(mode));
    s->app->add_option("--config", s->config, "key = value config file");
    for (const auto& key : config_keys()) {
      if (key == "mode") continue;
      if (mode == Mode::check && key == "ia") {
        s->app->add_flag("--ia", s->ia_flag, "infinite-activity jumps present");
        continue;
      }
      s->app->add_option("--" + key, s->values[key], "config key '" + key + "'");
    }
    subs.push_back(std::move(s));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      std::map<std::string, std::string> kv;
      if (!s->config.empty()) {
        std::ifstream in(s->config);
        if (!in) throw DataError("cannot open config file " + s->config);
        kv = read_key_values(in);
      }
      for (const auto& [key, value] : s->values)
        if (s->app->count("--" + key) > 0) kv[key] = value;
      if (s->ia_flag) kv["ia"] = "true";
      return run(build_run_config(s->mode, kv), out, err);
    }
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::numerical);
  }
}

int dispatch(int argc, const char* const* argv) { return dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace tlpvol
