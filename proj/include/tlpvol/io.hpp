#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/model_registry.hpp"
#include "tlpvol/threshold_regression.hpp"

namespace tlpvol {

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

// ---- observation files --------------------------------------------------
//
// CSV with header `t,x` and n + 1 rows. Lines starting with '#' are comments
// (used for provenance) and are skipped on read.

Path read_observations(std::istream& in);
Path read_observations(const std::string& path);

void write_observations(std::ostream& out, const Path& path,
                        const std::vector<std::string>& comments = {});
void write_observations(const std::string& file, const Path& path,
                        const std::vector<std::string>& comments = {});

/// One column `jump_time`, one row per finite-activity jump.
void write_jump_times(std::ostream& out, const Path& path);

// ---- run configuration --------------------------------------------------

enum class Mode { simulate, estimate, mc, bandwidth, check };

std::string mode_name(Mode m);

struct RunConfig {
  Mode mode = Mode::estimate;
  ModelRecipe model;
  std::size_t n = 1000;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::size_t refinement = 10;
  double eta = 0.5;
  std::optional<double> phi;
  double threshold_scale = 1.0;
  std::string kernel = "one_sided_epanechnikov";
  double level = 0.95;
  std::optional<double> h;
  bool h_auto = false;
  std::optional<double> h_pilot;
  std::optional<double> curvature;
  std::vector<double> x_points;
  std::vector<Estimator> estimators{Estimator{}};
  std::size_t replications = 100;
  double alpha = 0.0;
  bool ia_present = false;
  std::optional<double> delta;
  std::optional<double> local_time;
  std::string input;
  std::string output;
  std::string jump_times;
  std::string report_json;
  std::string report_csv;

  std::vector<std::string> warnings;
  /// Every key as resolved after defaults, for provenance echoes.
  std::vector<std::pair<std::string, std::string>> resolved;
};

/// Flat `key = value` settings; '#' starts a comment.
std::map<std::string, std::string> read_key_values(std::istream& in);

/// Validates keys and values for `mode`; the error names the offending key.
RunConfig build_run_config(Mode mode, const std::map<std::string, std::string>& kv);

/// Reads a config file whose `mode` key selects the run mode.
RunConfig parse_config(const std::string& path);
RunConfig parse_config(std::istream& in);

/// Every key the config parser accepts.
const std::vector<std::string>& config_keys();

}  // namespace tlpvol
