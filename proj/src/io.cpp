#include "tlpvol/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "tlpvol/asymptotics.hpp"
#include "tlpvol/errors.hpp"

namespace tlpvol {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- observations ---------------------------------------------------------

Path read_observations(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<double> t, x;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (trim(line) != "t,x")
        throw DataError("observations: expected header 't,x' on line " + std::to_string(lineno));
      header = true;
      continue;
    }
    const std::size_t row = t.size() + 1;
    const auto comma = line.find(',');
    const auto tv = comma == std::string::npos ? std::nullopt : to_double(trim(line.substr(0, comma)));
    const auto xv = comma == std::string::npos ? std::nullopt : to_double(trim(line.substr(comma + 1)));
    if (!tv || !xv || !std::isfinite(*tv) || !std::isfinite(*xv))
      throw DataError("observations: cannot parse row " + std::to_string(row) + " (line " +
                      std::to_string(lineno) + ")");
    if (!t.empty() && !(*tv > t.back()))
      throw DataError("observations: t not strictly increasing at row " + std::to_string(row));
    t.push_back(*tv);
    x.push_back(*xv);
  }
  if (!header) throw DataError("observations: missing header 't,x'");
  if (t.size() < 3)
    throw DataError("observations: need at least 3 rows, got " + std::to_string(t.size()));

  // spacing is judged against the first step so the offending row is the one reported
  const std::size_t n = t.size() - 1;
  const double first = t[1] - t[0];
  for (std::size_t i = 2; i <= n; ++i) {
    const double step = t[i] - t[i - 1];
    if (std::abs(step - first) > 1e-9 * first) {
      std::ostringstream os;
      os << "observations: irregular spacing at row " << i + 1 << " (t = " << t[i] << ", step "
         << step << " vs first step " << first << ")";
      throw DataError(os.str());
    }
  }
  const double span = t.back() - t.front();
  const double delta = span / static_cast<double>(n);
  Path p;
  p.n = n;
  p.T = span;
  p.delta = delta;
  p.values = std::move(x);
  return p;
}

Path read_observations(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open observation file " + file);
  return read_observations(in);
}

void write_observations(std::ostream& out, const Path& path, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "t,x\n";
  for (std::size_t i = 0; i <= path.n; ++i) {
    const double t = path.T * static_cast<double>(i) / static_cast<double>(path.n);
    out << format_double(t) << ',' << format_double(path.values[i]) << '\n';
  }
}

void write_observations(const std::string& file, const Path& path,
                        const std::vector<std::string>& comments) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file);
  write_observations(out, path, comments);
}

void write_jump_times(std::ostream& out, const Path& path) {
  out << "jump_time\n";
  if (path.fa_jump_times)
    for (double t : *path.fa_jump_times) out << format_double(t) << '\n';
}

// ---- configuration -----------------------------------------------------------

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::estimate: return "estimate";
    case Mode::mc: return "mc";
    case Mode::bandwidth: return "bandwidth";
    case Mode::check: return "check";
  }
  return "unknown";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "mode", "drift", "kappa", "theta", "diffusion", "s", "a", "b", "x0", "lambda",
      "jump_mean", "jump_sd", "ia", "alpha", "ia_scale", "vg_nu", "vg_theta", "vg_sigma",
      "n", "T", "seed", "refinement", "eta", "phi", "threshold_scale", "kernel", "level",
      "p", "h", "h_pilot", "curvature", "x", "x_min", "x_max", "x_count", "estimator",
      "replications", "delta", "local_time", "input", "output", "jump_times", "report_json",
      "report_csv"};
  return keys;
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

namespace {

class KeyReader {
 public:
  explicit KeyReader(const std::map<std::string, std::string>& kv) : kv_(kv) {
    const auto& known = config_keys();
    for (const auto& [k, v] : kv)
      if (std::find(known.begin(), known.end(), k) == known.end())
        throw ValidationError("unknown config key '" + k + "'");
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& raw(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ValidationError("missing required key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    const auto v = to_double(raw(key));
    if (!v || !std::isfinite(*v))
      throw ValidationError("key '" + key + "': '" + raw(key) + "' is not a finite number");
    return *v;
  }

  void number_into(const std::string& key, double& out) const {
    if (has(key)) out = number(key);
  }

  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t min) const {
    const std::string& s = raw(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ValidationError("key '" + key + "': '" + s + "' is not a non-negative integer");
    if (v < min)
      throw ValidationError("key '" + key + "' out of range: must be >= " + std::to_string(min));
    return v;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

 private:
  const std::map<std::string, std::string>& kv_;
};

void require_range(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError("key '" + key + "' out of range: " + what);
}

}  // namespace

RunConfig build_run_config(Mode mode, const std::map<std::string, std::string>& kv) {
  const KeyReader r(kv);
  RunConfig c;
  c.mode = mode;

  if (r.has("mode")) {
    std::string m = r.raw("mode");
    if (m == "check-conditions") m = "check";
    if (m != mode_name(mode))
      throw ValidationError("key 'mode' is '" + r.raw("mode") + "' but the command is " + mode_name(mode));
  }

  // Model.
  auto& mr = c.model;
  mr.drift = r.text("drift", mr.drift);
  r.number_into("kappa", mr.kappa);
  r.number_into("theta", mr.theta);
  mr.diffusion = r.text("diffusion", mr.diffusion);
  r.number_into("s", mr.s);
  r.number_into("a", mr.a);
  r.number_into("b", mr.b);
  r.number_into("x0", mr.x0);
  r.number_into("lambda", mr.lambda);
  r.number_into("jump_mean", mr.jump_mean);
  r.number_into("jump_sd", mr.jump_sd);
  r.number_into("alpha", mr.alpha);
  r.number_into("ia_scale", mr.ia_scale);
  r.number_into("vg_nu", mr.vg_nu);
  r.number_into("vg_theta", mr.vg_theta);
  r.number_into("vg_sigma", mr.vg_sigma);
  {
    const std::string ia = r.text("ia", "none");
    if (ia == "none" || ia == "false") {
      mr.ia = "none";
    } else if (ia == "stable" || ia == "true" || ia == "symmetric_alpha_stable") {
      mr.ia = "stable";
    } else if (ia == "vg" || ia == "variance_gamma") {
      mr.ia = "vg";
    } else {
      throw ValidationError("key 'ia': '" + ia + "' is not one of none, stable, vg");
    }
    c.ia_present = mr.ia != "none";
  }
  require_range(mr.lambda >= 0.0, "lambda", "must be >= 0");
  require_range(mr.jump_sd >= 0.0, "jump_sd", "must be >= 0");
  require_range(mr.ia_scale >= 0.0, "ia_scale", "must be >= 0");
  // check-conditions reports alpha >= 1 as a failed condition instead.
  if (mode != Mode::check) {
    if (mr.ia == "stable") require_range(mr.alpha > 0.0 && mr.alpha < 1.0, "alpha", "must lie in (0, 1)");
    require_range(mr.alpha >= 0.0 && mr.alpha < 1.0, "alpha", "must lie in [0, 1)");
  } else {
    require_range(mr.alpha >= 0.0, "alpha", "must be >= 0");
  }
  c.alpha = mr.alpha;
  if (!r.has("alpha") && mr.ia != "stable") c.alpha = 0.0;

  // Sampling.
  if (r.has("n")) c.n = r.integer("n", 2);
  r.number_into("T", c.T);
  require_range(c.T > 0.0, "T", "must be positive");
  if (r.has("seed")) c.seed = r.integer("seed", 0);
  if (r.has("refinement")) c.refinement = r.integer("refinement", 1);
  if (r.has("replications")) c.replications = r.integer("replications", 1);

  // Estimation.
  r.number_into("eta", c.eta);
  require_range(c.eta > 0.0 && c.eta < 1.0, "eta", "must lie in (0, 1)");
  c.phi = r.optional_number("phi");
  if (c.phi) require_range(*c.phi > 0.0, "phi", "must be positive");
  r.number_into("threshold_scale", c.threshold_scale);
  require_range(c.threshold_scale > 0.0, "threshold_scale", "must be positive");
  c.kernel = r.text("kernel", c.kernel);
  r.number_into("level", c.level);
  require_range(c.level > 0.0 && c.level < 1.0, "level", "must lie in (0, 1)");
  if (r.has("h")) {
    if (r.raw("h") == "auto") {
      c.h_auto = true;
    } else {
      c.h = r.number("h");
      require_range(*c.h > 0.0, "h", "must be positive or 'auto'");
    }
  }
  c.h_pilot = r.optional_number("h_pilot");
  if (c.h_pilot) require_range(*c.h_pilot > 0.0, "h_pilot", "must be positive");
  c.curvature = r.optional_number("curvature");
  c.delta = r.optional_number("delta");
  if (c.delta) require_range(*c.delta > 0.0, "delta", "must be positive");
  c.local_time = r.optional_number("local_time");
  if (c.local_time) require_range(*c.local_time > 0.0, "local_time", "must be positive");

  if (r.has("estimator")) {
    c.estimators.clear();
    for (const auto& e : split_list(r.raw("estimator"))) {
      try {
        c.estimators.push_back(Estimator::parse(e));
      } catch (const ValidationError& err) {
        throw ValidationError(std::string("key 'estimator': ") + err.what());
      }
    }
    if (c.estimators.empty()) throw ValidationError("key 'estimator' is empty");
  } else if (r.has("p")) {
    const auto p = r.integer("p", 0);
    require_range(p <= 6, "p", "must be <= 6");
    c.estimators = {p == 1 ? Estimator{} : Estimator{EstimatorKind::local_poly, static_cast<int>(p)}};
  }

  // Evaluation points: explicit list or a uniform grid.
  if (r.has("x")) {
    for (const auto& item : split_list(r.raw("x"))) {
      const auto v = to_double(item);
      if (!v || !std::isfinite(*v)) throw ValidationError("key 'x': '" + item + "' is not a number");
      c.x_points.push_back(*v);
    }
  } else if (r.has("x_min") || r.has("x_max") || r.has("x_count")) {
    const double lo = r.number("x_min"), hi = r.number("x_max");
    const auto count = r.integer("x_count", 1);
    require_range(hi >= lo, "x_max", "must be >= x_min");
    for (std::uint64_t i = 0; i < count; ++i)
      c.x_points.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  }

  c.input = r.text("input", "");
  c.output = r.text("output", "");
  c.jump_times = r.text("jump_times", "");
  c.report_json = r.text("report_json", "");
  c.report_csv = r.text("report_csv", "");

  // Mode-specific requirements.
  const auto need_x = [&] {
    if (c.x_points.empty()) throw ValidationError("missing required key 'x' (or x_min/x_max/x_count)");
  };
  switch (mode) {
    case Mode::simulate:
      (void)build_model(mr);
      break;
    case Mode::estimate:
      (void)r.raw("input");
      (void)r.raw("eta");
      (void)r.raw("h");
      need_x();
      break;
    case Mode::mc:
      (void)build_model(mr);
      (void)r.raw("eta");
      need_x();
      if (!c.h && !c.phi) throw ValidationError("missing required key 'h' (or 'phi')");
      if (c.h_auto) throw ValidationError("key 'h': 'auto' is not supported for mc");
      if (c.report_json.empty() && c.report_csv.empty() && c.output.empty())
        throw ValidationError("missing required key 'report_json' / 'report_csv' (or 'output')");
      if (!c.output.empty()) {
        if (c.report_json.empty()) c.report_json = c.output + ".json";
        if (c.report_csv.empty()) c.report_csv = c.output + ".csv";
      }
      break;
    case Mode::bandwidth:
      if (c.input.empty()) {
        (void)r.raw("delta");
        (void)r.raw("local_time");
        (void)r.raw("curvature");
      } else {
        need_x();
      }
      break;
    case Mode::check:
      (void)r.raw("eta");
      (void)r.raw("phi");
      if (c.ia_present) (void)r.raw("alpha");
      break;
  }

  if (c.phi && mode != Mode::check) {
    const auto rates = check_rate_conditions({c.eta, *c.phi, c.alpha}, c.ia_present);
    if (!rates.passed()) c.warnings.push_back("rate conditions violated:\n" + rates.to_string());
  }

  // Provenance.
  auto& out = c.resolved;
  out.emplace_back("mode", mode_name(mode));
  const auto model_json = recipe_to_json(mr);
  for (const auto& [k, v] : model_json.items()) out.emplace_back("model." + k, v.dump());
  out.emplace_back("n", std::to_string(c.n));
  out.emplace_back("T", format_double(c.T));
  out.emplace_back("seed", std::to_string(c.seed));
  out.emplace_back("refinement", std::to_string(c.refinement));
  out.emplace_back("eta", format_double(c.eta));
  if (c.phi) out.emplace_back("phi", format_double(*c.phi));
  out.emplace_back("threshold_scale", format_double(c.threshold_scale));
  out.emplace_back("kernel", c.kernel);
  out.emplace_back("level", format_double(c.level));
  if (c.h_auto) out.emplace_back("h", "auto");
  if (c.h) out.emplace_back("h", format_double(*c.h));
  if (c.h_pilot) out.emplace_back("h_pilot", format_double(*c.h_pilot));
  if (c.curvature) out.emplace_back("curvature", format_double(*c.curvature));
  std::string names;
  for (const auto& e : c.estimators) names += (names.empty() ? "" : ",") + e.name();
  out.emplace_back("estimator", names);
  std::string xs;
  for (double x : c.x_points) xs += (xs.empty() ? "" : ",") + format_double(x);
  if (!xs.empty()) out.emplace_back("x", xs);
  if (mode == Mode::mc) out.emplace_back("replications", std::to_string(c.replications));
  if (!c.input.empty()) out.emplace_back("input", c.input);
  return c;
}

RunConfig parse_config(std::istream& in) {
  const auto kv = read_key_values(in);
  const auto it = kv.find("mode");
  if (it == kv.end()) throw ValidationError("missing required key 'mode'");
  static const std::map<std::string, Mode> modes = {
      {"simulate", Mode::simulate}, {"estimate", Mode::estimate}, {"mc", Mode::mc},
      {"bandwidth", Mode::bandwidth}, {"check", Mode::check}, {"check-conditions", Mode::check}};
  const auto m = modes.find(it->second);
  if (m == modes.end()) throw ValidationError("key 'mode': unknown mode '" + it->second + "'");
  return build_run_config(m->second, kv);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace tlpvol
