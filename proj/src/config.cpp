#include "allelo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/info_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace allelo {

namespace pt = boost::property_tree;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::map<std::string, Mode>& mode_names() {
  static const std::map<std::string, Mode> m{{"simulate", Mode::simulate}, {"couple", Mode::couple},
                                             {"dual-check", Mode::dual_check}, {"meanfield", Mode::meanfield},
                                             {"sweep", Mode::sweep}, {"blocks", Mode::blocks}};
  return m;
}

const char* kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::all_blue: return "all-blue";
    case InitialKind::all_red: return "all-red";
    case InitialKind::product: return "product";
    case InitialKind::single_seed: return "single-seed";
  }
  return "?";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

double to_double(const std::string& key, const std::string& text, bool allow_inf) {
  std::string s = trim(text);
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "inf" || lower == "+inf" || lower == "infinity") {
    if (!allow_inf) throw ConfigError(key, "must be finite");
    return kInf;
  }
  if (std::count(s.begin(), s.end(), ',') == 1 && s.find('.') == std::string::npos) {
    std::replace(s.begin(), s.end(), ',', '.');
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

// Reads values by key path and remembers which paths were asked for, so
// that anything left over can be reported as unknown.
class Reader {
 public:
  explicit Reader(const pt::ptree& root) : root_(root) {}

  std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    const auto child = root_.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!child) return std::nullopt;
    if (!child->empty()) throw ConfigError(key, "expected a value, found a section");
    return child->data();
  }

  double number(const std::string& key, double def, bool allow_inf = false) {
    const auto r = raw(key);
    return r ? to_double(key, *r, allow_inf) : def;
  }

  long long integer(const std::string& key, long long def) {
    const auto r = raw(key);
    return r ? to_integer(key, *r) : def;
  }

  bool boolean(const std::string& key, bool def) {
    const auto r = raw(key);
    if (!r) return def;
    const std::string s = trim(*r);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + *r + "'");
  }

  std::string text(const std::string& key, const std::string& def) {
    const auto r = raw(key);
    return r ? trim(*r) : def;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, bool allow_inf = false) {
    const auto r = raw(key);
    if (!r) return def;
    std::vector<double> out;
    for (const auto& t : tokens(*r)) out.push_back(to_double(key, t, allow_inf));
    return out;
  }

  void reject_unknown() const { walk(root_, ""); }

 private:
  void walk(const pt::ptree& node, const std::string& prefix) const {
    std::set<std::string> names;
    for (const auto& [name, child] : node) {
      const std::string key = prefix.empty() ? name : prefix + "." + name;
      if (!names.insert(name).second) throw ConfigError(key, "duplicate key");
      if (child.empty()) {
        if (!known_.count(key)) throw ConfigError(key, "unknown key");
      } else {
        walk(child, key);
      }
    }
  }

  const pt::ptree& root_;
  std::set<std::string> known_;
};

template <std::size_t N>
std::array<double, N> fixed(const std::string& key, const std::vector<double>& v) {
  if (v.size() != N) throw ConfigError(key, "expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

void check_densities(const std::string& key, const std::array<double, kNumStates>& d) {
  double sum = 0.0;
  for (double x : d) {
    if (x < 0.0 || x > 1.0) throw ConfigError(key, "densities must lie in [0, 1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(key, "densities must sum to 1");
}

void check_gamma(const std::string& key, double g) {
  if (!(g > 0.0)) throw ConfigError(key, "gamma must be > 0");
}

void check_rate(const std::string& key, double l) {
  if (!(l >= 0.0)) throw ConfigError(key, "must be >= 0");
}

void check_positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
}

void set_gamma(Params& p, double g) {
  p.gamma_infinite = std::isinf(g);
  p.gamma = p.gamma_infinite ? 1.0 : g;
}

double gamma_of(const Params& p) { return p.gamma_infinite ? kInf : p.gamma; }

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v[i]);
  return out;
}

template <std::size_t N>
std::string join(const std::array<double, N>& v) {
  return join(std::vector<double>(v.begin(), v.end()));
}

RunConfig read(pt::ptree tree, const Overrides& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key.empty()) throw ConfigError(key, "empty key in override");
    tree.put(pt::ptree::path_type(key, '.'), value);
  }
  Reader r(tree);
  RunConfig c;

  const std::string mode = r.text("mode", "simulate");
  try {
    c.mode = mode_from_string(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mode", e.what());
  }
  const long long seed = r.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.output = r.text("output", "");
  if (c.output.empty()) c.output = std::string("out/") + to_string(c.mode);

  Params& p = c.params;
  p.lambda1 = r.number("params.lambda1", 1.0);
  check_rate("params.lambda1", p.lambda1);
  p.lambda2 = r.number("params.lambda2", 1.0);
  check_rate("params.lambda2", p.lambda2);
  const double g = r.number("params.gamma", 1.0, true);
  check_gamma("params.gamma", g);
  set_gamma(p, g);
  p.neighborhood.radius = r.number("params.radius", 1.0);
  check_positive("params.radius", p.neighborhood.radius);
  try {
    p.neighborhood.norm = norm_from_string(r.text("params.norm", "l1"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("params.norm", e.what());
  }
  const long long dim = r.integer("params.dim", 2);
  if (dim < 1 || dim > 3) throw ConfigError("params.dim", "must be 1, 2 or 3");
  p.neighborhood.dim = static_cast<int>(dim);

  const auto sides = r.numbers("domain.sides", {200, 200});
  c.sides.clear();
  for (double s : sides) {
    if (s < 1 || s != std::floor(s) || s > 1e6) throw ConfigError("domain.sides", "side lengths must be positive integers");
    c.sides.push_back(static_cast<int>(s));
  }
  if (c.sides.size() != static_cast<std::size_t>(dim)) {
    throw ConfigError("domain.sides", "expected " + std::to_string(dim) + " side lengths, one per dimension");
  }
  try {
    make_domain(c.sides, p.neighborhood);
  } catch (const std::exception& e) {
    throw ConfigError("domain.sides", e.what());
  }
  c.horizon = r.number("horizon", 50.0);
  check_positive("horizon", c.horizon);

  const std::string kind = r.text("initial.kind", "product");
  if (kind == "all-blue" || kind == "all-1") {
    c.initial.kind = InitialKind::all_blue;
  } else if (kind == "all-red" || kind == "all-2") {
    c.initial.kind = InitialKind::all_red;
  } else if (kind == "product") {
    c.initial.kind = InitialKind::product;
  } else if (kind == "single-seed") {
    c.initial.kind = InitialKind::single_seed;
  } else {
    throw ConfigError("initial.kind", "expected all-blue, all-red, product or single-seed, got '" + kind + "'");
  }
  c.initial.densities = fixed<kNumStates>("initial.densities", r.numbers("initial.densities", {0.0, 0.5, 0.5, 0.0}));
  check_densities("initial.densities", c.initial.densities);
  const long long ss = r.integer("initial.seed_state", 1);
  if (ss != 1 && ss != 2) throw ConfigError("initial.seed_state", "must be 1 (blue) or 2 (red)");
  c.initial.seed_state = site_state_from_int(static_cast<int>(ss));

  SimulateConfig& sim = c.simulate;
  sim.sample_every = r.number("simulate.sample_every", 1.0);
  check_positive("simulate.sample_every", sim.sample_every);
  sim.snapshots = r.numbers("simulate.snapshots", {});
  if (sim.snapshots.empty()) sim.snapshots = {c.horizon};
  for (std::size_t i = 0; i < sim.snapshots.size(); ++i) {
    if (sim.snapshots[i] < 0.0 || sim.snapshots[i] > c.horizon) {
      throw ConfigError("simulate.snapshots", "snapshot times must lie in [0, horizon]");
    }
    if (i && !(sim.snapshots[i] > sim.snapshots[i - 1])) {
      throw ConfigError("simulate.snapshots", "snapshot times must be increasing");
    }
  }

  CoupleConfig& cp = c.couple;
  const std::string vary = r.text("couple.vary", "gamma");
  if (vary == "lambda1") {
    cp.vary = VariedParameter::lambda1;
  } else if (vary == "lambda2") {
    cp.vary = VariedParameter::lambda2;
  } else if (vary == "gamma") {
    cp.vary = VariedParameter::gamma;
  } else {
    throw ConfigError("couple.vary", "expected lambda1, lambda2 or gamma, got '" + vary + "'");
  }
  cp.values = r.numbers("couple.values", cp.values, cp.vary == VariedParameter::gamma);
  if (cp.values.empty()) throw ConfigError("couple.values", "needs at least one value");
  for (double v : cp.values) {
    if (cp.vary == VariedParameter::gamma) {
      check_gamma("couple.values", v);
    } else {
      check_rate("couple.values", v);
    }
  }
  cp.sample_every = r.number("couple.sample_every", 1.0);
  check_positive("couple.sample_every", cp.sample_every);
  cp.event_times = r.boolean("couple.event_times", false);

  DualCheckConfig& dc = c.dual_check;
  const long long q = r.integer("dual_check.queries", 100);
  if (q < 1) throw ConfigError("dual_check.queries", "must be >= 1");
  dc.queries = static_cast<std::size_t>(q);
  dc.dual_horizon = r.number("dual_check.dual_horizon", 0.0);
  if (dc.dual_horizon < 0.0) throw ConfigError("dual_check.dual_horizon", "must be >= 0");
  const long long fs = r.integer("dual_check.favorability_samples", 10000);
  if (fs < 1000) throw ConfigError("dual_check.favorability_samples", "must be >= 1000");
  dc.favorability_samples = static_cast<std::size_t>(fs);

  MeanfieldConfig& mf = c.meanfield;
  try {
    mf.form = meanfield::form_from_string(r.text("meanfield.form", "corrected"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("meanfield.form", e.what());
  }
  mf.dt = r.number("meanfield.dt", 0.01);
  check_positive("meanfield.dt", mf.dt);
  mf.T = r.number("meanfield.T", 100.0);
  check_positive("meanfield.T", mf.T);
  mf.record_every = r.number("meanfield.record_every", 1.0);
  if (mf.record_every < 0.0) throw ConfigError("meanfield.record_every", "must be >= 0");
  mf.start = fixed<4>("meanfield.start", r.numbers("meanfield.start", {0.25, 0.25, 0.25, 0.25}));
  for (double u : mf.start) {
    if (u < 0.0) throw ConfigError("meanfield.start", "densities must be >= 0");
  }

  SweepConfig& sw = c.sweep;
  sw.lambda1 = r.numbers("sweep.lambda1", {});
  sw.lambda2 = r.numbers("sweep.lambda2", {});
  sw.gamma = r.numbers("sweep.gamma", {});
  if (sw.lambda1.empty()) sw.lambda1 = {p.lambda1};
  if (sw.lambda2.empty()) sw.lambda2 = {p.lambda2};
  if (sw.gamma.empty() && !p.gamma_infinite) sw.gamma = {p.gamma};
  for (double v : sw.lambda1) check_rate("sweep.lambda1", v);
  for (double v : sw.lambda2) check_rate("sweep.lambda2", v);
  for (double v : sw.gamma) check_gamma("sweep.gamma", v);

  BlocksConfig& bc = c.blocks;
  const long long L = r.integer("blocks.L", 20);
  if (L < 1 || L > 10000) throw ConfigError("blocks.L", "must be a positive integer");
  bc.L = static_cast<int>(L);
  const long long M = r.integer("blocks.M", 3);
  if (M < 1 || M > 1000) throw ConfigError("blocks.M", "must be a positive integer");
  bc.M = static_cast<int>(M);
  const long long T = r.integer("blocks.T", 0);
  if (T < 0 || T > 100000000) throw ConfigError("blocks.T", "must be a positive integer (0 for L^2)");
  bc.T = T ? static_cast<int>(T) : bc.L * bc.L;
  const long long ell = r.integer("blocks.ell", 0);
  if (ell < 0 || ell > 2 * L) throw ConfigError("blocks.ell", "must lie in [1, 2L] (0 for the default)");
  bc.ell = ell ? static_cast<int>(ell) : std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(L), 0.1))));
  const long long reps = r.integer("blocks.replicas", 200);
  if (reps < 30) throw ConfigError("blocks.replicas", "must be >= 30");
  bc.replicas = static_cast<std::size_t>(reps);
  bc.gammas = r.numbers("blocks.gammas", bc.gammas, true);
  if (bc.gammas.empty()) throw ConfigError("blocks.gammas", "needs at least one value");
  for (double v : bc.gammas) check_gamma("blocks.gammas", v);
  bc.occupancy = r.boolean("blocks.occupancy", true);
  bc.blocking = r.boolean("blocks.blocking", true);
  bc.box_red = r.number("blocks.box_red", 0.5);
  if (bc.box_red < 0.0 || bc.box_red > 1.0) throw ConfigError("blocks.box_red", "must lie in [0, 1]");
  bc.environment = fixed<kNumStates>("blocks.environment", r.numbers("blocks.environment", {0.98, 0.02, 0.0, 0.0}));
  check_densities("blocks.environment", bc.environment);

  r.reject_unknown();

  // Mode-specific preconditions.
  if (c.mode == Mode::meanfield && p.gamma_infinite) throw ConfigError("params.gamma", "mean-field mode needs a finite gamma");
  if (c.mode == Mode::sweep && sw.gamma.empty()) throw ConfigError("sweep.gamma", "needs finite gamma values");
  if (c.mode == Mode::blocks && dim != 2) throw ConfigError("params.dim", "block experiments need d = 2");
  return c;
}

}  // namespace

const char* to_string(Mode m) {
  for (const auto& [name, mode] : mode_names()) {
    if (mode == m) return name.c_str();
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  const auto it = mode_names().find(s == "dual_check" ? "dual-check" : s);
  if (it == mode_names().end()) {
    throw std::invalid_argument("unknown mode '" + s + "' (simulate, couple, dual-check, meanfield, sweep, blocks)");
  }
  return it->second;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return mode == o.mode && seed == o.seed && params == o.params && sides == o.sides && horizon == o.horizon &&
         initial.kind == o.initial.kind && initial.densities == o.initial.densities &&
         initial.seed_state == o.initial.seed_state && output == o.output && simulate == o.simulate &&
         couple == o.couple && dual_check == o.dual_check && meanfield == o.meanfield && sweep == o.sweep &&
         blocks == o.blocks;
}

RunConfig parse_config(std::istream& is, const Overrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_info(is, tree);
  } catch (const pt::info_parser_error& e) {
    throw ConfigError("<file>", std::string("line ") + std::to_string(e.line()) + ": " + e.message());
  }
  return read(std::move(tree), overrides);
}

RunConfig parse_config_string(const std::string& text, const Overrides& overrides) {
  std::istringstream is(text);
  return parse_config(is, overrides);
}

RunConfig parse_config_file(const std::string& path, const Overrides& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot read '" + path + "'");
  return parse_config(f, overrides);
}

std::string resolved_config(const RunConfig& c) {
  pt::ptree t;
  auto put = [&t](const std::string& key, const std::string& v) { t.put(pt::ptree::path_type(key, '.'), v); };
  put("mode", to_string(c.mode));
  put("seed", std::to_string(c.seed));
  put("output", c.output);
  put("params.lambda1", format_number(c.params.lambda1));
  put("params.lambda2", format_number(c.params.lambda2));
  put("params.gamma", format_number(gamma_of(c.params)));
  put("params.radius", format_number(c.params.neighborhood.radius));
  put("params.norm", to_string(c.params.neighborhood.norm));
  put("params.dim", std::to_string(c.params.neighborhood.dim));
  std::vector<double> sides(c.sides.begin(), c.sides.end());
  put("domain.sides", join(sides));
  put("horizon", format_number(c.horizon));
  put("initial.kind", kind_name(c.initial.kind));
  put("initial.densities", join(c.initial.densities));
  put("initial.seed_state", std::to_string(index_of(c.initial.seed_state)));
  put("simulate.sample_every", format_number(c.simulate.sample_every));
  put("simulate.snapshots", join(c.simulate.snapshots));
  put("couple.vary", to_string(c.couple.vary));
  put("couple.values", join(c.couple.values));
  put("couple.sample_every", format_number(c.couple.sample_every));
  put("couple.event_times", c.couple.event_times ? "true" : "false");
  put("dual_check.queries", std::to_string(c.dual_check.queries));
  put("dual_check.dual_horizon", format_number(c.dual_check.dual_horizon));
  put("dual_check.favorability_samples", std::to_string(c.dual_check.favorability_samples));
  put("meanfield.form", meanfield::to_string(c.meanfield.form));
  put("meanfield.dt", format_number(c.meanfield.dt));
  put("meanfield.T", format_number(c.meanfield.T));
  put("meanfield.record_every", format_number(c.meanfield.record_every));
  put("meanfield.start", join(c.meanfield.start));
  put("sweep.lambda1", join(c.sweep.lambda1));
  put("sweep.lambda2", join(c.sweep.lambda2));
  put("sweep.gamma", join(c.sweep.gamma));
  put("blocks.L", std::to_string(c.blocks.L));
  put("blocks.M", std::to_string(c.blocks.M));
  put("blocks.T", std::to_string(c.blocks.T));
  put("blocks.ell", std::to_string(c.blocks.ell));
  put("blocks.replicas", std::to_string(c.blocks.replicas));
  put("blocks.gammas", join(c.blocks.gammas));
  put("blocks.occupancy", c.blocks.occupancy ? "true" : "false");
  put("blocks.blocking", c.blocks.blocking ? "true" : "false");
  put("blocks.box_red", format_number(c.blocks.box_red));
  put("blocks.environment", join(c.blocks.environment));
  std::ostringstream os;
  pt::write_info(os, t);
  return os.str();
}

std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(kv, "override must look like key=value");
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

}  // namespace allelo
