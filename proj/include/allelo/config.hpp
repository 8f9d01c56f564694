#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "allelo/coupling.hpp"
#include "allelo/format.hpp"
#include "allelo/forward.hpp"
#include "allelo/meanfield.hpp"

namespace allelo {

enum class Mode { simulate, couple, dual_check, meanfield, sweep, blocks };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Configuration error tied to one key path, e.g. "params.gamma".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SimulateConfig {
  double sample_every = 1.0;
  /// Times of the PGM snapshots; defaults to the horizon alone.
  std::vector<double> snapshots;
  bool operator==(const SimulateConfig&) const = default;
};

struct CoupleConfig {
  VariedParameter vary = VariedParameter::gamma;
  /// Values of the varied parameter, one variant each; +inf is allowed for gamma.
  std::vector<double> values{0.05, 0.5};
  double sample_every = 1.0;
  bool event_times = false;
  bool operator==(const CoupleConfig&) const = default;
};

struct DualCheckConfig {
  std::size_t queries = 100;
  /// Dual horizon of the lower trees; 0 means the query time.
  double dual_horizon = 0.0;
  std::size_t favorability_samples = 10000;
  bool operator==(const DualCheckConfig&) const = default;
};

struct MeanfieldConfig {
  meanfield::Form form = meanfield::Form::corrected;
  double dt = 0.01;
  double T = 100.0;
  double record_every = 1.0;
  std::array<double, 4> start{0.25, 0.25, 0.25, 0.25};
  bool operator==(const MeanfieldConfig&) const = default;
};

/// Cartesian grid of mean-field parameter points; empty lists default to
/// the single value in params.
struct SweepConfig {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> gamma;
  bool operator==(const SweepConfig&) const = default;
};

struct BlocksConfig {
  int L = 20;
  int M = 3;
  /// 0 selects the default L^2.
  int T = 0;
  /// 0 selects the default max(1, round(L^0.1)).
  int ell = 0;
  std::size_t replicas = 200;
  std::vector<double> gammas{0.1, 1.0, 10.0, 100.0};
  bool occupancy = true;
  bool blocking = true;
  double box_red = 0.5;
  std::array<double, kNumStates> environment{0.98, 0.02, 0.0, 0.0};
  bool operator==(const BlocksConfig&) const = default;
};

struct RunConfig {
  Mode mode = Mode::simulate;
  std::uint64_t seed = 0;
  Params params{};
  std::vector<int> sides{200, 200};
  double horizon = 50.0;
  InitialSpec initial{};
  std::string output;

  SimulateConfig simulate;
  CoupleConfig couple;
  DualCheckConfig dual_check;
  MeanfieldConfig meanfield;
  SweepConfig sweep;
  BlocksConfig blocks;

  bool operator==(const RunConfig& o) const;
};

/// Overrides as (key path, value) pairs, applied on top of the file.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses the key-value tree text format (Boost INFO syntax). Unknown keys,
/// malformed values and violated constraints throw ConfigError. Decimal
/// commas ("1,96") read as decimal points.
RunConfig parse_config(std::istream& is, const Overrides& overrides = {});
RunConfig parse_config_string(const std::string& text, const Overrides& overrides = {});
RunConfig parse_config_file(const std::string& path, const Overrides& overrides = {});

/// Every field, defaults resolved, in a form parse_config reads back to an
/// equal RunConfig.
std::string resolved_config(const RunConfig& cfg);

/// Splits "key=value".
std::pair<std::string, std::string> split_override(const std::string& kv);

}  // namespace allelo
