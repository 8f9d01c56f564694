#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "allelo/forward.hpp"

namespace allelo {

/// True iff {a = red} is inside {b = red} and {b = blue} is inside {a = blue}:
/// `a` has more blue and less red than `b`.
bool check_domination(const Configuration& a, const Configuration& b);

/// First site (in index order) where domination of b by a fails.
std::optional<Site> domination_violation(const Configuration& a, const Configuration& b);

/// Site-wise form of check_domination.
inline bool dominates_at(SiteState a, SiteState b) {
  return !(a == SiteState::red && b != SiteState::red) && !(b == SiteState::blue && a != SiteState::blue);
}

enum class VariedParameter { none, lambda1, lambda2, gamma };

const char* to_string(VariedParameter v);

/// An ordered comparable pair: variant `upper` should dominate `lower`
/// (smaller gamma, larger lambda1 or smaller lambda2 is the upper one).
struct ComparablePair {
  std::size_t upper = 0;
  std::size_t lower = 0;
  VariedParameter parameter = VariedParameter::none;
};

/// Pairs differing in at most one of lambda1, lambda2, gamma (gamma = infinity
/// counts as the largest gamma); identical variants pair up once.
std::vector<ComparablePair> comparable_pairs(std::span<const Params> variants);

struct Violation {
  double time = 0.0;
  Site site = 0;
};

struct PairVerdict {
  ComparablePair pair;
  /// One entry per sample time.
  std::vector<bool> holds;
  /// Number of event times at which the pair was checked.
  std::uint64_t event_checks = 0;
  std::optional<Violation> first_violation;
};

struct CoupleOptions {
  std::vector<double> sample_times;
  std::vector<double> snapshot_times;
  /// Fold the variants in lockstep and check every comparable pair after
  /// every event time, not only at the samples.
  bool check_event_times = false;
  unsigned threads = 1;
};

struct CoupledRun {
  std::uint64_t seed = 0;
  std::vector<Params> variants;
  BaseRates rates;
  double horizon = 0.0;
  std::vector<double> sample_times;
  std::vector<Trajectory> trajectories;
  std::vector<PairVerdict> verdicts;
  bool event_times_checked = false;

  bool all_hold() const;
};

/// Folds every variant over one shared representation whose rates host all
/// of them, from the same initial configuration.
CoupledRun couple(const GraphicalRep& rep, std::span<const Params> variants, const Configuration& xi0,
                  const CoupleOptions& options);

/// As above, building the shared representation from `seed`.
CoupledRun couple(std::uint64_t seed, std::span<const Params> variants, const Configuration& xi0, double horizon,
                  const CoupleOptions& options);

/// JSON report: variants, per-pair per-sample verdicts and first violations.
std::string coupling_report_json(const CoupledRun& run);

}  // namespace allelo
