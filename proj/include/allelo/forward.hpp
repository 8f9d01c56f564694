#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "allelo/graphical.hpp"
#include "allelo/lattice.hpp"
#include "allelo/stats.hpp"

namespace allelo {

/// Effect of one event on the configuration. `changed` is the site whose
/// state flipped, if any.
struct EventEffect {
  std::optional<Site> changed;
  SiteState before = SiteState::free;
  SiteState after = SiteState::free;
};

/// Applies one mark of the graphical representation in place.
EventEffect apply_event(Configuration& xi, const Event& e, const Thinning& thinning);

/// Value form, with the thinning of a representation built for `p` alone.
Configuration apply_event(Configuration xi, const Event& e, const Params& p);

/// Per-site record of state changes, for looking up xi_s(x) at past times.
class StateHistory {
 public:
  StateHistory() = default;
  explicit StateHistory(const Configuration& initial);

  void record(Site x, double time, SiteState s);

  /// State after all events with time <= t.
  SiteState state_at(Site x, double t) const;
  /// State after all events with time < t.
  SiteState state_before(Site x, double t) const;

  double horizon() const { return horizon_; }
  void set_horizon(double t) { horizon_ = t; }
  std::size_t size() const { return changes_.size(); }

 private:
  struct Change {
    double time;
    SiteState state;
  };
  std::vector<std::vector<Change>> changes_;
  double horizon_ = 0.0;
};

/// Event observer: called after each processed event with the source
/// state and the effect.
using EventObserver = std::function<void(const Event&, SiteState source, const EventEffect&)>;

/// Event-driven fold of the graphical representation.
///
/// Only marks that can change the configuration are visited: arrows and
/// crosses of occupied sites, dots of frozen sites. Each site's next relevant
/// mark lives in an indexed heap; stream cursors seek in O(1) expected time,
/// so idle streams (e.g. fast dots over unfrozen sites) cost nothing. The
/// result equals the left-to-right fold over events_in_order().
class ForwardEngine {
 public:
  /// `mask`, when given, marks the sites that take part (nonzero entries);
  /// marks touching any other site are suppressed.
  ForwardEngine(const GraphicalRep& rep, const Params& p, Configuration initial,
                const std::vector<std::uint8_t>* mask = nullptr);

  double time() const { return time_; }
  const Configuration& state() const { return xi_; }

  /// Counts over the participating sites.
  const std::array<std::size_t, kNumStates>& counts() const { return counts_; }

  /// Time of the next relevant mark, or +inf.
  double peek_time() const;

  /// Processes the next relevant mark. Returns false when none is left
  /// within the horizon.
  bool step();

  /// Processes every relevant mark with time <= t and sets the clock to t.
  void advance_to(double t);

  /// As advance_to, stopping early (right after the offending mark) once
  /// `stop` returns true. Returns true iff stopped early.
  bool advance_until(double t, const std::function<bool()>& stop);

  void set_observer(EventObserver obs) { observer_ = std::move(obs); }
  void set_history(StateHistory* history) { history_ = history; }

  const EventEffect& last_effect() const { return last_effect_; }
  std::uint64_t events_processed() const { return processed_; }

 private:
  struct Key {
    double time;
    Site site;
    std::uint32_t local;
  };

  StreamCursor& cursor(Site x, std::uint32_t local) { return cursors_[static_cast<std::size_t>(x) * per_site_ + local]; }
  StreamId stream_id(Site x, std::uint32_t local) const;
  void seek(Site x, std::uint32_t local, double t);
  void reschedule(Site x, double now);
  static bool heap_less(const Key& a, const Key& b);
  void heap_place(std::size_t i, const Key& k);
  void heap_sift_up(std::size_t i, Key k);
  void heap_sift_down(std::size_t i, Key k);
  void heap_set(Site x, double time, std::uint32_t local);
  bool participates(Site x) const { return mask_ == nullptr || (*mask_)[static_cast<std::size_t>(x)] != 0; }

  const GraphicalRep* rep_;
  Thinning thinning_;
  Configuration xi_;
  const std::vector<std::uint8_t>* mask_;
  std::uint32_t per_site_;
  std::uint32_t degree_;
  double time_ = 0.0;
  std::array<std::size_t, kNumStates> counts_{};
  std::vector<StreamCursor> cursors_;
  // 4-ary min-heap of per-site next marks, keyed by (time, site).
  std::vector<Key> heap_;
  std::vector<std::int32_t> heap_pos_;
  EventObserver observer_;
  StateHistory* history_ = nullptr;
  EventEffect last_effect_;
  std::uint64_t processed_ = 0;
};

struct Sample {
  double time = 0.0;
  std::array<double, kNumStates> density{};
  std::array<std::size_t, kNumStates> count{};
};

/// Densities and counts of the engine's participating sites at its clock.
Sample take_sample(const ForwardEngine& engine);

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<double> snapshot_times;
  std::vector<Configuration> snapshots;
  bool blue_survived = false;
  bool red_survived = false;
  std::uint64_t events_processed = 0;
};

struct RunOptions {
  std::vector<double> sample_times;
  /// Must be a subset of sample_times.
  std::vector<double> snapshot_times;
  const std::vector<std::uint8_t>* mask = nullptr;
  StateHistory* history = nullptr;
};

/// Forward evolution from xi0, sampled post-event at each sample time.
Trajectory run(const Configuration& xi0, const GraphicalRep& rep, const Params& p, const RunOptions& options);

/// Literal left-to-right fold over a time-sorted event list; the reference
/// the event-driven engine is checked against. With `checked`, every flip
/// is verified against the rate table.
Configuration replay(Configuration xi0, std::span<const Event> events, const Thinning& thinning,
                     bool checked = false);

enum class InitialKind { all_blue, all_red, product, single_seed };

struct InitialSpec {
  InitialKind kind = InitialKind::product;
  std::array<double, kNumStates> densities{0.0, 0.5, 0.5, 0.0};
  SiteState seed_state = SiteState::blue;

  /// True for kinds whose law is invariant under lattice translations.
  bool translation_invariant() const { return kind != InitialKind::single_seed; }
  void validate() const;
};

/// Initial configuration; product draws are keyed by (seed, site). A
/// single seed sits at the torus center.
Configuration make_initial(const InitialSpec& spec, std::uint64_t seed, DomainPtr domain);

Site center_site(const Torus& torus);

struct SurvivalEstimate {
  Proportion estimate;
  double horizon = 0.0;
};

/// Fraction of replicas whose species-i set is nonempty at the horizon.
/// Replica r uses seed base_seed + r for both the events and the initial draw.
SurvivalEstimate survival_probability(const Params& p, SiteState species, const InitialSpec& init,
                                      const std::vector<int>& sides, double horizon, std::size_t replicas,
                                      std::uint64_t base_seed = 0, unsigned threads = 1);

}  // namespace allelo
