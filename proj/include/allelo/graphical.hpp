#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "allelo/lattice.hpp"
#include "allelo/random.hpp"

namespace allelo {

enum class EventKind : std::uint8_t { arrow = 0, cross = 1, dot = 2 };

const char* to_string(EventKind k);

/// One mark of the graphical representation. Arrows go site -> target
/// along neighborhood offset `offset`; crosses and dots ignore target/offset.
/// Crosses carry no coin (coin == 0).
struct Event {
  double time = 0.0;
  EventKind kind = EventKind::cross;
  Site site = 0;
  Site target = 0;
  std::uint32_t offset = 0;
  double coin = 0.0;

  bool operator==(const Event&) const = default;
};

/// Deterministic total order: time, then site, kind, offset.
bool event_before(const Event& a, const Event& b);

enum class ArrowLabel { both_species, blue_only, red_only };

const char* to_string(ArrowLabel l);

/// Coin thinning of an arrow drawn at rate max(lambda1, lambda2).
ArrowLabel arrow_species_label(double u, double lambda1, double lambda2);

/// Base rates of the shared event streams. `arrow` is the total arrow rate
/// per site (split evenly over the offsets), `dot` the dot rate per site.
/// Crosses always run at rate 1.
struct BaseRates {
  double arrow = 1.0;
  double dot = 1.0;

  bool operator==(const BaseRates&) const = default;
};

BaseRates base_rates_for(const Params& p);
/// Smallest base rates able to host every variant by thinning.
BaseRates base_rates_for(std::span<const Params> variants);

/// Per-variant reading of the shared coins. An arrow is usable by species i
/// iff u >= 1 - lambda_i / arrow_rate; a dot acts iff u < gamma / dot_rate.
class Thinning {
 public:
  Thinning(const Params& p, const BaseRates& base);

  bool blue_usable(double u) const { return u >= blue_threshold_; }
  bool red_usable(double u) const { return u >= red_threshold_; }
  bool arrow_usable(double u) const { return u >= min_threshold_; }
  bool dot_effective(double u) const { return !gamma_infinite_ && u < dot_accept_; }
  bool gamma_infinite() const { return gamma_infinite_; }

 private:
  double blue_threshold_;
  double red_threshold_;
  double min_threshold_;
  double dot_accept_;
  bool gamma_infinite_;
};

struct StreamId {
  Site site = 0;
  EventKind kind = EventKind::cross;
  std::uint32_t offset = 0;
};

struct StreamEvent {
  double time = 0.0;
  double coin = 0.0;
};

/// Expected number of events per block.
inline constexpr double kBlockMean = 8.0;
inline constexpr std::size_t kMaxBlockEvents = 64;

/// Events of one stream inside one time block, sorted by time.
struct BlockEvents {
  std::uint32_t count = 0;
  std::array<StreamEvent, kMaxBlockEvents> ev{};
};

/// Forward-only position in one stream; `time` is the current event, or
/// +inf once the stream is exhausted within the horizon.
struct StreamCursor {
  std::int64_t block = -1;
  std::uint32_t index = 0;
  std::uint64_t key = 0;
  double time = -1.0;
  double coin = 0.0;
};

/// The Harris graphical representation on a finite torus.
///
/// Every stream (site, kind, offset) is a Poisson process. Time is cut into
/// blocks of width kBlockMean/rate; inside block b the gaps are exponential draws of a
/// counter generator keyed by (seed, site, kind, offset, b), so any stream can
/// be queried at any time window without generating anything else. The object
/// is immutable and safe to share between threads.
class GraphicalRep {
 public:
  GraphicalRep(std::uint64_t seed, DomainPtr domain, BaseRates rates, double horizon);

  /// Representation backed by an explicit event list (e.g. an imported log).
  static GraphicalRep from_events(DomainPtr domain, BaseRates rates, double horizon,
                                  std::vector<Event> events);

  std::uint64_t seed() const { return seed_; }
  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const BaseRates& rates() const { return rates_; }
  double horizon() const { return horizon_; }
  bool is_procedural() const { return table_ == nullptr; }

  /// Rate of a single stream of the given kind.
  double stream_rate(EventKind kind) const;
  double block_width(EventKind kind) const { return kBlockMean / stream_rate(kind); }

  /// Events of block b, ignoring the horizon.
  BlockEvents block(const StreamId& id, std::int64_t b) const;

  /// Moves the cursor to the first event with time > t. A cursor already
  /// past t is left alone.
  void seek(const StreamId& id, StreamCursor& c, double t) const;

  /// Events with t0 < time <= min(t1, horizon).
  std::vector<StreamEvent> stream(const StreamId& id, double t0, double t1) const;

  /// First event strictly after t (and within the horizon).
  std::optional<StreamEvent> next_after(const StreamId& id, double t) const;

  /// Last event strictly before t.
  std::optional<StreamEvent> last_before(const StreamId& id, double t) const;

  /// All events with time in [t0, t1] (clipped to the horizon), in event_before order.
  std::vector<Event> events_in_order(double t0, double t1) const;
  std::vector<Event> events_in_order() const { return events_in_order(0.0, horizon_); }

  std::size_t streams_per_site() const { return domain_->degree() + 2; }

 private:
  GraphicalRep() = default;

  std::size_t slot(const StreamId& id) const;
  std::uint64_t block_key(const StreamId& id, std::int64_t b) const;

  std::uint64_t seed_ = 0;
  DomainPtr domain_;
  BaseRates rates_;
  double horizon_ = 0.0;
  CounterRng root_{0};
  // Imported representation: per-stream sorted events.
  std::shared_ptr<const std::vector<std::vector<StreamEvent>>> table_;
};

/// Representation for a single parameter set: arrows at rate max(lambda1, lambda2)
/// and dots at rate gamma.
GraphicalRep build_events(std::uint64_t seed, const Params& p, DomainPtr domain, double horizon);

/// Newline-delimited log: `time kind site [target u]` with 17 significant
/// digits. Dots carry their coin as `time dot site u`. Header lines start
/// with '#'.
void write_event_log(std::ostream& os, const GraphicalRep& rep);

struct EventLog {
  BaseRates rates;
  double horizon = 0.0;
  std::vector<Event> events;
};

EventLog read_event_log(std::istream& is, const Domain& domain);

}  // namespace allelo
