#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "allelo/forward.hpp"
#include "allelo/stats.hpp"

namespace allelo {

/// Per-site view of the marks a dual walk needs: crosses, arrows pointing
/// into the site, and dots that act for the variant. Sites are loaded on
/// first use, so a query touches only its dual cone.
class DualIndex {
 public:
  struct InArrow {
    double time;
    Site source;
    double coin;
  };

  DualIndex(const GraphicalRep& rep, const Params& p);

  const GraphicalRep& rep() const { return *rep_; }
  const Thinning& thinning() const { return thinning_; }

  /// Sorted cross times at x.
  const std::vector<double>& crosses(Site x) { return load(x).crosses; }
  /// Arrows into x usable by at least one species, sorted by time.
  const std::vector<InArrow>& arrows_in(Site x) { return load(x).arrows; }
  /// Sorted times of the dots at x that act for this variant.
  const std::vector<double>& dots(Site x) { return load(x).dots; }

  /// Number of crosses at x strictly before t; also the index of the cross
  /// segment containing t.
  std::size_t segment_of(Site x, double t);
  /// Start of segment k: 0 or the time of cross k-1.
  double segment_start(Site x, std::size_t k);

 private:
  struct SiteMarks {
    bool loaded = false;
    std::vector<double> crosses;
    std::vector<InArrow> arrows;
    std::vector<double> dots;
  };
  SiteMarks& load(Site x);

  const GraphicalRep* rep_;
  Thinning thinning_;
  std::vector<SiteMarks> sites_;
};

/// Reachability and hierarchy search above a fixed floor time.
///
/// The ancestor hierarchy of (x, t) down to the floor f lists, in order:
/// the straight path {x} x (f, t) when it holds no cross, then for every
/// arrow into x after its last cross, by increasing forward time (deepest in
/// dual time first), the hierarchy of the arrow's source point. This is the
/// order in which the members decide the color of (x, t).
class DualSearch {
 public:
  DualSearch(DualIndex& index, double floor);

  double floor() const { return floor_; }

  /// True iff a dual path runs from (x, t) down to the floor.
  bool reaches_floor(Site x, double t);

  /// Earliest forward time reached by the dual of (x, t): the floor when
  /// it survives, otherwise the cross that ends the last branch.
  double lowest_time(Site x, double t);

  struct Hop {
    Site source;
    double time;
  };
  /// Arrows of the first member of the hierarchy, from the top; nullopt if
  /// no path reaches the floor.
  std::optional<std::vector<Hop>> first_path(Site x, double t);

  DualIndex& index() { return *index_; }

 private:
  struct Segment {
    std::size_t next_arrow = 0;
    bool started = false;
    double success = -1.0;
  };
  Segment& segment(Site x, std::size_t k);

  DualIndex* index_;
  double floor_;
  std::vector<std::vector<Segment>> memo_;
};

struct DualNode {
  Site site = 0;
  /// Dual time t - forward time.
  double s = 0.0;
  /// Index of the parent node; -1 for the root.
  std::int64_t parent = -1;
  /// True for the end of a straight path on the floor.
  bool on_floor = false;
};

/// The explored dual tree of (x, t) down to dual depth `depth`, nodes in
/// hierarchy order. A point already explored up to a later time is not
/// explored again, so each ancestor appears once at its first position.
struct DualTree {
  Site root = 0;
  double t = 0.0;
  double depth = 0.0;
  std::vector<DualNode> nodes;
  /// Distinct sites on the floor, in hierarchy order.
  std::vector<Site> ancestors;
};

DualTree dual_tree(DualIndex& index, Site x, double t, double s);

/// Ordered ancestor set of (x, t) at dual time s; the first one is the
/// distinguished particle.
std::vector<Site> dual_ancestors(const GraphicalRep& rep, const Params& p, Site x, double t, double s);

/// Line format: `node site s parent-order`, header lines start with '#'.
void write_dual_tree(std::ostream& os, const DualTree& tree);
DualTree read_dual_tree(std::istream& is);

struct ArrowRecord {
  Site source = 0;
  /// Forward time of the arrow and its dual time t - time.
  double time = 0.0;
  double s = 0.0;
  /// Forward time of the last cross at the source before the arrow, if any
  /// lies above the floor; its dual time is the lower tree's root.
  std::optional<double> last_cross;
  SiteState source_state = SiteState::free;
};

struct DistinguishedPath {
  Site root = 0;
  double t = 0.0;
  std::vector<ArrowRecord> arrows;
  /// Number of arrows whose source is frozen just before the arrow.
  std::size_t frozen_visits = 0;
  /// True if no dual path reaches time 0; the path then ends at the dual
  /// time `died_at` where the last branch dies.
  bool died = false;
  double died_at = 0.0;
};

/// Follows the first member of the hierarchy of (x, t) from the top. The
/// states of the sources come from the forward history.
DistinguishedPath distinguished_path(DualIndex& index, Site x, double t, const StateHistory& forward);

struct LowerTree {
  std::size_t n = 0;
  Site site = 0;
  /// Root of the tree: forward time of the cross and its dual time.
  double root_time = 0.0;
  double root_s = 0.0;
  bool survives = false;
  bool dot_free = false;
  bool favorable = false;
};

/// Lower trees rooted at the last cross below each arrow of the path.
/// Survival means reaching dual depth `dual_horizon` (forward time
/// t - dual_horizon); arrows without a cross below get no tree.
std::vector<LowerTree> lower_trees(DualIndex& index, const DistinguishedPath& path, double dual_horizon);

struct FavorabilityCheck {
  double gamma = 0.0;
  double lambda = 0.0;
  Proportion empirical;
  double cross_first = 0.0;       // 1 / (1 + gamma)
  double birth_first = 0.0;       // lambda / (lambda + gamma)
  double printed = 0.0;           // lambda / (gamma (lambda + gamma))
};

/// Fraction of samples whose backward wait to the last cross is shorter
/// than the wait to the last dot, on single-site representations.
FavorabilityCheck favorability_rate_check(double lambda, double gamma, std::size_t samples,
                                          std::uint64_t base_seed = 0);

/// Color of (x, t) from the dual, with memoized walks; reusable across
/// queries on the same representation and initial state.
class ColorResolver {
 public:
  /// With `frozen_states`, the frozen/free status of target sites is read
  /// from that forward history instead of being derived from the dual.
  ColorResolver(const GraphicalRep& rep, const Params& p, Configuration xi0,
                const StateHistory* frozen_states = nullptr);

  /// State after all marks with time <= t.
  SiteState state_at(Site x, double t);
  /// State after all marks with time < t.
  SiteState state_before(Site x, double t);

  /// Ancestor walks started so far (each memoized segment counts once).
  std::size_t segments_walked() const { return walked_; }

 private:
  struct Walk {
    bool init = false;
    SiteState start = SiteState::free;
    double thaw = 0.0;
    bool thawed = false;
    SiteState color = SiteState::free;
    double settled = 0.0;
    bool is_settled = false;
    std::size_t next_arrow = 0;
    std::size_t next_dot = 0;
  };
  struct Need {
    Site x;
    double t;
  };

  Walk& walk(Site x, std::size_t k);
  bool frozen_at(Site x, const Walk& w, double t) const;
  /// Time of the next unprocessed mark in the walk; infinity when done.
  double pending(Site x, std::size_t k, const Walk& w);
  /// Answers from the memo alone, if it already decides the state.
  bool peek(Site x, double t, SiteState& out);
  std::optional<Need> advance(Site x, double t, SiteState& out);

  DualIndex index_;
  Configuration xi0_;
  const StateHistory* history_;
  std::vector<std::vector<Walk>> walks_;
  std::size_t walked_ = 0;
};

/// One-shot form of ColorResolver::state_at.
SiteState determine_color(const GraphicalRep& rep, const Params& p, const Configuration& xi0, Site x, double t);

}  // namespace allelo
