#include "allelo/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "allelo/parallel.hpp"

namespace allelo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kInitialTag = 0xa11e1000'00000001ULL;

// In the gamma = infinity limit a frozen site thaws instantly.
void normalize_initial(Configuration& xi, const Thinning& th) {
  if (!th.gamma_infinite()) return;
  for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) {
    if (xi[x] == SiteState::frozen) xi[x] = SiteState::free;
  }
}

}  // namespace

EventEffect apply_event(Configuration& xi, const Event& e, const Thinning& th) {
  using S = SiteState;
  EventEffect eff;
  auto set = [&](Site x, S s) {
    eff.changed = x;
    eff.before = xi[x];
    eff.after = s;
    xi[x] = s;
  };
  switch (e.kind) {
    case EventKind::cross: {
      const S s = xi[e.site];
      if (s == S::red) set(e.site, S::free);
      else if (s == S::blue) set(e.site, th.gamma_infinite() ? S::free : S::frozen);
      break;
    }
    case EventKind::dot:
      if (xi[e.site] == S::frozen && th.dot_effective(e.coin)) set(e.site, S::free);
      break;
    case EventKind::arrow: {
      const S src = xi[e.site];
      const S tgt = xi[e.target];
      if (src == S::blue && th.blue_usable(e.coin) && (tgt == S::free || tgt == S::frozen)) {
        set(e.target, S::blue);
      } else if (src == S::red && th.red_usable(e.coin) && tgt == S::free) {
        set(e.target, S::red);
      }
      break;
    }
  }
  return eff;
}

Configuration apply_event(Configuration xi, const Event& e, const Params& p) {
  apply_event(xi, e, Thinning(p, base_rates_for(p)));
  return xi;
}

StateHistory::StateHistory(const Configuration& initial) : changes_(initial.size()) {
  for (Site x = 0; x < static_cast<Site>(initial.size()); ++x) {
    changes_[static_cast<std::size_t>(x)].push_back({-kInf, initial[x]});
  }
}

void StateHistory::record(Site x, double time, SiteState s) {
  changes_[static_cast<std::size_t>(x)].push_back({time, s});
}

SiteState StateHistory::state_at(Site x, double t) const {
  if (t > horizon_) throw std::out_of_range("state history does not reach time " + std::to_string(t));
  const auto& c = changes_.at(static_cast<std::size_t>(x));
  auto it = std::upper_bound(c.begin(), c.end(), t, [](double v, const Change& ch) { return v < ch.time; });
  return std::prev(it)->state;
}

SiteState StateHistory::state_before(Site x, double t) const {
  // Events before nextafter(horizon) are all within the horizon.
  if (t > std::nextafter(horizon_, std::numeric_limits<double>::infinity())) {
    throw std::out_of_range("state history does not reach time " + std::to_string(t));
  }
  const auto& c = changes_.at(static_cast<std::size_t>(x));
  auto it = std::lower_bound(c.begin(), c.end(), t, [](const Change& ch, double v) { return ch.time < v; });
  return std::prev(it)->state;
}

ForwardEngine::ForwardEngine(const GraphicalRep& rep, const Params& p, Configuration initial,
                             const std::vector<std::uint8_t>* mask)
    : rep_(&rep),
      thinning_(p, rep.rates()),
      xi_(std::move(initial)),
      mask_(mask),
      per_site_(static_cast<std::uint32_t>(rep.streams_per_site())),
      degree_(static_cast<std::uint32_t>(rep.domain().degree())) {
  if (!xi_.domain_ptr() || !xi_.domain().same_geometry(rep.domain())) {
    throw std::invalid_argument("initial configuration and representation live on different domains");
  }
  if (mask_ && mask_->size() != xi_.size()) throw std::invalid_argument("mask size differs from domain size");
  normalize_initial(xi_, thinning_);
  const std::size_t n = xi_.size();
  cursors_.resize(n * per_site_);
  heap_pos_.assign(n, -1);
  for (Site x = 0; x < static_cast<Site>(n); ++x) {
    if (participates(x)) ++counts_[static_cast<std::size_t>(xi_[x])];
    reschedule(x, 0.0);
  }
}

StreamId ForwardEngine::stream_id(Site x, std::uint32_t local) const {
  if (local < degree_) return {x, EventKind::arrow, local};
  return {x, local == degree_ ? EventKind::cross : EventKind::dot, 0};
}

void ForwardEngine::seek(Site x, std::uint32_t local, double t) { rep_->seek(stream_id(x, local), cursor(x, local), t); }

void ForwardEngine::reschedule(Site x, double now) {
  double best = kInf;
  std::uint32_t which = 0;
  const SiteState s = xi_[x];
  if (participates(x)) {
    if (s == SiteState::blue || s == SiteState::red) {
      for (std::uint32_t local = 0; local <= degree_; ++local) {
        seek(x, local, now);
        const double t = cursor(x, local).time;
        if (t < best) {
          best = t;
          which = local;
        }
      }
    } else if (s == SiteState::frozen && !thinning_.gamma_infinite()) {
      seek(x, degree_ + 1, now);
      best = cursor(x, degree_ + 1).time;
      which = degree_ + 1;
    }
  }
  heap_set(x, best, which);
}

bool ForwardEngine::heap_less(const Key& a, const Key& b) {
  if (a.time != b.time) return a.time < b.time;
  return a.site < b.site;
}

void ForwardEngine::heap_place(std::size_t i, const Key& k) {
  heap_[i] = k;
  heap_pos_[static_cast<std::size_t>(k.site)] = static_cast<std::int32_t>(i);
}

void ForwardEngine::heap_sift_up(std::size_t i, Key k) {
  while (i > 0) {
    const std::size_t parent = (i - 1) / 4;
    if (!heap_less(k, heap_[parent])) break;
    heap_place(i, heap_[parent]);
    i = parent;
  }
  heap_place(i, k);
}

void ForwardEngine::heap_sift_down(std::size_t i, Key k) {
  const std::size_t n = heap_.size();
  while (true) {
    const std::size_t first = 4 * i + 1;
    if (first >= n) break;
    std::size_t best = first;
    const std::size_t last = std::min(first + 4, n);
    for (std::size_t c = first + 1; c < last; ++c) {
      if (heap_less(heap_[c], heap_[best])) best = c;
    }
    if (!heap_less(heap_[best], k)) break;
    heap_place(i, heap_[best]);
    i = best;
  }
  heap_place(i, k);
}

void ForwardEngine::heap_set(Site x, double time, std::uint32_t local) {
  const auto xs = static_cast<std::size_t>(x);
  const std::int32_t pos = heap_pos_[xs];
  if (time == kInf) {
    if (pos < 0) return;
    const auto i = static_cast<std::size_t>(pos);
    const Key last = heap_.back();
    heap_.pop_back();
    heap_pos_[xs] = -1;
    if (i < heap_.size()) {
      if (heap_less(last, heap_[i])) {
        heap_sift_up(i, last);
      } else {
        heap_sift_down(i, last);
      }
    }
    return;
  }
  const Key k{time, x, local};
  if (pos < 0) {
    heap_.push_back(k);
    heap_sift_up(heap_.size() - 1, k);
    return;
  }
  const auto i = static_cast<std::size_t>(pos);
  if (heap_less(k, heap_[i])) {
    heap_sift_up(i, k);
  } else {
    heap_sift_down(i, k);
  }
}

double ForwardEngine::peek_time() const { return heap_.empty() ? kInf : heap_[0].time; }

bool ForwardEngine::step() {
  if (heap_.empty()) return false;
  const Key k = heap_[0];
  const Site x = k.site;
  const StreamCursor& c = cursor(x, k.local);
  Event e;
  e.time = k.time;
  e.site = x;
  e.coin = c.coin;
  if (k.local < degree_) {
    e.kind = EventKind::arrow;
    e.offset = k.local;
    e.target = rep_->domain().neighbor(x, k.local);
  } else {
    e.kind = k.local == degree_ ? EventKind::cross : EventKind::dot;
    e.target = x;
  }
  time_ = e.time;
  const SiteState source = xi_[x];
  last_effect_ = (e.kind == EventKind::arrow && !participates(e.target)) ? EventEffect{}
                                                                          : apply_event(xi_, e, thinning_);
  ++processed_;
  if (last_effect_.changed) {
    --counts_[static_cast<std::size_t>(last_effect_.before)];
    ++counts_[static_cast<std::size_t>(last_effect_.after)];
    if (history_) history_->record(*last_effect_.changed, time_, last_effect_.after);
  }
  seek(x, k.local, time_);
  reschedule(x, time_);
  if (last_effect_.changed && *last_effect_.changed != x) reschedule(*last_effect_.changed, time_);
  if (observer_) observer_(e, source, last_effect_);
  return true;
}

void ForwardEngine::advance_to(double t) {
  while (peek_time() <= t) step();
  time_ = std::max(time_, t);
  if (history_) history_->set_horizon(std::max(history_->horizon(), time_));
}

bool ForwardEngine::advance_until(double t, const std::function<bool()>& stop) {
  if (stop()) return true;
  while (peek_time() <= t) {
    step();
    if (stop()) {
      if (history_) history_->set_horizon(std::max(history_->horizon(), time_));
      return true;
    }
  }
  time_ = std::max(time_, t);
  if (history_) history_->set_horizon(std::max(history_->horizon(), time_));
  return false;
}

Sample take_sample(const ForwardEngine& engine) {
  Sample s;
  s.time = engine.time();
  s.count = engine.counts();
  std::size_t total = 0;
  for (auto c : s.count) total += c;
  for (std::size_t i = 0; i < kNumStates; ++i) {
    s.density[i] = total ? static_cast<double>(s.count[i]) / static_cast<double>(total) : 0.0;
  }
  return s;
}

Trajectory run(const Configuration& xi0, const GraphicalRep& rep, const Params& p, const RunOptions& options) {
  const auto& ts = options.sample_times;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 0.0 || ts[i] > rep.horizon()) throw std::invalid_argument("sample time outside [0, horizon]");
    if (i > 0 && ts[i] < ts[i - 1]) throw std::invalid_argument("sample times must be sorted");
  }
  for (double s : options.snapshot_times) {
    if (!std::binary_search(ts.begin(), ts.end(), s)) {
      throw std::invalid_argument("snapshot times must be among the sample times");
    }
  }
  ForwardEngine engine(rep, p, xi0, options.mask);
  if (options.history) {
    *options.history = StateHistory(engine.state());
    engine.set_history(options.history);
  }
  Trajectory traj;
  for (double t : ts) {
    engine.advance_to(t);
    traj.samples.push_back(take_sample(engine));
    if (std::binary_search(options.snapshot_times.begin(), options.snapshot_times.end(), t) &&
        (traj.snapshot_times.empty() || traj.snapshot_times.back() != t)) {
      traj.snapshot_times.push_back(t);
      traj.snapshots.push_back(engine.state());
    }
  }
  traj.blue_survived = engine.counts()[index_of(SiteState::blue)] > 0;
  traj.red_survived = engine.counts()[index_of(SiteState::red)] > 0;
  traj.events_processed = engine.events_processed();
  return traj;
}

Configuration replay(Configuration xi0, std::span<const Event> events, const Thinning& thinning, bool checked) {
  normalize_initial(xi0, thinning);
  for (const Event& e : events) {
    const EventEffect eff = apply_event(xi0, e, thinning);
    if (checked && eff.changed && !is_table_transition(eff.before, eff.after, thinning.gamma_infinite())) {
      throw std::logic_error(std::string("transition outside the rate table: ") + to_string(eff.before) + " -> " +
                             to_string(eff.after));
    }
  }
  return xi0;
}

void InitialSpec::validate() const {
  if (kind != InitialKind::product) return;
  double sum = 0.0;
  for (double d : densities) {
    if (!(d >= 0.0) || d > 1.0) throw std::invalid_argument("initial densities must lie in [0, 1]");
    sum += d;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("initial densities must sum to 1");
}

Site center_site(const Torus& torus) {
  std::vector<int> c;
  for (int s : torus.sides()) c.push_back(s / 2);
  return torus.index(c);
}

Configuration make_initial(const InitialSpec& spec, std::uint64_t seed, DomainPtr domain) {
  spec.validate();
  switch (spec.kind) {
    case InitialKind::all_blue: return Configuration(std::move(domain), SiteState::blue);
    case InitialKind::all_red: return Configuration(std::move(domain), SiteState::red);
    case InitialKind::single_seed: {
      Configuration xi(domain, SiteState::free);
      xi[center_site(domain->torus())] = spec.seed_state;
      return xi;
    }
    case InitialKind::product: break;
  }
  Configuration xi(domain, SiteState::free);
  const CounterRng rng = CounterRng(seed).split(kInitialTag);
  for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) {
    const double u = rng.uniform(static_cast<std::uint64_t>(x));
    double cdf = 0.0;
    int state = kNumStates - 1;
    for (int i = 0; i < kNumStates; ++i) {
      cdf += spec.densities[static_cast<std::size_t>(i)];
      if (u < cdf) {
        state = i;
        break;
      }
    }
    // Rounding may leave u above the last cumulative sum; pick the last
    // state with positive mass.
    while (spec.densities[static_cast<std::size_t>(state)] == 0.0 && state > 0) --state;
    xi[x] = static_cast<SiteState>(state);
  }
  return xi;
}

SurvivalEstimate survival_probability(const Params& p, SiteState species, const InitialSpec& init,
                                      const std::vector<int>& sides, double horizon, std::size_t replicas,
                                      std::uint64_t base_seed, unsigned threads) {
  if (replicas == 0) throw std::invalid_argument("survival estimate needs at least one replica");
  if (species != SiteState::blue && species != SiteState::red) {
    throw std::invalid_argument("survival is defined for blue or red only");
  }
  const DomainPtr domain = make_domain(sides, p.neighborhood);
  std::vector<std::uint8_t> alive(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t r) {
    const std::uint64_t seed = base_seed + r;
    const GraphicalRep rep = build_events(seed, p, domain, horizon);
    ForwardEngine engine(rep, p, make_initial(init, seed, domain));
    const auto i = static_cast<std::size_t>(species);
    engine.advance_until(horizon, [&] { return engine.counts()[i] == 0; });
    alive[r] = engine.counts()[i] > 0;
  });
  std::size_t k = 0;
  for (auto a : alive) k += a;
  return {wilson(k, replicas), horizon};
}

}  // namespace allelo
