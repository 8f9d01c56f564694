#include "allelo/graphical.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace allelo {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::arrow: return "arrow";
    case EventKind::cross: return "cross";
    case EventKind::dot: return "dot";
  }
  return "?";
}

const char* to_string(ArrowLabel l) {
  switch (l) {
    case ArrowLabel::both_species: return "both";
    case ArrowLabel::blue_only: return "blue-only";
    case ArrowLabel::red_only: return "red-only";
  }
  return "?";
}

bool event_before(const Event& a, const Event& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.site != b.site) return a.site < b.site;
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.offset < b.offset;
}

ArrowLabel arrow_species_label(double u, double lambda1, double lambda2) {
  if (lambda1 >= lambda2) {
    return u < (lambda1 - lambda2) / lambda1 ? ArrowLabel::blue_only : ArrowLabel::both_species;
  }
  return u < (lambda2 - lambda1) / lambda2 ? ArrowLabel::red_only : ArrowLabel::both_species;
}

BaseRates base_rates_for(const Params& p) {
  return base_rates_for(std::span<const Params>(&p, 1));
}

BaseRates base_rates_for(std::span<const Params> variants) {
  BaseRates r{0.0, 0.0};
  for (const auto& p : variants) {
    p.validate();
    r.arrow = std::max({r.arrow, p.lambda1, p.lambda2});
    if (!p.gamma_infinite) r.dot = std::max(r.dot, p.gamma);
  }
  if (!(r.arrow > 0.0)) throw std::invalid_argument("at least one birth rate must be positive");
  // All variants at gamma = infinity: dots never act, any positive rate will do.
  if (r.dot == 0.0) r.dot = 1.0;
  return r;
}

Thinning::Thinning(const Params& p, const BaseRates& base) : gamma_infinite_(p.gamma_infinite) {
  p.validate();
  constexpr double slack = 1e-12;
  if (p.lambda1 > base.arrow * (1 + slack) || p.lambda2 > base.arrow * (1 + slack)) {
    throw std::invalid_argument("birth rate exceeds the arrow rate of the representation");
  }
  if (!p.gamma_infinite && p.gamma > base.dot * (1 + slack)) {
    throw std::invalid_argument("gamma exceeds the dot rate of the representation");
  }
  blue_threshold_ = p.lambda1 >= base.arrow ? 0.0 : 1.0 - p.lambda1 / base.arrow;
  red_threshold_ = p.lambda2 >= base.arrow ? 0.0 : 1.0 - p.lambda2 / base.arrow;
  min_threshold_ = std::min(blue_threshold_, red_threshold_);
  dot_accept_ = p.gamma_infinite ? 0.0 : (p.gamma >= base.dot ? 1.0 : p.gamma / base.dot);
}

namespace {

// Uniform on the open interval (0, 1).
double open_uniform(const CounterRng& rng, std::uint64_t counter) {
  return (static_cast<double>(rng.bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// cur + gap, nudged up when the gap is below the resolution of cur.
double advance_time(double cur, double gap, double hi) {
  const double next = cur + gap;
  return next > cur ? next : std::nextafter(cur, hi);
}

std::int64_t block_of(double t, double width) {
  return static_cast<std::int64_t>(std::floor(std::max(t, 0.0) / width));
}

}  // namespace

GraphicalRep::GraphicalRep(std::uint64_t seed, DomainPtr domain, BaseRates rates, double horizon)
    : seed_(seed), domain_(std::move(domain)), rates_(rates), horizon_(horizon), root_(seed) {
  if (!domain_) throw std::invalid_argument("graphical representation needs a domain");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
  if (!(rates.arrow > 0.0)) throw std::invalid_argument("arrow rate must be positive");
  if (!(rates.dot > 0.0)) throw std::invalid_argument("dot rate must be positive");
}

GraphicalRep GraphicalRep::from_events(DomainPtr domain, BaseRates rates, double horizon,
                                       std::vector<Event> events) {
  GraphicalRep rep(0, std::move(domain), rates, horizon);
  const Domain& dom = *rep.domain_;
  auto table = std::make_shared<std::vector<std::vector<StreamEvent>>>(dom.size() * rep.streams_per_site());
  for (const Event& e : events) {
    if (e.site < 0 || static_cast<std::size_t>(e.site) >= dom.size()) {
      throw std::invalid_argument("event site out of range");
    }
    if (!(e.time > 0.0) || e.time > horizon) throw std::invalid_argument("event time outside (0, horizon]");
    if (!(e.coin >= 0.0 && e.coin < 1.0)) throw std::invalid_argument("event coin outside [0, 1)");
    if (e.kind == EventKind::arrow) {
      if (e.offset >= dom.degree() || dom.neighbor(e.site, e.offset) != e.target) {
        throw std::invalid_argument("arrow target is not a neighbor along its offset");
      }
    }
    StreamId id{e.site, e.kind, e.kind == EventKind::arrow ? e.offset : 0};
    (*table)[rep.slot(id)].push_back({e.time, e.coin});
  }
  for (auto& s : *table) {
    std::sort(s.begin(), s.end(), [](const StreamEvent& a, const StreamEvent& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!(s[i - 1].time < s[i].time)) throw std::invalid_argument("duplicate event time within a stream");
    }
  }
  rep.table_ = std::move(table);
  return rep;
}

double GraphicalRep::stream_rate(EventKind kind) const {
  switch (kind) {
    case EventKind::arrow: return rates_.arrow / static_cast<double>(domain_->degree());
    case EventKind::cross: return 1.0;
    case EventKind::dot: return rates_.dot;
  }
  return 1.0;
}

std::size_t GraphicalRep::slot(const StreamId& id) const {
  std::size_t local = 0;
  switch (id.kind) {
    case EventKind::arrow: local = id.offset; break;
    case EventKind::cross: local = domain_->degree(); break;
    case EventKind::dot: local = domain_->degree() + 1; break;
  }
  return static_cast<std::size_t>(id.site) * streams_per_site() + local;
}

std::uint64_t GraphicalRep::block_key(const StreamId& id, std::int64_t b) const {
  const std::uint64_t stream_tag = (static_cast<std::uint64_t>(id.kind) << 32) | id.offset;
  return root_.split(static_cast<std::uint64_t>(id.site)).split(stream_tag).split(static_cast<std::uint64_t>(b)).key();
}

BlockEvents GraphicalRep::block(const StreamId& id, std::int64_t b) const {
  BlockEvents out;
  const double w = block_width(id.kind);
  const double lo = static_cast<double>(b) * w;
  const double hi = static_cast<double>(b + 1) * w;
  if (table_) {
    const auto& s = (*table_)[slot(id)];
    auto it = std::lower_bound(s.begin(), s.end(), lo, [](const StreamEvent& e, double t) { return e.time < t; });
    for (; it != s.end() && it->time < hi; ++it) {
      if (out.count == kMaxBlockEvents) throw std::runtime_error("imported stream too dense for its rate");
      out.ev[out.count++] = *it;
    }
    return out;
  }
  const CounterRng rng = CounterRng::from_key(block_key(id, b));
  const double mean_gap = 1.0 / stream_rate(id.kind);
  double cur = lo;
  for (std::uint32_t j = 0;; ++j) {
    const double next = advance_time(cur, -std::log(open_uniform(rng, 2 * j)) * mean_gap, hi);
    if (next >= hi) break;
    if (out.count == kMaxBlockEvents) throw std::runtime_error("stream block overflow");
    cur = next;
    out.ev[out.count++] = {cur, id.kind == EventKind::cross ? 0.0 : rng.uniform(2 * j + 1)};
  }
  return out;
}

void GraphicalRep::seek(const StreamId& id, StreamCursor& c, double t) const {
  if (c.time > t) return;
  if (t >= horizon_) {
    c.time = kInf;
    return;
  }
  if (table_) {
    const auto& s = (*table_)[slot(id)];
    const std::size_t from = c.block < 0 ? 0 : c.index;
    c.block = 0;
    auto it = std::upper_bound(s.begin() + static_cast<std::ptrdiff_t>(from), s.end(), t,
                               [](double v, const StreamEvent& e) { return v < e.time; });
    c.index = static_cast<std::uint32_t>(it - s.begin());
    if (it == s.end()) {
      c.time = kInf;
    } else {
      c.time = it->time;
      c.coin = it->coin;
    }
    return;
  }
  const double w = block_width(id.kind);
  const double mean_gap = 1.0 / stream_rate(id.kind);
  const std::int64_t target = block_of(t, w);
  double cur = c.time;
  if (c.block < target) {
    c.block = target;
    c.index = 0;
    c.key = block_key(id, target);
    cur = static_cast<double>(target) * w;
  }
  while (true) {
    const double hi = static_cast<double>(c.block + 1) * w;
    const CounterRng rng = CounterRng::from_key(c.key);
    while (true) {
      const double next = advance_time(cur, -std::log(open_uniform(rng, 2 * c.index)) * mean_gap, hi);
      if (next >= hi) break;
      const std::uint32_t j = c.index++;
      cur = next;
      if (cur > t) {
        if (cur > horizon_) {
          c.time = kInf;
        } else {
          c.time = cur;
          c.coin = id.kind == EventKind::cross ? 0.0 : rng.uniform(2 * j + 1);
        }
        return;
      }
    }
    ++c.block;
    c.index = 0;
    c.key = block_key(id, c.block);
    cur = static_cast<double>(c.block) * w;
    if (cur > horizon_) {
      c.time = kInf;
      return;
    }
  }
}

std::vector<StreamEvent> GraphicalRep::stream(const StreamId& id, double t0, double t1) const {
  std::vector<StreamEvent> out;
  const double hi = std::min(t1, horizon_);
  if (!(hi > t0)) return out;
  StreamCursor c;
  for (seek(id, c, t0); c.time <= hi; seek(id, c, c.time)) out.push_back({c.time, c.coin});
  return out;
}

std::optional<StreamEvent> GraphicalRep::next_after(const StreamId& id, double t) const {
  StreamCursor c;
  seek(id, c, t);
  if (c.time == kInf) return std::nullopt;
  return StreamEvent{c.time, c.coin};
}

std::optional<StreamEvent> GraphicalRep::last_before(const StreamId& id, double t) const {
  const double w = block_width(id.kind);
  const double cap = std::min(t, horizon_);
  if (!(cap > 0.0)) return std::nullopt;
  for (std::int64_t b = block_of(cap, w); b >= 0; --b) {
    const BlockEvents be = block(id, b);
    for (std::uint32_t j = be.count; j-- > 0;) {
      if (be.ev[j].time < t && be.ev[j].time <= horizon_) return be.ev[j];
    }
  }
  return std::nullopt;
}

std::vector<Event> GraphicalRep::events_in_order(double t0, double t1) const {
  std::vector<Event> out;
  const double hi = std::min(t1, horizon_);
  if (hi < t0) return out;
  const double lo = std::nextafter(t0, -1.0);
  const Domain& dom = *domain_;
  for (std::size_t s = 0; s < dom.size(); ++s) {
    const Site site = static_cast<Site>(s);
    for (std::uint32_t k = 0; k < dom.degree(); ++k) {
      for (const auto& e : stream({site, EventKind::arrow, k}, lo, hi)) {
        out.push_back({e.time, EventKind::arrow, site, dom.neighbor(site, k), k, e.coin});
      }
    }
    for (const auto& e : stream({site, EventKind::cross, 0}, lo, hi)) {
      out.push_back({e.time, EventKind::cross, site, site, 0, 0.0});
    }
    for (const auto& e : stream({site, EventKind::dot, 0}, lo, hi)) {
      out.push_back({e.time, EventKind::dot, site, site, 0, e.coin});
    }
  }
  std::sort(out.begin(), out.end(), event_before);
  return out;
}

GraphicalRep build_events(std::uint64_t seed, const Params& p, DomainPtr domain, double horizon) {
  return GraphicalRep(seed, std::move(domain), base_rates_for(p), horizon);
}

void write_event_log(std::ostream& os, const GraphicalRep& rep) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "# allelo-events v1\n";
  os << "# arrow_rate " << rep.rates().arrow << "\n";
  os << "# dot_rate " << rep.rates().dot << "\n";
  os << "# horizon " << rep.horizon() << "\n";
  for (const Event& e : rep.events_in_order()) {
    os << e.time << ' ' << to_string(e.kind) << ' ' << e.site;
    if (e.kind == EventKind::arrow) os << ' ' << e.target << ' ' << e.coin;
    if (e.kind == EventKind::dot) os << ' ' << e.coin;
    os << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

EventLog read_event_log(std::istream& is, const Domain& domain) {
  EventLog log;
  bool have_arrow = false, have_dot = false, have_horizon = false;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("event log line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      double v = 0;
      ls >> hash >> key;
      if (key == "arrow_rate" && ls >> v) { log.rates.arrow = v; have_arrow = true; }
      else if (key == "dot_rate" && ls >> v) { log.rates.dot = v; have_dot = true; }
      else if (key == "horizon" && ls >> v) { log.horizon = v; have_horizon = true; }
      continue;
    }
    Event e;
    std::string kind;
    if (!(ls >> e.time >> kind >> e.site)) fail("expected `time kind site`");
    if (e.site < 0 || static_cast<std::size_t>(e.site) >= domain.size()) fail("site out of range");
    if (kind == "arrow") {
      e.kind = EventKind::arrow;
      if (!(ls >> e.target >> e.coin)) fail("arrow needs `target u`");
      int matches = 0;
      for (std::uint32_t k = 0; k < domain.degree(); ++k) {
        if (domain.neighbor(e.site, k) == e.target) {
          e.offset = k;
          ++matches;
        }
      }
      if (matches == 0) fail("arrow target is not a neighbor");
      if (matches > 1) fail("arrow offset ambiguous on this torus");
    } else if (kind == "cross") {
      e.kind = EventKind::cross;
      e.target = e.site;
    } else if (kind == "dot") {
      e.kind = EventKind::dot;
      e.target = e.site;
      // The coin is optional for dots; without it the dot always acts.
      if (!(ls >> e.coin)) e.coin = 0.0;
    } else {
      fail("unknown event kind '" + kind + "'");
    }
    log.events.push_back(e);
  }
  if (!have_arrow || !have_dot || !have_horizon) {
    throw std::invalid_argument("event log header must give arrow_rate, dot_rate and horizon");
  }
  std::sort(log.events.begin(), log.events.end(), event_before);
  return log;
}

}  // namespace allelo
