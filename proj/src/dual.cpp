#include "allelo/dual.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace allelo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

DualIndex::DualIndex(const GraphicalRep& rep, const Params& p)
    : rep_(&rep), thinning_(p, rep.rates()), sites_(rep.domain().size()) {}

DualIndex::SiteMarks& DualIndex::load(Site x) {
  SiteMarks& m = sites_.at(static_cast<std::size_t>(x));
  if (m.loaded) return m;
  const Domain& dom = rep_->domain();
  const double h = rep_->horizon();
  for (const auto& e : rep_->stream({x, EventKind::cross, 0}, 0.0, h)) m.crosses.push_back(e.time);
  for (const auto& e : rep_->stream({x, EventKind::dot, 0}, 0.0, h)) {
    if (thinning_.dot_effective(e.coin)) m.dots.push_back(e.time);
  }
  for (std::uint32_t k = 0; k < dom.degree(); ++k) {
    const Site y = dom.neighbor(x, dom.neighborhood().opposite(k));
    for (const auto& e : rep_->stream({y, EventKind::arrow, k}, 0.0, h)) {
      if (thinning_.arrow_usable(e.coin)) m.arrows.push_back({e.time, y, e.coin});
    }
  }
  std::sort(m.arrows.begin(), m.arrows.end(), [](const InArrow& a, const InArrow& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.source < b.source;
  });
  m.loaded = true;
  return m;
}

std::size_t DualIndex::segment_of(Site x, double t) {
  const auto& c = crosses(x);
  return static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), t) - c.begin());
}

double DualIndex::segment_start(Site x, std::size_t k) { return k == 0 ? 0.0 : crosses(x)[k - 1]; }

namespace {

std::size_t first_arrow_after(const std::vector<DualIndex::InArrow>& a, double t) {
  return static_cast<std::size_t>(
      std::upper_bound(a.begin(), a.end(), t, [](double v, const DualIndex::InArrow& e) { return v < e.time; }) -
      a.begin());
}

}  // namespace

DualSearch::DualSearch(DualIndex& index, double floor)
    : index_(&index), floor_(floor), memo_(index.rep().domain().size()) {}

DualSearch::Segment& DualSearch::segment(Site x, std::size_t k) {
  auto& v = memo_[static_cast<std::size_t>(x)];
  if (v.size() <= k) v.resize(index_->crosses(x).size() + 1);
  return v[k];
}

bool DualSearch::reaches_floor(Site x, double t) {
  const std::size_t k = index_->segment_of(x, t);
  const double start = index_->segment_start(x, k);
  if (start <= floor_) return true;
  Segment& m = segment(x, k);
  const auto& arrows = index_->arrows_in(x);
  if (!m.started) {
    m.next_arrow = first_arrow_after(arrows, start);
    m.started = true;
  }
  if (m.success >= 0.0) return m.success < t;
  while (m.next_arrow < arrows.size() && arrows[m.next_arrow].time < t) {
    const auto a = arrows[m.next_arrow];
    if (reaches_floor(a.source, a.time)) {
      m.success = a.time;
      return true;
    }
    ++m.next_arrow;
  }
  return false;
}

double DualSearch::lowest_time(Site x, double t) {
  if (reaches_floor(x, t)) return floor_;
  double lowest = t;
  std::vector<std::vector<double>> explored(memo_.size());
  std::vector<std::pair<Site, double>> stack{{x, t}};
  while (!stack.empty()) {
    const auto [y, tau] = stack.back();
    stack.pop_back();
    const std::size_t k = index_->segment_of(y, tau);
    const double start = index_->segment_start(y, k);
    lowest = std::min(lowest, start);
    auto& ex = explored[static_cast<std::size_t>(y)];
    if (ex.size() <= k) ex.resize(index_->crosses(y).size() + 1, -kInf);
    const double from = std::max(start, ex[k]);
    if (tau <= from) continue;
    ex[k] = tau;
    const auto& arrows = index_->arrows_in(y);
    for (std::size_t i = first_arrow_after(arrows, from); i < arrows.size() && arrows[i].time < tau; ++i) {
      stack.push_back({arrows[i].source, arrows[i].time});
    }
  }
  return lowest;
}

std::optional<std::vector<DualSearch::Hop>> DualSearch::first_path(Site x, double t) {
  if (!reaches_floor(x, t)) return std::nullopt;
  std::vector<Hop> hops;
  Site y = x;
  double tau = t;
  while (true) {
    const std::size_t k = index_->segment_of(y, tau);
    if (index_->segment_start(y, k) <= floor_) break;
    const Segment& m = segment(y, k);
    const auto& arrows = index_->arrows_in(y);
    const auto& a = arrows[m.next_arrow];
    if (a.time != m.success) throw std::logic_error("dual search memo out of step");
    hops.push_back({a.source, a.time});
    y = a.source;
    tau = a.time;
    if (!reaches_floor(y, tau)) throw std::logic_error("dual search lost its path");
  }
  return hops;
}

namespace {

struct TreeBuilder {
  DualIndex& index;
  double t;
  double floor;
  DualTree& tree;
  std::vector<std::vector<double>> explored;
  std::vector<char> seen;

  void explore(Site y, double tau, std::int64_t parent) {
    const std::size_t k = index.segment_of(y, tau);
    const double start = index.segment_start(y, k);
    auto& ex = explored[static_cast<std::size_t>(y)];
    if (ex.size() <= k) ex.resize(index.crosses(y).size() + 1, -kInf);
    if (ex[k] == -kInf && start <= floor) {
      tree.nodes.push_back({y, t - floor, parent, true});
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = 1;
        tree.ancestors.push_back(y);
      }
    }
    const double from = std::max({start, floor, ex[k]});
    if (ex[k] < from) ex[k] = from;
    const auto& arrows = index.arrows_in(y);
    for (std::size_t i = first_arrow_after(arrows, from); i < arrows.size() && arrows[i].time < tau; ++i) {
      const auto a = arrows[i];
      auto& mark = explored[static_cast<std::size_t>(y)][k];
      if (a.time <= mark) continue;
      mark = a.time;
      tree.nodes.push_back({a.source, t - a.time, parent, false});
      explore(a.source, a.time, static_cast<std::int64_t>(tree.nodes.size() - 1));
    }
    auto& mark = explored[static_cast<std::size_t>(y)][k];
    mark = std::max(mark, tau);
  }
};

}  // namespace

DualTree dual_tree(DualIndex& index, Site x, double t, double s) {
  if (!(s >= 0.0) || s > t || t > index.rep().horizon()) {
    throw std::invalid_argument("dual tree needs 0 <= s <= t <= horizon");
  }
  DualTree tree;
  tree.root = x;
  tree.t = t;
  tree.depth = s;
  tree.nodes.push_back({x, 0.0, -1, false});
  const std::size_t n = index.rep().domain().size();
  TreeBuilder b{index, t, t - s, tree, std::vector<std::vector<double>>(n), std::vector<char>(n, 0)};
  b.explore(x, t, 0);
  return tree;
}

std::vector<Site> dual_ancestors(const GraphicalRep& rep, const Params& p, Site x, double t, double s) {
  DualIndex index(rep, p);
  return dual_tree(index, x, t, s).ancestors;
}

void write_dual_tree(std::ostream& os, const DualTree& tree) {
  const auto prec = os.precision();
  os.precision(17);
  os << "# allelo-dual v1\n";
  os << "# root " << tree.root << ' ' << tree.t << "\n";
  os << "# depth " << tree.depth << "\n";
  for (const DualNode& n : tree.nodes) {
    os << (n.on_floor ? "floor " : "node ") << n.site << ' ' << n.s << ' ' << n.parent << '\n';
  }
  os.precision(prec);
}

DualTree read_dual_tree(std::istream& is) {
  DualTree tree;
  std::string line;
  bool have_root = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "#") {
      std::string key;
      ls >> key;
      if (key == "root") have_root = static_cast<bool>(ls >> tree.root >> tree.t);
      if (key == "depth") ls >> tree.depth;
      continue;
    }
    DualNode n;
    if (tag != "node" && tag != "floor") throw std::invalid_argument("dual tree: unknown record '" + tag + "'");
    if (!(ls >> n.site >> n.s >> n.parent)) throw std::invalid_argument("dual tree: expected `site s parent`");
    if (n.parent >= static_cast<std::int64_t>(tree.nodes.size())) {
      throw std::invalid_argument("dual tree: parent must precede its child");
    }
    n.on_floor = tag == "floor";
    if (n.on_floor && std::find(tree.ancestors.begin(), tree.ancestors.end(), n.site) == tree.ancestors.end()) {
      tree.ancestors.push_back(n.site);
    }
    tree.nodes.push_back(n);
  }
  if (!have_root) throw std::invalid_argument("dual tree: missing root header");
  return tree;
}

DistinguishedPath distinguished_path(DualIndex& index, Site x, double t, const StateHistory& forward) {
  DistinguishedPath out;
  out.root = x;
  out.t = t;
  double floor = 0.0;
  DualSearch search(index, 0.0);
  auto hops = search.first_path(x, t);
  if (!hops) {
    floor = search.lowest_time(x, t);
    out.died = true;
    out.died_at = t - floor;
    DualSearch partial(index, floor);
    hops = partial.first_path(x, t);
    if (!hops) throw std::logic_error("dual search found no path above its lowest point");
  }
  for (const auto& h : *hops) {
    ArrowRecord r;
    r.source = h.source;
    r.time = h.time;
    r.s = t - h.time;
    const std::size_t k = index.segment_of(h.source, h.time);
    if (k > 0 && index.crosses(h.source)[k - 1] > floor) r.last_cross = index.crosses(h.source)[k - 1];
    r.source_state = forward.state_before(h.source, h.time);
    if (r.source_state == SiteState::frozen) ++out.frozen_visits;
    out.arrows.push_back(r);
  }
  return out;
}

std::vector<LowerTree> lower_trees(DualIndex& index, const DistinguishedPath& path, double dual_horizon) {
  const double floor = std::max(0.0, path.t - dual_horizon);
  DualSearch search(index, floor);
  std::vector<LowerTree> out;
  for (std::size_t n = 0; n < path.arrows.size(); ++n) {
    const ArrowRecord& a = path.arrows[n];
    if (!a.last_cross || *a.last_cross <= floor) continue;
    LowerTree lt;
    lt.n = n + 1;
    lt.site = a.source;
    lt.root_time = *a.last_cross;
    lt.root_s = path.t - lt.root_time;
    lt.survives = search.reaches_floor(a.source, lt.root_time);
    const auto& dots = index.dots(a.source);
    const auto it = std::upper_bound(dots.begin(), dots.end(), lt.root_time);
    lt.dot_free = it == dots.end() || *it >= a.time;
    lt.favorable = lt.survives && lt.dot_free;
    out.push_back(lt);
  }
  return out;
}

FavorabilityCheck favorability_rate_check(double lambda, double gamma, std::size_t samples, std::uint64_t base_seed) {
  if (!(gamma > 0.0)) throw std::invalid_argument("favorability check needs gamma > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("favorability check needs lambda > 0");
  Params p;
  p.lambda1 = lambda;
  p.lambda2 = lambda;
  p.gamma = gamma;
  p.neighborhood = {1, Norm::l1, 1};
  const DomainPtr dom = make_domain({1}, p.neighborhood);
  const BaseRates rates = base_rates_for(p);
  // Long enough that a missing cross has probability e^-50.
  const double h = 50.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const GraphicalRep rep(base_seed + i, dom, rates, h);
    const auto cross = rep.last_before({0, EventKind::cross, 0}, kInf);
    const auto dot = rep.last_before({0, EventKind::dot, 0}, kInf);
    if (cross && (!dot || dot->time < cross->time)) ++hits;
  }
  FavorabilityCheck out;
  out.gamma = gamma;
  out.lambda = lambda;
  out.empirical = wilson(hits, samples);
  out.cross_first = 1.0 / (1.0 + gamma);
  out.birth_first = lambda / (lambda + gamma);
  out.printed = lambda / (gamma * (lambda + gamma));
  return out;
}

ColorResolver::ColorResolver(const GraphicalRep& rep, const Params& p, Configuration xi0,
                             const StateHistory* frozen_states)
    : index_(rep, p), xi0_(std::move(xi0)), history_(frozen_states), walks_(rep.domain().size()) {
  if (!xi0_.domain().same_geometry(rep.domain())) {
    throw std::invalid_argument("initial configuration and representation live on different domains");
  }
  if (index_.thinning().gamma_infinite()) {
    for (Site x = 0; x < static_cast<Site>(xi0_.size()); ++x) {
      if (xi0_[x] == SiteState::frozen) xi0_[x] = SiteState::free;
    }
  }
}

ColorResolver::Walk& ColorResolver::walk(Site x, std::size_t k) {
  auto& v = walks_[static_cast<std::size_t>(x)];
  if (v.size() <= k) v.resize(index_.crosses(x).size() + 1);
  return v[k];
}

bool ColorResolver::frozen_at(Site x, const Walk& w, double t) const {
  if (history_) return history_->state_before(x, t) == SiteState::frozen;
  return w.start == SiteState::frozen && !(w.thawed && w.thaw < t);
}

double ColorResolver::pending(Site x, std::size_t k, const Walk& w) {
  if (w.is_settled) return kInf;
  const double end = k < index_.crosses(x).size() ? index_.crosses(x)[k] : kInf;
  const auto& arrows = index_.arrows_in(x);
  const auto& dots = index_.dots(x);
  const double ta = w.next_arrow < arrows.size() && arrows[w.next_arrow].time < end ? arrows[w.next_arrow].time : kInf;
  const double td = w.next_dot < dots.size() && dots[w.next_dot] < end ? dots[w.next_dot] : kInf;
  return std::min(ta, td);
}

bool ColorResolver::peek(Site x, double t, SiteState& out) {
  const std::size_t k = index_.segment_of(x, t);
  const Walk& w = walk(x, k);
  if (!w.init) return false;
  if (w.is_settled && w.settled < t) {
    out = w.color;
    return true;
  }
  if (pending(x, k, w) < t) return false;
  out = frozen_at(x, w, t) ? SiteState::frozen : SiteState::free;
  return true;
}

std::optional<ColorResolver::Need> ColorResolver::advance(Site x, double t, SiteState& out) {
  const std::size_t k = index_.segment_of(x, t);
  Walk& w = walk(x, k);
  const double start = index_.segment_start(x, k);
  if (!w.init) {
    if (k == 0) {
      const SiteState s = xi0_[x];
      if (s == SiteState::blue || s == SiteState::red) {
        w.color = s;
        w.is_settled = true;
        w.settled = -kInf;
      } else {
        w.start = s;
      }
    } else if (!history_) {
      // The cross at `start` freezes a blue or frozen site and frees the rest.
      SiteState prev;
      if (!peek(x, start, prev)) return Need{x, start};
      const bool freeze = (prev == SiteState::blue || prev == SiteState::frozen) &&
                          !index_.thinning().gamma_infinite();
      w.start = freeze ? SiteState::frozen : SiteState::free;
    }
    w.next_arrow = first_arrow_after(index_.arrows_in(x), start);
    const auto& dots = index_.dots(x);
    w.next_dot = static_cast<std::size_t>(std::upper_bound(dots.begin(), dots.end(), start) - dots.begin());
    w.init = true;
    ++walked_;
  }
  const double end = k < index_.crosses(x).size() ? index_.crosses(x)[k] : kInf;
  const auto& arrows = index_.arrows_in(x);
  const auto& dots = index_.dots(x);
  const Thinning& th = index_.thinning();
  while (true) {
    if (w.is_settled && w.settled < t) {
      out = w.color;
      return std::nullopt;
    }
    const double ta = (!w.is_settled && w.next_arrow < arrows.size() && arrows[w.next_arrow].time < end)
                          ? arrows[w.next_arrow].time
                          : kInf;
    const double td = (!w.is_settled && w.next_dot < dots.size() && dots[w.next_dot] < end) ? dots[w.next_dot] : kInf;
    if (std::min(ta, td) >= t) {
      out = frozen_at(x, w, t) ? SiteState::frozen : SiteState::free;
      return std::nullopt;
    }
    if (td < ta) {
      if (!history_ && w.start == SiteState::frozen && !w.thawed) {
        w.thawed = true;
        w.thaw = td;
      }
      ++w.next_dot;
      continue;
    }
    const auto a = arrows[w.next_arrow];
    const bool frozen = frozen_at(x, w, a.time);
    const bool blue_ok = th.blue_usable(a.coin);
    // Red may not enter a frozen site.
    const bool red_ok = th.red_usable(a.coin) && !frozen;
    if (blue_ok || red_ok) {
      SiteState src;
      if (peek(a.source, a.time, src)) {
        if (src == SiteState::blue && blue_ok) {
          w.color = SiteState::blue;
        } else if (src == SiteState::red && red_ok) {
          w.color = SiteState::red;
        }
        if (w.color != SiteState::free) {
          w.is_settled = true;
          w.settled = a.time;
        }
      } else {
        return Need{a.source, a.time};
      }
    }
    ++w.next_arrow;
  }
}

SiteState ColorResolver::state_before(Site x, double t) {
  if (t > index_.rep().horizon() && std::nextafter(index_.rep().horizon(), kInf) < t) {
    throw std::out_of_range("color query beyond the horizon of the representation");
  }
  std::vector<Need> stack{{x, t}};
  while (true) {
    SiteState out;
    const auto need = advance(stack.back().x, stack.back().t, out);
    if (need) {
      stack.push_back(*need);
      continue;
    }
    stack.pop_back();
    if (stack.empty()) return out;
  }
}

SiteState ColorResolver::state_at(Site x, double t) { return state_before(x, std::nextafter(t, kInf)); }

SiteState determine_color(const GraphicalRep& rep, const Params& p, const Configuration& xi0, Site x, double t) {
  ColorResolver r(rep, p, xi0);
  return r.state_at(x, t);
}

}  // namespace allelo
