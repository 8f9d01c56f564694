#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "allelo/dual.hpp"

using namespace allelo;

namespace {

Params make_params(double l1, double l2, double g) {
  Params p;
  p.lambda1 = l1;
  p.lambda2 = l2;
  p.gamma = g;
  p.neighborhood = {1, Norm::l1, 1};
  return p;
}

Event arrow(double t, Site from, Site to, std::uint32_t off, double u = 0.5) {
  Event e;
  e.time = t;
  e.kind = EventKind::arrow;
  e.site = from;
  e.target = to;
  e.offset = off;
  e.coin = u;
  return e;
}

Event mark(double t, EventKind k, Site x, double u = 0.0) {
  Event e;
  e.time = t;
  e.kind = k;
  e.site = x;
  e.coin = u;
  return e;
}

// On the 1D torus offset 1 points to x + 1.
constexpr std::uint32_t kRight = 1;

Configuration random_config(DomainPtr dom, SequentialRng& rng) {
  Configuration xi(dom, SiteState::free);
  for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) xi[x] = static_cast<SiteState>(rng.bits() % 4);
  return xi;
}

StateHistory forward_history(const GraphicalRep& rep, const Params& p, const Configuration& xi0, double t,
                             Configuration* end = nullptr) {
  ForwardEngine eng(rep, p, xi0);
  StateHistory h(eng.state());
  eng.set_history(&h);
  eng.advance_to(t);
  h.set_horizon(t);
  if (end) *end = eng.state();
  return h;
}

}  // namespace

TEST_CASE("dual tree at depth zero is the point itself") {
  auto dom = make_domain({12}, {1, Norm::l1, 1});
  const Params p = make_params(2, 2, 1);
  const GraphicalRep rep(3, dom, base_rates_for(p), 10.0);
  DualIndex idx(rep, p);
  const DualTree tree = dual_tree(idx, 5, 7.0, 0.0);
  CHECK(tree.ancestors == std::vector<Site>{5});
}

TEST_CASE("dual without marks is a straight line") {
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 4.0, {});
  DualIndex idx(rep, p);
  CHECK(dual_ancestors(rep, p, 3, 4.0, 4.0) == std::vector<Site>{3});
  DualSearch search(idx, 0.0);
  CHECK(search.reaches_floor(3, 4.0));
  CHECK(search.first_path(3, 4.0)->empty());
}

TEST_CASE("a cross with no arrows kills the dual") {
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 4.0, {mark(1.0, EventKind::cross, 2)});
  CHECK(dual_ancestors(rep, p, 2, 4.0, 4.0).empty());
  CHECK(dual_ancestors(rep, p, 2, 4.0, 2.5) == std::vector<Site>{2});
  DualIndex idx(rep, p);
  DualSearch search(idx, 0.0);
  CHECK(search.lowest_time(2, 4.0) == 1.0);
}

TEST_CASE("hand-built log with one frozen visit") {
  // w = 0, z = 1, x = 2; z starts blue.
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const std::vector<Event> log{mark(1.0, EventKind::cross, 1), mark(1.5, EventKind::cross, 2),
                               arrow(1.8, 0, 1, kRight), arrow(2.0, 1, 2, kRight),
                               mark(2.5, EventKind::dot, 2, 0.5)};
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 3.0, log);
  Configuration xi0(dom, SiteState::free);
  xi0[1] = SiteState::blue;
  const StateHistory h = forward_history(rep, p, xi0, 3.0);
  DualIndex idx(rep, p);
  const DistinguishedPath path = distinguished_path(idx, 2, 3.0, h);
  CHECK_FALSE(path.died);
  REQUIRE(path.arrows.size() == 2);
  CHECK(path.arrows[0].source == 1);
  CHECK(path.arrows[0].s == doctest::Approx(1.0));
  CHECK(path.arrows[0].source_state == SiteState::frozen);
  CHECK(path.arrows[0].last_cross == 1.0);
  CHECK(path.arrows[1].source == 0);
  CHECK(path.arrows[1].s == doctest::Approx(1.2));
  CHECK(path.arrows[1].source_state == SiteState::free);
  CHECK_FALSE(path.arrows[1].last_cross.has_value());
  CHECK(path.frozen_visits == 1);

  const auto trees = lower_trees(idx, path, 3.0);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].n == 1);
  CHECK(trees[0].site == 1);
  CHECK(trees[0].root_s == doctest::Approx(2.0));
  CHECK(trees[0].survives);
  CHECK(trees[0].dot_free);
  CHECK(trees[0].favorable);

  CHECK(determine_color(rep, p, xi0, 2, 3.0) == SiteState::free);
  CHECK(determine_color(rep, p, xi0, 1, 3.0) == SiteState::frozen);
  CHECK(dual_ancestors(rep, p, 2, 3.0, 3.0) == std::vector<Site>{0});
}

TEST_CASE("a dot between the cross and the arrow thaws the source") {
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const std::vector<Event> log{mark(1.0, EventKind::cross, 1), mark(1.5, EventKind::cross, 2),
                               mark(1.6, EventKind::dot, 1, 0.5), arrow(1.8, 0, 1, kRight),
                               arrow(2.0, 1, 2, kRight)};
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 3.0, log);
  Configuration xi0(dom, SiteState::free);
  xi0[1] = SiteState::blue;
  const StateHistory h = forward_history(rep, p, xi0, 3.0);
  DualIndex idx(rep, p);
  const DistinguishedPath path = distinguished_path(idx, 2, 3.0, h);
  REQUIRE(path.arrows.size() == 2);
  CHECK(path.frozen_visits == 0);
  const auto trees = lower_trees(idx, path, 3.0);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].survives);
  CHECK_FALSE(trees[0].dot_free);
  CHECK_FALSE(trees[0].favorable);
}

TEST_CASE("a lower tree that dies at its first cross is not favorable") {
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const std::vector<Event> log{mark(0.2, EventKind::cross, 1), mark(0.5, EventKind::cross, 1),
                               arrow(0.6, 0, 1, kRight), mark(0.8, EventKind::cross, 2),
                               arrow(1.0, 1, 2, kRight)};
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 2.0, log);
  const Configuration xi0(dom, SiteState::blue);
  const StateHistory h = forward_history(rep, p, xi0, 2.0);
  DualIndex idx(rep, p);
  const DistinguishedPath path = distinguished_path(idx, 2, 2.0, h);
  REQUIRE(path.arrows.size() == 2);
  const auto trees = lower_trees(idx, path, 2.0);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].root_time == 0.5);
  CHECK_FALSE(trees[0].survives);
  CHECK(trees[0].dot_free);
  CHECK_FALSE(trees[0].favorable);
}

TEST_CASE("a dying dual records where it dies") {
  auto dom = make_domain({5}, {1, Norm::l1, 1});
  const Params p = make_params(1, 1, 1);
  const std::vector<Event> log{mark(0.5, EventKind::cross, 1), mark(0.8, EventKind::cross, 2),
                               arrow(1.0, 1, 2, kRight)};
  const GraphicalRep rep = GraphicalRep::from_events(dom, base_rates_for(p), 2.0, log);
  const Configuration xi0(dom, SiteState::red);
  const StateHistory h = forward_history(rep, p, xi0, 2.0);
  DualIndex idx(rep, p);
  const DistinguishedPath path = distinguished_path(idx, 2, 2.0, h);
  CHECK(path.died);
  CHECK(path.died_at == doctest::Approx(1.5));
  REQUIRE(path.arrows.size() == 1);
  CHECK(path.arrows[0].source == 1);
  CHECK(determine_color(rep, p, xi0, 2, 2.0) == SiteState::free);
}

TEST_CASE("dual color matches the forward fold on random instances") {
  SequentialRng rng{CounterRng(77)};
  int checked = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 5 + static_cast<int>(rng.bits() % 8);
    const bool two_d = inst % 5 == 4;
    auto dom = two_d ? make_domain({4, 4}, {1, Norm::l1, 2}) : make_domain({n}, {1, Norm::l1, 1});
    Params p = make_params(0.5 + 3 * rng.uniform(), 0.5 + 3 * rng.uniform(), 0.05 + 5 * rng.uniform());
    p.neighborhood = two_d ? NeighborhoodSpec{1, Norm::l1, 2} : NeighborhoodSpec{1, Norm::l1, 1};
    if (inst % 7 == 3) p.gamma_infinite = true;
    const double t = 1.0 + 5 * rng.uniform();
    const GraphicalRep rep(1000 + inst, dom, base_rates_for(p), t);
    Configuration xi0 = random_config(dom, rng);
    Configuration end;
    const StateHistory h = forward_history(rep, p, xi0, t, &end);
    ColorResolver derived(rep, p, xi0);
    ColorResolver read(rep, p, xi0, &h);
    const double mid = t * rng.uniform();
    for (Site x = 0; x < static_cast<Site>(end.size()); ++x) {
      CHECK(derived.state_at(x, t) == end[x]);
      CHECK(read.state_at(x, t) == end[x]);
      CHECK(derived.state_at(x, mid) == h.state_at(x, mid));
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("favorability rate: cross before dot") {
  for (double g : {1.0, 0.05}) {
    const FavorabilityCheck c = favorability_rate_check(1.0, g, 20000, 5);
    CHECK(c.cross_first == doctest::Approx(1.0 / (1.0 + g)));
    CHECK(c.empirical.lo <= c.cross_first);
    CHECK(c.cross_first <= c.empirical.hi);
  }
  CHECK(favorability_rate_check(1.0, 1.0, 10).birth_first == doctest::Approx(0.5));
  CHECK(favorability_rate_check(2.0, 0.5, 10).printed == doctest::Approx(2.0 / (0.5 * 2.5)));
}

TEST_CASE("dual tree export round trip") {
  auto dom = make_domain({16}, {1, Norm::l1, 1});
  const Params p = make_params(2.5, 2.5, 1);
  const GraphicalRep rep(9, dom, base_rates_for(p), 6.0);
  DualIndex idx(rep, p);
  const DualTree tree = dual_tree(idx, 8, 6.0, 3.0);
  CHECK(tree.nodes.size() > 3);
  std::stringstream ss;
  write_dual_tree(ss, tree);
  const DualTree back = read_dual_tree(ss);
  CHECK(back.root == tree.root);
  CHECK(back.t == tree.t);
  CHECK(back.depth == tree.depth);
  CHECK(back.ancestors == tree.ancestors);
  REQUIRE(back.nodes.size() == tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    CHECK(back.nodes[i].site == tree.nodes[i].site);
    CHECK(back.nodes[i].s == tree.nodes[i].s);
    CHECK(back.nodes[i].parent == tree.nodes[i].parent);
    CHECK(back.nodes[i].on_floor == tree.nodes[i].on_floor);
  }
  std::istringstream bad("# root 1 2\nleaf 1 2 0\n");
  CHECK_THROWS_AS(read_dual_tree(bad), std::invalid_argument);
}

TEST_CASE("without freezing the ancestors alone decide the color") {
  auto dom = make_domain({24}, {1, Norm::l1, 1});
  Params p = make_params(2, 2, 0.5);
  p.gamma_infinite = true;
  const GraphicalRep rep(21, dom, base_rates_for(p), 4.0);
  const auto anc = dual_ancestors(rep, p, 12, 4.0, 4.0);
  // Changing the initial state outside the ancestor set cannot change the color.
  Configuration a(dom, SiteState::free);
  Configuration b(dom, SiteState::free);
  for (Site y = 0; y < 24; ++y) {
    const bool in = std::find(anc.begin(), anc.end(), y) != anc.end();
    a[y] = in ? SiteState::blue : SiteState::red;
    b[y] = in ? SiteState::blue : SiteState::free;
  }
  CHECK(determine_color(rep, p, a, 12, 4.0) == determine_color(rep, p, b, 12, 4.0));
}

TEST_CASE("no frozen visits when gamma is infinite") {
  auto dom = make_domain({30}, {1, Norm::l1, 1});
  Params p = make_params(2.5, 2.5, 1);
  p.gamma_infinite = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GraphicalRep rep(seed, dom, base_rates_for(p), 10.0);
    const Configuration xi0 = make_initial(InitialSpec{}, seed, dom);
    const StateHistory h = forward_history(rep, p, xi0, 10.0);
    DualIndex idx(rep, p);
    CHECK(distinguished_path(idx, 15, 10.0, h).frozen_visits == 0);
  }
}
