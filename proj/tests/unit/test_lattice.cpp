#include <doctest.h>

#include <algorithm>
#include <set>

#include "allelo/lattice.hpp"
#include "allelo/random.hpp"

using namespace allelo;

TEST_CASE("nearest-neighbor L1 neighborhood in d=2") {
  const auto n = build_neighborhood(1, Norm::l1, 2);
  REQUIRE(n.size() == 4);
  CHECK(n[0] == Offset{-1, 0});
  CHECK(n[1] == Offset{0, -1});
  CHECK(n[2] == Offset{0, 1});
  CHECK(n[3] == Offset{1, 0});
}

TEST_CASE("Moore neighborhood and 1D range 2") {
  CHECK(build_neighborhood(1, Norm::linf, 2).size() == 8);
  const auto n = build_neighborhood(2, Norm::l1, 1);
  REQUIRE(n.size() == 4);
  CHECK(n.offsets() == std::vector<Offset>{{-2}, {-1}, {1}, {2}});
  // The diagonal sits at sqrt(2).
  CHECK(build_neighborhood(1.2, Norm::l2, 2).size() == 4);
  CHECK(build_neighborhood(1.5, Norm::l2, 2).size() == 8);
  CHECK(build_neighborhood(2.0, Norm::l2, 2).size() == 12);
  CHECK(build_neighborhood(std::sqrt(2.0), Norm::l2, 2).size() == 8);
}

TEST_CASE("neighborhood rejects empty inputs") {
  CHECK_THROWS_AS(build_neighborhood(0.5, Norm::l1, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_neighborhood(1, Norm::l1, 0), std::invalid_argument);
}

TEST_CASE("neighborhoods are symmetric, distinct and exclude the origin") {
  for (Norm norm : {Norm::l1, Norm::l2, Norm::linf}) {
    for (int d = 1; d <= 3; ++d) {
      for (double r : {1.0, 1.5, 2.0, 2.7}) {
        const auto n = build_neighborhood(r, norm, d);
        std::set<Offset> seen(n.offsets().begin(), n.offsets().end());
        CHECK(seen.size() == n.size());
        CHECK(std::is_sorted(n.offsets().begin(), n.offsets().end()));
        for (std::size_t k = 0; k < n.size(); ++k) {
          Offset neg = n[k];
          for (int& c : neg) c = -c;
          CHECK(seen.count(neg) == 1);
          CHECK(n[n.opposite(k)] == neg);
          CHECK(std::any_of(n[k].begin(), n[k].end(), [](int c) { return c != 0; }));
        }
      }
    }
  }
}

TEST_CASE("torus indexing wraps") {
  Torus t({4, 5});
  CHECK(t.size() == 20);
  const Site s = t.index(std::vector<int>{3, 4});
  CHECK(t.coords(s) == std::vector<int>{3, 4});
  CHECK(t.shift(s, std::vector<int>{1, 1}) == t.index(std::vector<int>{0, 0}));
  CHECK(t.index(std::vector<int>{-1, -1}) == s);
  CHECK_THROWS_AS(Torus({3, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Torus({-2}), std::invalid_argument);
}

TEST_CASE("fraction_occupied counts neighbors") {
  auto dom = make_domain({5, 5}, {1, Norm::l1, 2});
  Configuration xi(dom, SiteState::free);
  const Site x = dom->torus().index(std::vector<int>{2, 2});
  CHECK(fraction_occupied(x, xi, SiteState::blue) == 0.0);
  CHECK(fraction_occupied(x, xi, SiteState::red) == 0.0);
  xi[dom->neighbor(x, 0)] = SiteState::blue;
  xi[dom->neighbor(x, 1)] = SiteState::blue;
  CHECK(fraction_occupied(x, xi, SiteState::blue) == 0.5);
  xi[dom->neighbor(x, 2)] = SiteState::blue;
  xi[dom->neighbor(x, 3)] = SiteState::blue;
  CHECK(fraction_occupied(x, xi, SiteState::blue) == 1.0);
}

TEST_CASE("fractions over the four states sum to one") {
  auto dom = make_domain({6, 7}, {2, Norm::l2, 2});
  SequentialRng rng(CounterRng(3));
  for (int trial = 0; trial < 20; ++trial) {
    Configuration xi(dom, SiteState::free);
    for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) {
      xi[x] = static_cast<SiteState>(rng.bits() % 4);
    }
    for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i) sum += fraction_occupied(x, xi, static_cast<SiteState>(i));
      // Each term is an exact count / 12 and the counts sum to 12.
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("transition rates follow the table") {
  auto dom = make_domain({5, 5}, {1, Norm::l1, 2});
  Params p;
  p.lambda1 = 1.96;
  p.lambda2 = 1.96;
  p.gamma = 0.05;
  Configuration xi(dom, SiteState::free);
  const Site x = 12;
  xi[dom->neighbor(x, 0)] = SiteState::blue;
  xi[dom->neighbor(x, 3)] = SiteState::blue;
  CHECK(transition_rate(x, xi, SiteState::blue, p) == doctest::Approx(0.98));
  CHECK(transition_rate(x, xi, SiteState::red, p) == 0.0);

  xi[x] = SiteState::frozen;
  CHECK(transition_rate(x, xi, SiteState::free, p) == p.gamma);
  CHECK(transition_rate(x, xi, SiteState::blue, p) == doctest::Approx(0.98));
  CHECK(transition_rate(x, xi, SiteState::red, p) == 0.0);

  xi[x] = SiteState::red;
  CHECK(transition_rate(x, xi, SiteState::free, p) == 1.0);
  CHECK(transition_rate(x, xi, SiteState::blue, p) == 0.0);

  xi[x] = SiteState::blue;
  CHECK(transition_rate(x, xi, SiteState::frozen, p) == 1.0);
  CHECK(transition_rate(x, xi, SiteState::red, p) == 0.0);
  CHECK(transition_rate(x, xi, SiteState::free, p) == 0.0);
}

TEST_CASE("rates vanish exactly off the table") {
  auto dom = make_domain({4, 4}, {1, Norm::linf, 2});
  Params p{2.0, 3.0, 0.5};
  SequentialRng rng(CounterRng(11));
  for (int trial = 0; trial < 50; ++trial) {
    Configuration xi(dom, SiteState::free);
    for (Site x = 0; x < 16; ++x) xi[x] = static_cast<SiteState>(rng.bits() % 4);
    for (Site x = 0; x < 16; ++x) {
      for (int t = 0; t < 4; ++t) {
        const auto target = static_cast<SiteState>(t);
        if (target == xi[x]) continue;
        if (!is_table_transition(xi[x], target)) CHECK(transition_rate(x, xi, target, p) == 0.0);
      }
    }
  }
  CHECK_FALSE(is_table_transition(SiteState::red, SiteState::blue));
  CHECK_FALSE(is_table_transition(SiteState::free, SiteState::frozen));
  CHECK_FALSE(is_table_transition(SiteState::blue, SiteState::red));
  CHECK(is_table_transition(SiteState::frozen, SiteState::blue));
}

TEST_CASE("params validation") {
  Params p;
  p.gamma = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.gamma = 1.0;
  p.lambda1 = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.lambda1 = 1.0;
  p.gamma_infinite = true;
  p.gamma = 0.0;
  CHECK_NOTHROW(p.validate());
}
