#include <doctest.h>

#include <json.hpp>

#include "allelo/coupling.hpp"

using namespace allelo;

namespace {

Params make_params(double l1, double l2, double g) {
  Params p;
  p.lambda1 = l1;
  p.lambda2 = l2;
  p.gamma = g;
  return p;
}

Params infinite_gamma(double l1, double l2) {
  Params p = make_params(l1, l2, 1.0);
  p.gamma_infinite = true;
  return p;
}

std::vector<double> grid(double step, double end) {
  std::vector<double> ts;
  for (int k = 0; k * step <= end + 1e-12; ++k) ts.push_back(k * step);
  return ts;
}

}  // namespace

TEST_CASE("check_domination examples") {
  auto dom = make_domain({6}, {1, Norm::l1, 1});
  Configuration a(dom, SiteState::free);
  a[1] = SiteState::blue;
  a[3] = SiteState::red;
  CHECK(check_domination(a, a));
  CHECK(check_domination(Configuration(dom, SiteState::blue), Configuration(dom, SiteState::red)));
  Configuration b(dom, SiteState::free);
  Configuration c = b;
  c[2] = SiteState::red;
  CHECK_FALSE(check_domination(c, b));
  CHECK(domination_violation(c, b) == Site{2});
  // b has a blue where a does not
  b[4] = SiteState::blue;
  CHECK_FALSE(check_domination(a, b));
  CHECK(check_domination(b, Configuration(dom, SiteState::free)));
}

TEST_CASE("comparable pairs and their orientation") {
  const std::vector<Params> vs{make_params(2, 1, 0.5), make_params(2, 1, 5), infinite_gamma(2, 1),
                               make_params(3, 1, 0.5), make_params(2, 0.5, 0.5), make_params(3, 3, 3)};
  const auto pairs = comparable_pairs(vs);
  auto find = [&](std::size_t u, std::size_t l) {
    for (const auto& p : pairs)
      if (p.upper == u && p.lower == l) return p.parameter;
    return VariedParameter::none;
  };
  CHECK(pairs.size() == 5);
  CHECK(find(0, 1) == VariedParameter::gamma);
  CHECK(find(0, 2) == VariedParameter::gamma);
  CHECK(find(1, 2) == VariedParameter::gamma);
  CHECK(find(3, 0) == VariedParameter::lambda1);
  CHECK(find(4, 0) == VariedParameter::lambda2);
}

TEST_CASE("identical variants give identical trajectories") {
  auto dom = make_domain({16, 16}, {1, Norm::l1, 2});
  const std::vector<Params> vs{make_params(1.96, 1.96, 0.05), make_params(1.96, 1.96, 0.05)};
  const auto xi0 = make_initial(InitialSpec{}, 4, dom);
  CoupleOptions opt;
  opt.sample_times = grid(1.0, 10.0);
  opt.snapshot_times = {10.0};
  const CoupledRun run = couple(4, vs, xi0, 10.0, opt);
  REQUIRE(run.trajectories.size() == 2);
  for (std::size_t k = 0; k < opt.sample_times.size(); ++k) {
    CHECK(run.trajectories[0].samples[k].count == run.trajectories[1].samples[k].count);
  }
  CHECK(std::ranges::equal(run.trajectories[0].snapshots[0].states(), run.trajectories[1].snapshots[0].states()));
  CHECK(run.all_hold());
}

TEST_CASE("gamma coupling holds at every event time, including gamma infinite") {
  auto dom = make_domain({20, 20}, {1, Norm::l1, 2});
  const std::vector<Params> vs{make_params(1.96, 1.96, 0.05), make_params(1.96, 1.96, 0.5),
                               make_params(1.96, 1.96, 5.0), infinite_gamma(1.96, 1.96)};
  CoupleOptions opt;
  opt.sample_times = grid(2.0, 20.0);
  opt.check_event_times = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto xi0 = make_initial(InitialSpec{}, seed, dom);
    const CoupledRun run = couple(seed, vs, xi0, 20.0, opt);
    CHECK(run.verdicts.size() == 6);
    for (const auto& v : run.verdicts) {
      CHECK(v.event_checks > 0);
      CHECK_FALSE(v.first_violation.has_value());
    }
  }
}

TEST_CASE("lambda1 coupling: the larger lambda1 run holds more blue") {
  auto dom = make_domain({16, 16}, {1, Norm::l1, 2});
  const std::vector<Params> vs{make_params(1.96, 1.96, 0.3), make_params(2.5, 1.96, 0.3)};
  CoupleOptions opt;
  opt.sample_times = grid(1.0, 10.0);
  opt.check_event_times = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xi0 = make_initial(InitialSpec{}, seed, dom);
    const CoupledRun run = couple(seed, vs, xi0, 10.0, opt);
    REQUIRE(run.verdicts.size() == 1);
    CHECK(run.verdicts[0].pair.upper == 1);
    CHECK(run.all_hold());
  }
}

TEST_CASE("lambda2 coupling under both orderings of the birth rates") {
  auto dom = make_domain({16, 16}, {1, Norm::linf, 2});
  const std::vector<Params> vs{make_params(2.0, 1.0, 0.7), make_params(2.0, 2.0, 0.7), make_params(2.0, 3.0, 0.7)};
  CoupleOptions opt;
  opt.sample_times = grid(1.0, 8.0);
  opt.check_event_times = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto xi0 = make_initial(InitialSpec{}, seed, dom);
    const CoupledRun run = couple(seed, vs, xi0, 8.0, opt);
    CHECK(run.verdicts.size() == 3);
    CHECK(run.all_hold());
  }
}

TEST_CASE("couple rejects mismatched neighborhoods") {
  auto dom = make_domain({8, 8}, {1, Norm::l1, 2});
  Params a = make_params(1, 1, 1);
  Params b = a;
  b.neighborhood.norm = Norm::linf;
  const std::vector<Params> vs{a, b};
  CHECK_THROWS_AS(couple(0, vs, Configuration(dom, SiteState::red), 1.0, CoupleOptions{}), std::invalid_argument);
}

TEST_CASE("coupling report") {
  auto dom = make_domain({8, 8}, {1, Norm::l1, 2});
  const std::vector<Params> vs{make_params(1.5, 1.5, 0.5), infinite_gamma(1.5, 1.5)};
  CoupleOptions opt;
  opt.sample_times = {0.0, 1.0, 2.0};
  const CoupledRun run = couple(1, vs, make_initial(InitialSpec{}, 1, dom), 2.0, opt);
  const auto j = nlohmann::json::parse(coupling_report_json(run));
  CHECK(j["variants"][1]["gamma"] == "inf");
  CHECK(j["pairs"].size() == 1);
  CHECK(j["pairs"][0]["parameter"] == "gamma");
  CHECK(j["pairs"][0]["holds"].size() == 3);
  CHECK(j["pairs"][0]["first_violation"].is_null());
  CHECK(j["all_hold"] == true);
}
