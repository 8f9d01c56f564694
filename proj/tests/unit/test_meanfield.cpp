#include <doctest.h>

#include <cmath>

#include "allelo/meanfield.hpp"
#include "allelo/random.hpp"

using namespace allelo;
using namespace allelo::meanfield;

namespace {

Params mf(double l1, double l2, double g) {
  Params p;
  p.lambda1 = l1;
  p.lambda2 = l2;
  p.gamma = g;
  return p;
}

State random_simplex(SequentialRng& rng) {
  State u;
  for (int i = 0; i < 4; ++i) u[i] = -std::log(1.0 - rng.uniform());
  return u / u.sum();
}

bool contains_real(const auto& parts, double v, double tol) {
  for (double x : parts)
    if (std::abs(x - v) < tol) return true;
  return false;
}

}  // namespace

TEST_CASE("rhs at the absorbing and red equilibria") {
  CHECK(rhs(State(1, 0, 0, 0), mf(3, 2, 0.7)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rhs(State(0.5, 0, 0.5, 0), mf(1.3, 2, 0.7)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("corrected form conserves mass, literal form leaks lambda1 u3 (u0 - u1)") {
  SequentialRng rng{CounterRng(1)};
  for (int i = 0; i < 1000; ++i) {
    const Params p = mf(5 * rng.uniform(), 5 * rng.uniform(), 0.01 + 5 * rng.uniform());
    const State u = random_simplex(rng);
    CHECK(std::abs(rhs(u, p, Form::corrected).sum()) < 1e-14);
    const double defect = p.lambda1 * u[3] * (u[0] - u[1]);
    CHECK(std::abs(rhs(u, p, Form::literal).sum() - defect) < 1e-14);
  }
}

TEST_CASE("boundary fixed points") {
  CHECK_FALSE(boundary_fixed_point_blue(mf(1.0, 2, 1)).has_value());
  CHECK_FALSE(boundary_fixed_point_red(mf(2, 1.0, 1)).has_value());
  const State ubar = *boundary_fixed_point_blue(mf(2, 1, 1));
  CHECK((ubar - State(0.25, 0.5, 0, 0.25)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((*boundary_fixed_point_red(mf(1, 2, 1)) - State(0.5, 0, 0.5, 0)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((*boundary_fixed_point_red(mf(1, 4, 1)) - State(0.25, 0, 0.75, 0)).cwiseAbs().maxCoeff() < 1e-15);
  const State cp = *boundary_fixed_point_blue(mf(2.5, 1, 1e9));
  CHECK((cp - State(0.4, 0.6, 0, 0)).cwiseAbs().maxCoeff() < 1e-8);

  SequentialRng rng{CounterRng(2)};
  for (int i = 0; i < 500; ++i) {
    const Params p = mf(1 + 4 * rng.uniform(), 1 + 4 * rng.uniform(), 0.01 + 10 * rng.uniform());
    const State u = *boundary_fixed_point_blue(p);
    CHECK(rhs(u, p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(u.sum() - 1.0) < 1e-14);
    CHECK(rhs(*boundary_fixed_point_red(p), p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("jacobian agrees with central differences") {
  SequentialRng rng{CounterRng(3)};
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Params p = mf(5 * rng.uniform(), 5 * rng.uniform(), 0.01 + 5 * rng.uniform());
    const State u = random_simplex(rng);
    for (Form f : {Form::corrected, Form::literal}) {
      const Matrix j = jacobian(u, p, f);
      double worst = 0.0;
      for (int c = 0; c < 4; ++c) {
        State up = u, dn = u;
        up[c] += h;
        dn[c] -= h;
        const State fd = (rhs(up, p, f) - rhs(dn, p, f)) / (2 * h);
        worst = std::max(worst, (j.col(c) - fd).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("eigenvalues at the boundary equilibria") {
  SequentialRng rng{CounterRng(4)};
  for (int i = 0; i < 200; ++i) {
    const Params p = mf(1.05 + 4 * rng.uniform(), 1.05 + 4 * rng.uniform(), 0.05 + 5 * rng.uniform());
    const auto at_v = stability(*boundary_fixed_point_red(p), p);
    CHECK(contains_real(at_v.simplex_real_parts, p.lambda1 / p.lambda2 - 1.0, 1e-9));
    const auto at_u = stability(*boundary_fixed_point_blue(p), p);
    const double mu = p.lambda2 * p.gamma / (p.lambda1 * (p.lambda1 + p.gamma - 1.0)) - 1.0;
    CHECK(contains_real(at_u.simplex_real_parts, mu, 1e-9));
    // The conserved sum contributes a zero to the full spectrum.
    CHECK(contains_real(at_u.real_parts, 0.0, 1e-9));
    if (at_u.stability == Stability::unstable) CHECK(at_u.unstable_direction_inward);
  }
}

TEST_CASE("region classification") {
  const Regions a = classify_region(2, 3, 1);
  CHECK(a.in_w1);
  CHECK(a.in_w2);
  CHECK(a.coexistence);
  CHECK_FALSE(classify_region(1, 0.5, 1).in_w1);
  CHECK_FALSE(classify_region(1, 3, 1).in_w1);
  const Regions b = classify_region(2, 5, 1);
  CHECK_FALSE(b.in_w1);
  CHECK(b.in_w2);
  CHECK_THROWS_AS(classify_region(2, 3, 0), std::invalid_argument);
  // On the curve gamma l2 = l1 (l1 + gamma - 1), up to rounding.
  CHECK_FALSE(classify_region(1.1, 3.3, 0.05).in_w1);
  CHECK_FALSE(classify_region(2, 4, 1).in_w1);
}

TEST_CASE("interior fixed point") {
  const InteriorSearch s = interior_fixed_point(mf(2, 3, 1));
  REQUIRE(s.status == SearchStatus::found);
  // Closed form: u0 = 1/l2, u3 = 1/l1 - 1/l2, u1 = g l2 u3 / l1.
  CHECK((*s.point - State(1.0 / 3, 0.25, 0.25, 1.0 / 6)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.residual < 1e-10);
  CHECK(interior_fixed_point(mf(2, 5, 1)).status == SearchStatus::absent);
  CHECK(interior_fixed_point(mf(0.5, 0.5, 1)).status == SearchStatus::absent);
}

TEST_CASE("interior point exists exactly on w1 and w2") {
  int mismatches = 0;
  for (double g : {0.05, 0.5, 1.0, 5.0}) {
    for (int a = 1; a <= 50; ++a) {
      for (int b = 1; b <= 50; ++b) {
        const PhaseRow r = phase_point(0.1 * a, 0.1 * b, g);
        if (r.interior_exists != (r.regions.in_w1 && r.regions.in_w2)) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("integration") {
  const Params p = mf(2, 3, 1);
  const auto still = integrate(State(1, 0, 0, 0), p, Form::corrected, 0.01, 10.0);
  CHECK(still.points.back().u == State(1, 0, 0, 0));

  const Params q = mf(1.5, 2, 0.4);
  const State vbar = *boundary_fixed_point_red(q);
  const auto stay = integrate(vbar, q, Form::corrected, 0.01, 100.0, 1.0);
  CHECK(stay.points.size() == 101);
  for (const auto& pt : stay.points) CHECK((pt.u - vbar).cwiseAbs().maxCoeff() < 1e-10);

  // Inside w1 and w2 both boundary equilibria attract and the interior one
  // is a saddle, so a start near the center settles on ubar.
  const State inner = *interior_fixed_point(p).point;
  CHECK(stability(inner, p).stability == Stability::unstable);
  const auto run = integrate(State(0.25, 0.25, 0.26, 0.24), p, Form::corrected, 0.01, 500.0, 10.0);
  const State end = run.points.back().u;
  CHECK(run.points.back().t == doctest::Approx(500.0));
  CHECK(rhs(end, p).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((end - *boundary_fixed_point_blue(p)).cwiseAbs().maxCoeff() < 1e-8);
  const auto hold = integrate(inner, p, Form::corrected, 0.01, 100.0);
  CHECK((hold.points.back().u - inner).cwiseAbs().maxCoeff() < 1e-8);
  for (const auto& pt : run.points) CHECK(std::abs(pt.u.sum() - 1.0) < 1e-10);
  CHECK(run.halving_error < 1e-8);

  CHECK_THROWS_AS(integrate(State(3, 3, 3, 3), mf(5, 5, 1), Form::corrected, 0.01, 10.0), std::runtime_error);
  CHECK_THROWS_AS(integrate(State(1, 0, 0, 0), p, Form::corrected, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("phase csv") {
  CHECK(phase_csv_header() == "lambda1,lambda2,gamma,in_w1,in_w2,coexist,ubar_exists,vbar_exists,interior_exists");
  CHECK(phase_csv_row(phase_point(2, 3, 1)) == "2,3,1,1,1,1,1,1,1");
  CHECK(phase_csv_row(phase_point(0.5, 0.5, 1)) == "0.5,0.5,1,0,0,0,0,0,0");
}
