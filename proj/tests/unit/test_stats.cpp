#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "allelo/random.hpp"
#include "allelo/stats.hpp"

using namespace allelo;

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316301).epsilon(1e-10));
}

TEST_CASE("wilson interval") {
  for (auto [k, n] : {std::pair{0, 10}, {3, 10}, {50, 100}, {199, 200}}) {
    const double z = 1.959963984540054, p = double(k) / n, z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n));
    const Proportion w = wilson(k, n);
    CHECK(w.value == doctest::Approx(p));
    CHECK(w.lo == doctest::Approx(centre - half).epsilon(1e-12));
    CHECK(w.hi == doctest::Approx(centre + half).epsilon(1e-12));
  }
}

TEST_CASE("binomial half tail") {
  for (std::size_t n : {1, 7, 20, 60}) {
    for (std::size_t k = 0; k <= n; k += 3) {
      double tail = 0.0;
      for (std::size_t i = k; i <= n; ++i) {
        tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
      }
      CHECK(binomial_half_upper_tail(n, k) == doctest::Approx(tail).epsilon(1e-10));
    }
  }
}

TEST_CASE("sign test") {
  const std::vector<double> before{1, 1, 1, 1, 1, 1}, after{2, 2, 2, 2, 2, 1};
  CHECK(sign_test_greater(before, after) == doctest::Approx(1.0 / 32));
}

TEST_CASE("cochran-armitage equals n r^2 over individual records") {
  SequentialRng rng{CounterRng(9)};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> s, n;
    std::vector<double> x;
    std::vector<double> xs, ys;
    for (int g = 0; g < 4; ++g) {
      n.push_back(20 + rng.bits() % 30);
      s.push_back(rng.bits() % (n.back() + 1));
      x.push_back(std::log(std::pow(10.0, g - 1)));
      for (std::size_t i = 0; i < n.back(); ++i) {
        xs.push_back(x.back());
        ys.push_back(i < s.back() ? 1.0 : 0.0);
      }
    }
    const double N = xs.size();
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / N, my = std::accumulate(ys.begin(), ys.end(), 0.0) / N;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    if (syy == 0) continue;
    const double z = std::sqrt(N) * sxy / std::sqrt(sxx * syy);
    CHECK(cochran_armitage_decreasing(s, n, x) == doctest::Approx(normal_cdf(z)).epsilon(1e-10));
  }
}

TEST_CASE("page test statistic and exact tail") {
  const std::vector<std::vector<double>> b{{1, 2, 3}, {2, 1, 3}, {1, 3, 2}, {3, 1, 2}, {1, 2, 3}};
  const PageTest t = page_trend_increasing(b);
  CHECK(t.L == 14 + 13 + 13 + 11 + 14);
  // Untied blocks: Var L = n k^2 (k+1)(k^2-1)/144, E L = n k (k+1)^2/4.
  const double n = 5, k = 3;
  CHECK(t.z == doctest::Approx((t.L - n * k * (k + 1) * (k + 1) / 4) / std::sqrt(n * k * k * (k + 1) * (k * k - 1) / 144)));
  // Exact permutation tail over all 6^5 rank assignments.
  const std::vector<double> perm_l{14, 13, 13, 11, 11, 10};
  std::vector<double> dist{0};
  for (int blk = 0; blk < 5; ++blk) {
    std::vector<double> next;
    for (double d : dist)
      for (double l : perm_l) next.push_back(d + l);
    dist = next;
  }
  const double exact = std::count_if(dist.begin(), dist.end(), [&](double l) { return l >= t.L; }) / double(dist.size());
  CHECK(std::abs(t.p - exact) < 0.04);
}

TEST_CASE("page test ignores fully tied blocks and handles partial ties") {
  const std::vector<std::vector<double>> a{{0.1, 0.2, 0.3, 0.5}, {0.2, 0.1, 0.4, 0.3}, {0.1, 0.3, 0.2, 0.6}};
  auto b = a;
  b.push_back({0.4, 0.4, 0.4, 0.4});
  CHECK(page_trend_increasing(b).z == doctest::Approx(page_trend_increasing(a).z));
  CHECK(page_trend_increasing({{0.4, 0.4, 0.4}}).p == 1.0);
  // Partial ties: L takes 10.5, 12, 13.5 with equal chance, variance 1.5.
  const PageTest t = page_trend_increasing({{1, 1, 2}});
  CHECK(t.L == doctest::Approx(1.5 + 3 + 9));
  CHECK(t.z == doctest::Approx((13.5 - 12) / std::sqrt(1.5)));
}
