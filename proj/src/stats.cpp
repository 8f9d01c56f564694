#include "allelo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace allelo {

Proportion wilson(std::size_t successes, std::size_t trials, double z) {
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  if (trials == 0) {
    p.lo = 0.0;
    p.hi = 1.0;
    return p;
  }
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (ph + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom;
  p.value = ph;
  p.lo = std::max(0.0, center - half);
  p.hi = std::min(1.0, center + half);
  return p;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double binomial_half_upper_tail(std::size_t n, std::size_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  // Sum in log space: C(n, j) 2^-n for j >= k.
  double total = 0.0;
  for (std::size_t j = k; j <= n; ++j) {
    const double lg = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(j) + 1) -
                      std::lgamma(static_cast<double>(n - j) + 1) - static_cast<double>(n) * std::log(2.0);
    total += std::exp(lg);
  }
  return std::min(1.0, total);
}

double sign_test_greater(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) throw std::invalid_argument("sign test needs paired samples");
  std::size_t pos = 0, nonzero = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = after[i] - before[i];
    if (d == 0.0) continue;
    ++nonzero;
    if (d > 0.0) ++pos;
  }
  return binomial_half_upper_tail(nonzero, pos);
}

double cochran_armitage_decreasing(std::span<const std::size_t> successes, std::span<const std::size_t> trials,
                                   std::span<const double> scores) {
  const std::size_t k = successes.size();
  if (trials.size() != k || scores.size() != k) throw std::invalid_argument("trend test: size mismatch");
  double n = 0.0, r = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    n += static_cast<double>(trials[i]);
    r += static_cast<double>(successes[i]);
  }
  if (n == 0.0) return 1.0;
  const double pbar = r / n;
  double t = 0.0, sx = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double ni = static_cast<double>(trials[i]);
    t += scores[i] * (static_cast<double>(successes[i]) - ni * pbar);
    sx += ni * scores[i];
    sxx += ni * scores[i] * scores[i];
  }
  const double var = pbar * (1 - pbar) * (sxx - sx * sx / n);
  if (!(var > 0.0)) return 1.0;
  const double z = t / std::sqrt(var);
  return normal_cdf(z);  // small when proportions fall as the score grows
}

PageTest page_trend_increasing(const std::vector<std::vector<double>>& blocks) {
  PageTest out;
  if (blocks.empty()) return out;
  const std::size_t k = blocks.front().size();
  if (k < 2) throw std::invalid_argument("Page test needs at least two treatments");
  const double cbar = (static_cast<double>(k) + 1.0) / 2.0;
  double css = 0.0;
  for (std::size_t j = 0; j < k; ++j) css += (j + 1.0 - cbar) * (j + 1.0 - cbar);
  double dev = 0.0, var = 0.0;
  std::vector<std::size_t> order(k);
  std::vector<double> rank(k);
  for (const auto& b : blocks) {
    if (b.size() != k) throw std::invalid_argument("Page test: ragged blocks");
    for (std::size_t j = 0; j < k; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return b[a] < b[c]; });
    for (std::size_t i = 0; i < k;) {
      std::size_t e = i + 1;
      while (e < k && b[order[e]] == b[order[i]]) ++e;
      const double avg = (static_cast<double>(i + e) + 1.0) / 2.0;
      for (std::size_t m = i; m < e; ++m) rank[order[m]] = avg;
      i = e;
    }
    double rss = 0.0, lb = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      rss += (rank[j] - cbar) * (rank[j] - cbar);
      lb += (j + 1.0) * rank[j];
    }
    out.L += lb;
    dev += lb - cbar * static_cast<double>(k) * cbar;
    var += css * rss / static_cast<double>(k - 1);
  }
  if (!(var > 0.0)) return out;
  out.z = dev / std::sqrt(var);
  out.p = 1.0 - normal_cdf(out.z);
  return out;
}

}  // namespace allelo
