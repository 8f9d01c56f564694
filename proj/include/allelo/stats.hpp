#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace allelo {

/// Binomial proportion with a Wilson score interval.
struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// z = 1.959964 gives the 95% interval.
Proportion wilson(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

double normal_cdf(double x);

double mean(std::span<const double> xs);
/// Unbiased sample variance.
double variance(std::span<const double> xs);

/// One-sided exact sign test of H1: median(after - before) > 0. Zero
/// differences are dropped. Returns the p-value.
double sign_test_greater(std::span<const double> before, std::span<const double> after);

/// Cochran-Armitage test for a trend in proportions across ordered groups.
/// Returns the one-sided p-value for a decreasing trend in `scores` order.
double cochran_armitage_decreasing(std::span<const std::size_t> successes, std::span<const std::size_t> trials,
                                   std::span<const double> scores);

struct PageTest {
  double L = 0.0;
  double z = 0.0;
  double p = 1.0;
};

/// Page's test of H1: responses increase across k ordered treatments, with
/// replicates as blocks. blocks[b][j] is the response to treatment j in
/// block b. Ranks within a block average over ties; the variance is the
/// exact permutation variance of each block's ranks, so fully tied blocks
/// carry no weight. One-sided normal approximation.
PageTest page_trend_increasing(const std::vector<std::vector<double>>& blocks);

/// Binomial tail P(X >= k) for X ~ Bin(n, 1/2).
double binomial_half_upper_tail(std::size_t n, std::size_t k);

}  // namespace allelo
