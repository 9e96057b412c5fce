#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synkin/types.hpp"

namespace synkin {

enum class TestMethod {
  wilcoxon_exact,
  wilcoxon_normal_approx,
  shapiro_wilk,
  levene,
};

std::string to_string(TestMethod method);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::wilcoxon_exact;
  int n_effective = 0;  // sample count actually used by the test
};

// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped
// before ranking; tied magnitudes receive average ranks. The statistic is
// min(W+, W-). The p-value is exact (dynamic programming over the rank-sum
// null) when at most 25 tie-free differences remain, otherwise a normal
// approximation with tie and continuity corrections. Raises
// dimension_mismatch for unequal lengths and all_differences_zero when
// nothing remains after dropping zeros.
TestResult wilcoxon_signed_rank(const Vector& a, const Vector& b);

// Null distribution of the tie-free signed-rank sum W+ for n pairs:
// counts[k] is the number of the 2^n sign assignments with W+ == k,
// k = 0 .. n(n+1)/2. Counts are exact integers stored in doubles (n <= 25).
std::vector<double> wilcoxon_null_counts(int n);

// Shapiro-Wilk normality test (Royston's approximation), 3 <= n <= 5000.
// Raises invalid_argument for n out of range and zero_variance for a
// constant sample.
TestResult shapiro_wilk(const Vector& x);

// Levene's equality-of-variance test, mean-centered variant, with an
// F-distribution p-value. Needs >= 2 groups of >= 2 samples each; raises
// degenerate_groups when a group is too small or all within-group
// deviations vanish.
TestResult levene(const std::vector<Vector>& groups);

// Batch export: one row per labeled result with the 5% significance call.
struct LabeledTestResult {
  std::string metric;
  TestResult result;
};

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<LabeledTestResult>& results);

}  // namespace synkin
