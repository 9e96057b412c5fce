#include "synkin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synkin/csv.hpp"
#include "synkin/error.hpp"
#include "synkin/mathutil.hpp"

namespace synkin {

std::string to_string(TestMethod method) {
  switch (method) {
    case TestMethod::wilcoxon_exact: return "WilcoxonExact";
    case TestMethod::wilcoxon_normal_approx: return "WilcoxonNormalApprox";
    case TestMethod::shapiro_wilk: return "ShapiroWilk";
    case TestMethod::levene: return "Levene";
  }
  raise(errc::invalid_argument, "unknown test method");
}

namespace {

// Average ranks of |values|, plus the tie-correction term sum(t^3 - t) over
// tie groups and whether any tie exists.
struct RankInfo {
  std::vector<double> ranks;
  double tie_term = 0.0;
  bool has_ties = false;
};

RankInfo rank_magnitudes(const std::vector<double>& magnitudes) {
  const std::size_t n = magnitudes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return magnitudes[i] < magnitudes[j]; });
  RankInfo info;
  info.ranks.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) info.ranks[order[k]] = avg_rank;
    const auto t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      info.has_ties = true;
      info.tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return info;
}

}  // namespace

std::vector<double> wilcoxon_null_counts(int n) {
  if (n < 1 || n > 25) {
    raise(errc::invalid_argument, "wilcoxon_null_counts: n must be in [1, 25]");
  }
  std::vector<double> counts(static_cast<std::size_t>(n * (n + 1) / 2) + 1, 0.0);
  counts[0] = 1.0;
  for (int r = 1; r <= n; ++r) {
    for (std::size_t k = counts.size(); k-- > static_cast<std::size_t>(r);) {
      counts[k] += counts[k - static_cast<std::size_t>(r)];
    }
  }
  return counts;
}

TestResult wilcoxon_signed_rank(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    raise(errc::dimension_mismatch, "wilcoxon_signed_rank: paired lengths differ");
  }
  std::vector<double> magnitudes;
  std::vector<bool> positive;
  for (Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) {
      raise(errc::non_finite_sample, "wilcoxon_signed_rank: non-finite difference");
    }
    if (d == 0.0) continue;  // zero differences carry no sign information
    magnitudes.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  const int n = static_cast<int>(magnitudes.size());
  if (n == 0) {
    raise(errc::all_differences_zero, "wilcoxon_signed_rank: all paired differences are zero");
  }

  const RankInfo ranks = rank_magnitudes(magnitudes);
  double w_plus = 0.0;
  for (int i = 0; i < n; ++i) {
    if (positive[static_cast<std::size_t>(i)]) w_plus += ranks.ranks[static_cast<std::size_t>(i)];
  }
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n + 1);
  const double w_minus = total - w_plus;
  const double statistic = std::min(w_plus, w_minus);

  TestResult out;
  out.statistic = statistic;
  out.n_effective = n;

  if (n <= 25 && !ranks.has_ties) {
    // Exact: rank sums are integers, so the statistic indexes the null table.
    const std::vector<double> counts = wilcoxon_null_counts(n);
    double cumulative = 0.0;
    const auto limit = static_cast<std::size_t>(statistic);
    for (std::size_t k = 0; k <= limit; ++k) cumulative += counts[k];
    out.p_value = std::min(1.0, 2.0 * (cumulative / std::pow(2.0, n)));
    out.method = TestMethod::wilcoxon_exact;
  } else {
    const double mean = total / 2.0;
    const double variance =
        static_cast<double>(n) * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranks.tie_term / 48.0;
    const double diff = statistic - mean;
    const double correction = 0.5 * ((diff > 0.0) - (diff < 0.0));
    const double z = (diff - correction) / std::sqrt(variance);
    out.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
    out.method = TestMethod::wilcoxon_normal_approx;
  }
  return out;
}

namespace {

double polynomial(const double* coeffs, int count, double x) {
  double value = 0.0;
  for (int i = count; i-- > 0;) value = value * x + coeffs[i];
  return value;
}

}  // namespace

TestResult shapiro_wilk(const Vector& x) {
  const int n = static_cast<int>(x.size());
  if (n < 3 || n > 5000) {
    raise(errc::invalid_argument, "shapiro_wilk: sample size must be in [3, 5000]");
  }
  std::vector<double> y(x.data(), x.data() + n);
  std::sort(y.begin(), y.end());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sse = 0.0;
  for (double v : y) sse += (v - mean) * (v - mean);
  if (sse <= 0.0) raise(errc::zero_variance, "shapiro_wilk: constant sample");

  // Expected normal order statistics (Blom scores) and Royston's weights.
  std::vector<double> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    m[static_cast<std::size_t>(i)] = normal_quantile((i + 1 - 0.375) / (n + 0.25));
  }
  double summ2 = 0.0;
  for (double v : m) summ2 += v * v;
  const double rsn = 1.0 / std::sqrt(static_cast<double>(n));

  std::vector<double> a(static_cast<std::size_t>(n));
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double ssumm2 = std::sqrt(summ2);
    const double a_n = polynomial(c1, 6, rsn) + m[static_cast<std::size_t>(n - 1)] / ssumm2;
    int tail = 1;
    double fac;
    double a_n1 = 0.0;
    if (n > 5) {
      tail = 2;
      a_n1 = polynomial(c2, 6, rsn) + m[static_cast<std::size_t>(n - 2)] / ssumm2;
      fac = std::sqrt((summ2 - 2.0 * m[static_cast<std::size_t>(n - 1)] * m[static_cast<std::size_t>(n - 1)] -
                       2.0 * m[static_cast<std::size_t>(n - 2)] * m[static_cast<std::size_t>(n - 2)]) /
                      (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1));
      a[static_cast<std::size_t>(n - 1)] = a_n;
      a[static_cast<std::size_t>(n - 2)] = a_n1;
      a[0] = -a_n;
      a[1] = -a_n1;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[static_cast<std::size_t>(n - 1)] * m[static_cast<std::size_t>(n - 1)]) /
                      (1.0 - 2.0 * a_n * a_n));
      a[static_cast<std::size_t>(n - 1)] = a_n;
      a[0] = -a_n;
    }
    for (int i = tail; i < n - tail; ++i) {
      a[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] / fac;
    }
  }

  double num = 0.0;
  for (int i = 0; i < n; ++i) num += a[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  const double w = num * num / sse;

  TestResult out;
  out.statistic = w;
  out.n_effective = n;
  out.method = TestMethod::shapiro_wilk;
  if (n == 3) {
    const double pi6 = 6.0 / M_PI;
    const double stqr = std::asin(std::sqrt(0.75));
    out.p_value = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
  } else if (n <= 11) {
    static const double c3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static const double c4[4] = {1.3822, -0.77857, 0.062767, -2.0322e-3};
    const double gamma = -2.273 + 0.459 * n;
    const double w1 = -std::log(gamma - std::log1p(-w));
    const double mu = polynomial(c3, 4, static_cast<double>(n));
    const double sigma = std::exp(polynomial(c4, 4, static_cast<double>(n)));
    out.p_value = normal_cdf(-(w1 - mu) / sigma);
  } else {
    static const double c5[4] = {-1.5861, -0.31082, -0.083751, 3.8915e-3};
    static const double c6[3] = {-0.4803, -0.082676, 3.0302e-3};
    const double ln_n = std::log(static_cast<double>(n));
    const double w1 = std::log1p(-w);
    const double mu = polynomial(c5, 4, ln_n);
    const double sigma = std::exp(polynomial(c6, 3, ln_n));
    out.p_value = normal_cdf(-(w1 - mu) / sigma);
  }
  return out;
}

TestResult levene(const std::vector<Vector>& groups) {
  const int k = static_cast<int>(groups.size());
  if (k < 2) raise(errc::invalid_argument, "levene: need at least two groups");
  int total_n = 0;
  for (const Vector& g : groups) {
    if (g.size() < 2) raise(errc::degenerate_groups, "levene: every group needs >= 2 samples");
    total_n += static_cast<int>(g.size());
  }

  // Absolute deviations from each group's mean.
  std::vector<Vector> z;
  z.reserve(groups.size());
  double grand = 0.0;
  for (const Vector& g : groups) {
    z.push_back((g.array() - g.mean()).abs());
    grand += z.back().sum();
  }
  grand /= static_cast<double>(total_n);

  double between = 0.0;
  double within = 0.0;
  for (const Vector& zi : z) {
    const double zbar = zi.mean();
    between += static_cast<double>(zi.size()) * (zbar - grand) * (zbar - grand);
    within += (zi.array() - zbar).square().sum();
  }
  if (within <= 0.0) {
    raise(errc::degenerate_groups, "levene: no within-group variability");
  }

  TestResult out;
  const double d1 = static_cast<double>(k - 1);
  const double d2 = static_cast<double>(total_n - k);
  out.statistic = (d2 / d1) * (between / within);
  out.p_value = f_distribution_sf(out.statistic, d1, d2);
  out.method = TestMethod::levene;
  out.n_effective = total_n;
  return out;
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<LabeledTestResult>& results) {
  std::vector<std::vector<std::string>> rows;
  for (const LabeledTestResult& r : results) {
    rows.push_back({r.metric, format_number(r.result.statistic),
                    format_number(r.result.p_value), to_string(r.result.method),
                    r.result.p_value < 0.05 ? "true" : "false"});
  }
  write_csv(path, {"metric", "statistic", "p_value", "method", "significant_0p05"}, rows);
}

}  // namespace synkin
