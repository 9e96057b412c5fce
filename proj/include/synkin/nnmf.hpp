#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "synkin/config.hpp"
#include "synkin/types.hpp"

namespace synkin {

struct FactorizeConfig {
  int restarts = 20;
  double tol = 1e-6;       // relative objective change per iteration
  int max_iter = 1000;
  std::uint64_t seed = 1;  // restart r uses seed + r
};

struct RankSelectConfig {
  double vaf_threshold = 0.90;
  double growth_threshold = 0.03;
  int max_rank = 8;
};

FactorizeConfig factorize_config(const Config& cfg);
RankSelectConfig rank_select_config(const Config& cfg);

// Result of a non-negative factorization E ~= W * C. W is channels x rank,
// C is rank x time; objective is the Frobenius norm of the residual of the
// stored factors.
struct Factorization {
  Matrix w;
  Matrix c;
  double objective = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  int best_restart = 0;
  std::uint64_t seed = 0;
  // Objective after initialization and after each iteration of the winning
  // restart (diagnostic; non-increasing).
  std::vector<double> objective_history;
};

// Variance-accounted-for of every scanned rank plus the chosen rank.
// growth_rule_met is false when no rank satisfied both the threshold and the
// next-rank growth rule and the selection fell back to the threshold alone.
struct VafCurve {
  std::map<int, double> vaf_by_rank;
  int selected_rank = 0;
  bool growth_rule_met = true;
};

// Multiplicative-update factorization (Frobenius objective), best of
// cfg.restarts random restarts. Factors are initialized uniformly on (0, 1]
// scaled by sqrt(mean(E)/rank); update denominators are floored at 1e-12.
// The objective is non-increasing over iterations; iteration stops when the
// relative objective change drops below cfg.tol or at cfg.max_iter.
// Deterministic for fixed inputs and seed. Raises negative_input if E has
// negative entries, invalid_argument for a bad rank.
Factorization factorize(const Matrix& e, int rank, const FactorizeConfig& cfg);

// The full rank scan behind rank selection: the best-of-restarts
// factorization and its VAF at every rank from 1 to max_rank, plus the
// selection verdict. Lets callers reuse the factorization at the chosen rank
// instead of recomputing it.
struct RankSweep {
  VafCurve curve;
  std::map<int, Factorization> by_rank;
};
RankSweep rank_sweep(const Matrix& e, const FactorizeConfig& fcfg, const RankSelectConfig& rcfg);

// Fraction of variance accounted for: 1 - |E - W*C|_F^2 / |E|_F^2.
// Raises zero_matrix when E is all zero.
double vaf(const Matrix& e, const Matrix& w, const Matrix& c);

// Scans ranks 1..max_rank and applies the threshold + growth rule.
VafCurve select_rank(const Matrix& e, const FactorizeConfig& fcfg, const RankSelectConfig& rcfg);

// Rule application on a precomputed curve: the selected rank is the smallest
// n with VAF(n) >= vaf_threshold and VAF(n+1) - VAF(n) < growth_threshold;
// if none qualifies, the smallest n meeting the threshold alone is chosen and
// growth_rule_met is false. Raises invalid_argument on an empty curve and
// numerical_failure when no rank reaches the threshold at all.
VafCurve select_rank_from_curve(const std::map<int, double>& vaf_by_rank,
                                const RankSelectConfig& rcfg);

}  // namespace synkin
