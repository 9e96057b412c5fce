#pragma once

#include <string>
#include <vector>

#include "synkin/types.hpp"

namespace synkin {

// Factorization in the unit-norm gauge: each synergy column of w has unit
// Euclidean norm and the removed scale lives in the activation rows, so the
// reconstruction w * c is unchanged.
struct NormalizedSynergy {
  Matrix w;      // channels x n, unit-L2 columns
  Matrix c;      // n x t, rescaled activations
  Vector scale;  // per-synergy L2 norm removed from the original columns
};

// Moves each synergy's column norm from the weights into the activations.
// Raises zero_column when a synergy column is all zero.
NormalizedSynergy normalize_synergies(const Matrix& w, const Matrix& c);

// Cosine of the angle between two vectors, clamped to [-1, 1].
// Raises zero_column when either vector is zero.
double cosine_similarity(const Vector& a, const Vector& b);

// Per-column relative contributions: every column is divided by its L1 sum so
// each synergy's channel shares sum to 1. Raises zero_column on a zero column
// and negative_input on negative weights.
Matrix relative_contributions(const Matrix& w);

// Result of matching candidate synergies onto reference synergies.
// order[i] is the candidate column paired with reference column i, and
// similarity[i] is that pair's cosine. Labels follow the reference columns:
// the column with the largest relative biceps contribution is "Synergy I" and
// the remaining columns are numbered II, III, ... left to right.
struct SynergyLabeling {
  std::vector<int> order;
  std::vector<double> similarity;
  double total_similarity = 0.0;
  int synergy_one = 0;              // reference column labeled Synergy I
  std::vector<std::string> labels;  // per reference column
};

// Index of the column with the highest relative contribution on `key_row`
// (ties break to the lowest index).
int primary_synergy_index(const Matrix& w, Index key_row);

// Per-column labels "Synergy I", "Synergy II", ... per the key-row rule.
std::vector<std::string> synergy_labels(const Matrix& w, Index key_row);

// Exhaustive search over column permutations (n <= 8) for the pairing that
// maximizes total cosine similarity between reference and candidate columns.
// Raises dimension_mismatch when shapes disagree.
SynergyLabeling match_synergies(const Matrix& w_reference, const Matrix& w_candidate,
                                Index key_row = 0);

// Elementwise mean and sample standard deviation of matched synergy weights
// across subjects. All matrices must share their shape; raises
// insufficient_subjects when fewer than two are given.
struct GroupSynergyStats {
  Matrix mean;
  Matrix stdev;
};

GroupSynergyStats group_synergy_stats(const std::vector<Matrix>& w_matched);

}  // namespace synkin
