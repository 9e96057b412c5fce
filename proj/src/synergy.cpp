#include "synkin/synergy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synkin/error.hpp"

namespace synkin {

namespace {

std::string roman_numeral(int k) {
  static const char* numerals[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
  if (k < 1 || k > 8) raise(errc::invalid_argument, "synergy label index out of range");
  return numerals[k - 1];
}

}  // namespace

NormalizedSynergy normalize_synergies(const Matrix& w, const Matrix& c) {
  if (w.cols() != c.rows()) {
    raise(errc::dimension_mismatch, "normalize_synergies: W columns must equal C rows");
  }
  NormalizedSynergy out;
  out.w = w;
  out.c = c;
  out.scale.resize(w.cols());
  for (Index j = 0; j < w.cols(); ++j) {
    const double norm = w.col(j).norm();
    if (norm <= 0.0) raise(errc::zero_column, "normalize_synergies: synergy column is all zero");
    out.w.col(j) /= norm;
    out.c.row(j) *= norm;
    out.scale[j] = norm;
  }
  return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    raise(errc::dimension_mismatch, "cosine_similarity: vector lengths differ");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    raise(errc::zero_column, "cosine_similarity: undefined for a zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

Matrix relative_contributions(const Matrix& w) {
  if (w.size() == 0) raise(errc::invalid_argument, "relative_contributions: empty matrix");
  if (w.minCoeff() < 0.0) {
    raise(errc::negative_input, "relative_contributions: negative weight");
  }
  Matrix shares = w;
  for (Index j = 0; j < w.cols(); ++j) {
    const double total = w.col(j).sum();
    if (total <= 0.0) raise(errc::zero_column, "relative_contributions: zero column");
    shares.col(j) /= total;
  }
  return shares;
}

int primary_synergy_index(const Matrix& w, Index key_row) {
  if (key_row < 0 || key_row >= w.rows()) {
    raise(errc::invalid_argument, "primary_synergy_index: key row out of range");
  }
  const Matrix shares = relative_contributions(w);
  int best = 0;
  for (Index j = 1; j < shares.cols(); ++j) {
    if (shares(key_row, j) > shares(key_row, best)) best = static_cast<int>(j);
  }
  return best;
}

std::vector<std::string> synergy_labels(const Matrix& w, Index key_row) {
  const int primary = primary_synergy_index(w, key_row);
  std::vector<std::string> labels(w.cols());
  labels[primary] = "Synergy " + roman_numeral(1);
  int next = 2;
  for (Index j = 0; j < w.cols(); ++j) {
    if (static_cast<int>(j) == primary) continue;
    labels[j] = "Synergy " + roman_numeral(next++);
  }
  return labels;
}

SynergyLabeling match_synergies(const Matrix& w_reference, const Matrix& w_candidate,
                                Index key_row) {
  if (w_reference.rows() != w_candidate.rows() || w_reference.cols() != w_candidate.cols()) {
    raise(errc::dimension_mismatch, "match_synergies: synergy shapes differ");
  }
  const int n = static_cast<int>(w_reference.cols());
  if (n < 1 || n > 8) {
    raise(errc::invalid_argument, "match_synergies: synergy count must be in [1, 8]");
  }

  Matrix cosines(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cosines(i, j) = cosine_similarity(Vector(w_reference.col(i)), Vector(w_candidate.col(j)));
    }
  }

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  double best_total = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cosines(i, perm[i]);
    if (total > best_total) {
      best_total = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SynergyLabeling out;
  out.order = best_perm;
  out.total_similarity = best_total;
  out.similarity.resize(n);
  for (int i = 0; i < n; ++i) out.similarity[i] = cosines(i, best_perm[i]);
  out.synergy_one = primary_synergy_index(w_reference, key_row);
  out.labels = synergy_labels(w_reference, key_row);
  return out;
}

GroupSynergyStats group_synergy_stats(const std::vector<Matrix>& w_matched) {
  if (w_matched.size() < 2) {
    raise(errc::insufficient_subjects,
          "group_synergy_stats: at least two subjects are required");
  }
  const Index rows = w_matched.front().rows();
  const Index cols = w_matched.front().cols();
  for (const Matrix& w : w_matched) {
    if (w.rows() != rows || w.cols() != cols) {
      raise(errc::dimension_mismatch, "group_synergy_stats: subject shapes differ");
    }
  }
  const double s = static_cast<double>(w_matched.size());
  GroupSynergyStats out;
  out.mean = Matrix::Zero(rows, cols);
  for (const Matrix& w : w_matched) out.mean += w;
  out.mean /= s;
  Matrix sq = Matrix::Zero(rows, cols);
  for (const Matrix& w : w_matched) sq.array() += (w - out.mean).array().square();
  out.stdev = (sq / (s - 1.0)).cwiseSqrt();
  return out;
}

}  // namespace synkin
