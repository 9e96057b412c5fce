#include "synkin/nnmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synkin/detail/smallgemm.hpp"
#include "synkin/mathutil.hpp"

namespace synkin {

FactorizeConfig factorize_config(const Config& cfg) {
  FactorizeConfig f;
  f.restarts = cfg.get_int("nnmf.restarts");
  f.tol = cfg.get_double("nnmf.tol");
  f.max_iter = cfg.get_int("nnmf.max_iter");
  f.seed = static_cast<std::uint64_t>(cfg.get_int("nnmf.seed"));
  return f;
}

RankSelectConfig rank_select_config(const Config& cfg) {
  RankSelectConfig r;
  r.vaf_threshold = cfg.get_double("nnmf.vaf_threshold");
  r.growth_threshold = cfg.get_double("nnmf.growth_threshold");
  r.max_rank = cfg.get_int("nnmf.max_rank");
  return r;
}

namespace {

constexpr double update_floor = 1e-12;

// All restarts of one rank advance together so the heavy products become two
// wide matrix multiplies per iteration instead of many skinny ones. Restart i
// owns columns [i*rank, (i+1)*rank) of the stacked factors; activations are
// kept transposed (time x rank) so every hot loop walks contiguous columns.
// Each restart follows exactly the single-run semantics: its own RNG stream
// seeded cfg.seed + i, its own convergence test, frozen once converged.
struct RestartState {
  bool active = true;
  double prev = 0.0;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

Factorization run_all_restarts(const Matrix& e, int rank, const FactorizeConfig& cfg) {
  const Index m = e.rows();
  const Index t = e.cols();
  const Index r = rank;
  const int n_restarts = cfg.restarts;
  const Index stacked = r * n_restarts;

  const Matrix et = e.transpose();  // t x m
  Matrix w_all(m, stacked);
  Matrix ct_all(t, stacked);  // transposed activations
  const double scale = std::sqrt(e.mean() / static_cast<double>(rank));
  for (int i = 0; i < n_restarts; ++i) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
    const Index off = static_cast<Index>(i) * r;
    for (Index j = 0; j < r; ++j) {
      for (Index ch = 0; ch < m; ++ch) w_all(ch, off + j) = rng.uniform01() * scale;
    }
    for (Index j = 0; j < r; ++j) {
      for (Index s = 0; s < t; ++s) ct_all(s, off + j) = rng.uniform01() * scale;
    }
  }

  std::vector<RestartState> states(static_cast<size_t>(n_restarts));
  for (int i = 0; i < n_restarts; ++i) {
    const Index off = static_cast<Index>(i) * r;
    const double sq = detail::residual_sq(et.data(), w_all.data() + off * m,
                                          ct_all.data() + off * t, t, m, r);
    states[static_cast<size_t>(i)].prev = std::sqrt(sq);
    states[static_cast<size_t>(i)].history.push_back(states[static_cast<size_t>(i)].prev);
  }

  Matrix etw_all(t, stacked), ect_all(m, stacked);
  Matrix wtw(r, r), cct(r, r), denom_ct(t, r), denom_w(m, r);
  int n_active = n_restarts;
  for (int iter = 1; iter <= cfg.max_iter && n_active > 0; ++iter) {
    detail::tall_mul(etw_all.data(), et.data(), w_all.data(), t, m, stacked, false);
    for (int i = 0; i < n_restarts; ++i) {
      if (!states[static_cast<size_t>(i)].active) continue;
      const Index off = static_cast<Index>(i) * r;
      const double* wp = w_all.data() + off * m;
      double* ctp = ct_all.data() + off * t;
      detail::syrk_cols(wtw.data(), wp, m, r);
      detail::tall_mul(denom_ct.data(), ctp, wtw.data(), t, r, r, false);
      detail::mu_scale(ctp, etw_all.data() + off * t, denom_ct.data(), t * r,
                       update_floor);
    }
    detail::flat_mul_t(ect_all.data(), et.data(), ct_all.data(), m, t, stacked);
    for (int i = 0; i < n_restarts; ++i) {
      if (!states[static_cast<size_t>(i)].active) continue;
      const Index off = static_cast<Index>(i) * r;
      double* wp = w_all.data() + off * m;
      const double* ctp = ct_all.data() + off * t;
      detail::syrk_cols(cct.data(), ctp, t, r);
      detail::tall_mul(denom_w.data(), wp, cct.data(), m, r, r, false);
      detail::mu_scale(wp, ect_all.data() + off * m, denom_w.data(), m * r,
                       update_floor);
    }
    for (int i = 0; i < n_restarts; ++i) {
      RestartState& st = states[static_cast<size_t>(i)];
      if (!st.active) continue;
      const Index off = static_cast<Index>(i) * r;
      const double sq = detail::residual_sq(et.data(), w_all.data() + off * m,
                                            ct_all.data() + off * t, t, m, r);
      const double obj = std::sqrt(sq);
      st.history.push_back(obj);
      st.iterations = iter;
      if (st.prev - obj <= cfg.tol * std::max(st.prev, 1e-300)) {
        st.active = false;
        --n_active;
      }
      st.prev = obj;
    }
  }

  Factorization best;
  best.seed = cfg.seed;
  best.restarts_used = n_restarts;
  double best_obj = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < n_restarts; ++i) {
    const double obj = states[static_cast<size_t>(i)].prev;
    if (obj < best_obj) {
      best_obj = obj;
      best_i = i;
    }
  }
  const RestartState& win = states[static_cast<size_t>(best_i)];
  const Index off = static_cast<Index>(best_i) * r;
  best.w = w_all.middleCols(off, r);
  best.c = ct_all.middleCols(off, r).transpose();
  best.objective = win.prev;
  best.iterations = win.iterations;
  best.best_restart = best_i;
  best.objective_history = win.history;
  return best;
}

}  // namespace

Factorization factorize(const Matrix& e, int rank, const FactorizeConfig& cfg) {
  if (e.size() == 0) raise(errc::invalid_argument, "factorize: empty matrix");
  if (rank < 1 || rank > std::min(e.rows(), e.cols())) {
    raise(errc::invalid_argument, "factorize: rank must be in [1, min(rows, cols)]");
  }
  if (cfg.restarts < 1) raise(errc::invalid_argument, "factorize: restarts must be >= 1");
  if (e.minCoeff() < 0.0) raise(errc::negative_input, "factorize: input has negative entries");
  return run_all_restarts(e, rank, cfg);
}

double vaf(const Matrix& e, const Matrix& w, const Matrix& c) {
  if (w.rows() != e.rows() || c.cols() != e.cols() || w.cols() != c.rows()) {
    raise(errc::dimension_mismatch, "vaf: factor shapes do not match the input");
  }
  const double denom = e.squaredNorm();
  if (!(denom > 0.0)) raise(errc::zero_matrix, "vaf: undefined for an all-zero matrix");
  return 1.0 - (e - w * c).squaredNorm() / denom;
}

RankSweep rank_sweep(const Matrix& e, const FactorizeConfig& fcfg, const RankSelectConfig& rcfg) {
  if (rcfg.max_rank < 1) raise(errc::invalid_argument, "select_rank: max_rank must be >= 1");
  const int cap = static_cast<int>(std::min(e.rows(), e.cols()));
  const int max_rank = std::min(rcfg.max_rank, cap);
  RankSweep sweep;
  std::map<int, double> curve;
  for (int n = 1; n <= max_rank; ++n) {
    Factorization f = factorize(e, n, fcfg);
    curve[n] = vaf(e, f.w, f.c);
    sweep.by_rank.emplace(n, std::move(f));
  }
  sweep.curve = select_rank_from_curve(curve, rcfg);
  return sweep;
}

VafCurve select_rank(const Matrix& e, const FactorizeConfig& fcfg, const RankSelectConfig& rcfg) {
  return rank_sweep(e, fcfg, rcfg).curve;
}

VafCurve select_rank_from_curve(const std::map<int, double>& vaf_by_rank,
                                const RankSelectConfig& rcfg) {
  if (vaf_by_rank.empty()) raise(errc::invalid_argument, "select_rank: empty VAF curve");
  VafCurve out;
  out.vaf_by_rank = vaf_by_rank;
  for (const auto& [rank, value] : vaf_by_rank) {
    if (value < rcfg.vaf_threshold) continue;
    const auto next = vaf_by_rank.find(rank + 1);
    if (next != vaf_by_rank.end() && next->second - value < rcfg.growth_threshold) {
      out.selected_rank = rank;
      out.growth_rule_met = true;
      return out;
    }
  }
  for (const auto& [rank, value] : vaf_by_rank) {
    if (value >= rcfg.vaf_threshold) {
      out.selected_rank = rank;
      out.growth_rule_met = false;
      return out;
    }
  }
  raise(errc::numerical_failure, "select_rank: no rank reaches the VAF threshold");
}

}  // namespace synkin
