#include "synkin/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "synkin/error.hpp"
#include "synkin/signal.hpp"

namespace synkin {

KinematicsConfig kinematics_config(const Config& cfg) {
  KinematicsConfig k;
  k.smooth_window_frac = cfg.get_double("kin.smooth_window_frac");
  k.ell = cfg.get_int("kin.ell");
  k.interp = cfg.get_str("kin.interp");
  k.peak_prominence_deg = cfg.get_double("kin.peak_prominence_deg");
  k.cycle_period_s = cfg.get_double("kin.cycle_period_s");
  k.expected_cycles = cfg.get_int("kin.expected_cycles");
  return k;
}

JointTrajectorySet smooth_trajectories(const JointTrajectorySet& traj, double window_frac) {
  if (window_frac <= 0.0 || window_frac >= 1.0) {
    raise(errc::invalid_argument, "smooth_trajectories: window fraction must be in (0, 1)");
  }
  const Index l = traj.angles.cols();
  int window = static_cast<int>(std::lround(window_frac * static_cast<double>(l)));
  if (window % 2 == 0) ++window;
  window = std::max(window, 3);
  if (l < window) {
    raise(errc::signal_too_short, "smooth_trajectories: trajectory shorter than the window");
  }
  JointTrajectorySet out = traj;
  for (Index j = 0; j < traj.angles.rows(); ++j) {
    out.angles.row(j) = moving_mean(Vector(traj.angles.row(j)), window).transpose();
  }
  return out;
}

namespace {

// Height a local maximum rises above the dips separating it from terrain of
// equal or greater height. A side whose walk runs off the trace edge without
// meeting such terrain is treated as open and ignored, so repetition
// boundaries at or near the start and end of a trial stay eligible even
// though the trace holds only a stub of signal beyond them. When both sides
// are open (a lone global peak) the deepest visited dip is used.
double peak_prominence(const Vector& x, Index peak) {
  const double h = x[peak];
  // Walk outward from the peak's own flat top, if it has one, so plateau
  // samples of equal height do not count as neighboring terrain.
  Index lo = peak;
  while (lo > 0 && x[lo - 1] == h) --lo;
  Index hi = peak;
  while (hi + 1 < x.size() && x[hi + 1] == h) ++hi;

  double left_min = h;
  bool left_closed = false;
  bool left_any = false;
  for (Index i = lo; i-- > 0;) {
    if (x[i] >= h) {
      left_closed = true;
      break;
    }
    left_min = left_any ? std::min(left_min, x[i]) : x[i];
    left_any = true;
  }
  double right_min = h;
  bool right_closed = false;
  bool right_any = false;
  for (Index i = hi + 1; i < x.size(); ++i) {
    if (x[i] >= h) {
      right_closed = true;
      break;
    }
    right_min = right_any ? std::min(right_min, x[i]) : x[i];
    right_any = true;
  }
  if (left_closed && right_closed) return h - std::max(left_min, right_min);
  if (left_closed) return h - left_min;
  if (right_closed) return h - right_min;
  if (left_any && right_any) return h - std::min(left_min, right_min);
  if (left_any) return h - left_min;
  if (right_any) return h - right_min;
  return 0.0;
}

std::vector<Index> local_maxima(const Vector& x) {
  std::vector<Index> peaks;
  const Index n = x.size();
  for (Index i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || x[i] >= x[i - 1];
    const bool right_ok = (i == n - 1) || x[i] >= x[i + 1];
    // Reject flats: a peak must rise strictly above at least one neighbor.
    const bool strict = (i > 0 && x[i] > x[i - 1]) || (i + 1 < n && x[i] > x[i + 1]);
    if (left_ok && right_ok && strict) peaks.push_back(i);
  }
  return peaks;
}

}  // namespace

CycleSet segment_cycles(const JointTrajectorySet& traj, int expected_cycles,
                        const KinematicsConfig& cfg) {
  if (expected_cycles < 1) {
    raise(errc::invalid_argument, "segment_cycles: expected cycle count must be >= 1");
  }
  const Index elbow = label_index(traj.joints, joint_labels()[0]);
  const Vector x = traj.angles.row(elbow);
  if (x.size() < 3) raise(errc::signal_too_short, "segment_cycles: trajectory too short");

  const auto min_separation =
      static_cast<Index>(std::lround(0.5 * cfg.cycle_period_s * traj.sample_rate_hz));

  std::vector<Index> candidates;
  for (Index i : local_maxima(x)) {
    if (peak_prominence(x, i) >= cfg.peak_prominence_deg) candidates.push_back(i);
  }
  // Greedy by height: keep the tallest peaks that respect the separation.
  std::sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
    if (x[a] != x[b]) return x[a] > x[b];
    return a < b;
  });
  std::vector<Index> accepted;
  for (Index i : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](Index j) {
      return std::abs(static_cast<long long>(i) - static_cast<long long>(j)) <
             static_cast<long long>(min_separation);
    });
    if (clear) accepted.push_back(i);
  }
  std::sort(accepted.begin(), accepted.end());

  if (accepted.size() < 2) {
    raise(errc::no_cycles_detected, "segment_cycles: no repetition boundaries found");
  }
  const int found = static_cast<int>(accepted.size()) - 1;
  if (found != expected_cycles) {
    raise(errc::cycle_count_mismatch, "segment_cycles: found " + std::to_string(found) +
                                          " cycles, expected " + std::to_string(expected_cycles));
  }

  CycleSet out;
  out.boundaries = accepted;
  for (std::size_t k = 0; k + 1 < accepted.size(); ++k) {
    const Index lo = accepted[k];
    const Index hi = accepted[k + 1];
    out.segments.push_back(traj.angles.middleCols(lo, hi - lo + 1));
  }
  return out;
}

namespace {

// Second derivatives of the not-a-knot cubic spline through y over unit-spaced
// knots. With uniform spacing the end conditions collapse to exact central
// second differences at the second and second-to-last knots, leaving a strictly
// tridiagonal system for the interior.
Vector spline_moments(const Vector& y) {
  const Index n = y.size();
  Vector m = Vector::Zero(n);
  m[1] = y[0] - 2.0 * y[1] + y[2];
  m[n - 2] = y[n - 3] - 2.0 * y[n - 2] + y[n - 1];
  const Index unknowns = n - 4;  // m[2] .. m[n-3]
  if (unknowns > 0) {
    Vector diag = Vector::Constant(unknowns, 4.0);
    Vector rhs(unknowns);
    for (Index k = 0; k < unknowns; ++k) {
      const Index i = k + 2;
      rhs[k] = 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
    }
    rhs[0] -= m[1];
    rhs[unknowns - 1] -= m[n - 2];
    // Thomas elimination (sub- and super-diagonals are all ones).
    for (Index k = 1; k < unknowns; ++k) {
      const double w = 1.0 / diag[k - 1];
      diag[k] -= w;
      rhs[k] -= w * rhs[k - 1];
    }
    m[unknowns + 1] = rhs[unknowns - 1] / diag[unknowns - 1];
    for (Index k = unknowns - 1; k-- > 0;) {
      m[k + 2] = (rhs[k] - m[k + 3]) / diag[k];
    }
  }
  m[0] = 2.0 * m[1] - m[2];
  m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
  return m;
}

double spline_eval(const Vector& y, const Vector& m, double s) {
  const Index n = y.size();
  Index i = static_cast<Index>(std::floor(s));
  i = std::clamp(i, Index{0}, n - 2);
  const double t = s - static_cast<double>(i);
  const double u = 1.0 - t;
  return y[i] * u + y[i + 1] * t + m[i] / 6.0 * (u * u * u - u) + m[i + 1] / 6.0 * (t * t * t - t);
}

}  // namespace

NormalizedCycle time_normalize(const Matrix& segment, int ell, const std::string& interp) {
  if (ell < 2) raise(errc::invalid_argument, "time_normalize: need at least 2 phase points");
  if (interp != "spline" && interp != "linear") {
    raise(errc::invalid_argument, "time_normalize: unknown interpolation '" + interp + "'");
  }
  const Index n = segment.cols();
  if (n < 4) raise(errc::signal_too_short, "time_normalize: segment shorter than 4 samples");

  NormalizedCycle out(segment.rows(), ell);
  const double stretch = static_cast<double>(n - 1) / static_cast<double>(ell - 1);
  for (Index j = 0; j < segment.rows(); ++j) {
    const Vector y = segment.row(j);
    if (interp == "spline") {
      const Vector m = spline_moments(y);
      for (int k = 1; k + 1 < ell; ++k) {
        out(j, k) = spline_eval(y, m, static_cast<double>(k) * stretch);
      }
    } else {
      for (int k = 1; k + 1 < ell; ++k) {
        const double s = static_cast<double>(k) * stretch;
        const Index i = std::clamp(static_cast<Index>(std::floor(s)), Index{0}, n - 2);
        const double t = s - static_cast<double>(i);
        out(j, k) = y[i] * (1.0 - t) + y[i + 1] * t;
      }
    }
    out(j, 0) = y[0];
    out(j, ell - 1) = y[n - 1];
  }
  return out;
}

namespace {

NormalizedCycle mean_of(const std::vector<NormalizedCycle>& items, const char* what) {
  if (items.empty()) raise(errc::invalid_argument, std::string(what) + ": empty list");
  const NormalizedCycle& first = items.front();
  const Index rows = first.rows();
  const Index cols = first.cols();
  // Accumulate offsets from the first item rather than raw values: clustered
  // inputs lose no precision to a large common part, and identical inputs
  // average to the common value exactly.
  NormalizedCycle sum = NormalizedCycle::Zero(rows, cols);
  for (const NormalizedCycle& item : items) {
    if (item.rows() != rows || item.cols() != cols) {
      raise(errc::dimension_mismatch, std::string(what) + ": shapes differ");
    }
    sum += item - first;
  }
  return first + sum / static_cast<double>(items.size());
}

}  // namespace

NormalizedCycle average_cycles(const std::vector<NormalizedCycle>& cycles) {
  return mean_of(cycles, "average_cycles");
}

NormalizedCycle group_average(const std::vector<NormalizedCycle>& subjects) {
  return mean_of(subjects, "group_average");
}

TrajectoryDeviationStats similarity_discrepancy(const std::vector<NormalizedCycle>& subjects,
                                                const NormalizedCycle& mean) {
  if (subjects.size() < 2) {
    raise(errc::insufficient_subjects, "similarity_discrepancy: need at least two subjects");
  }
  const Index joints = mean.rows();
  const Index ell = mean.cols();
  const auto s = static_cast<Index>(subjects.size());

  TrajectoryDeviationStats out;
  out.deviations.resize(joints, s);
  out.abs_deviations.resize(joints, s);
  for (Index i = 0; i < s; ++i) {
    const NormalizedCycle& subject = subjects[static_cast<std::size_t>(i)];
    if (subject.rows() != joints || subject.cols() != ell) {
      raise(errc::dimension_mismatch, "similarity_discrepancy: subject shape differs from mean");
    }
    const Matrix diff = subject - mean;
    out.deviations.col(i) = diff.rowwise().mean();
    out.abs_deviations.col(i) = diff.cwiseAbs().rowwise().mean();
  }

  const auto spread = [s](const Matrix& dev, Vector& center, Vector& sd) {
    center = dev.rowwise().mean();
    Matrix centered = dev.colwise() - center;
    sd = (centered.array().square().rowwise().sum() / static_cast<double>(s - 1)).sqrt();
  };
  spread(out.deviations, out.similarity, out.discrepancy);
  spread(out.abs_deviations, out.abs_similarity, out.abs_discrepancy);
  return out;
}

bool phase_convention_ok(const NormalizedCycle& cycle, Index elbow_row) {
  if (elbow_row < 0 || elbow_row >= cycle.rows() || cycle.cols() < 2) {
    raise(errc::invalid_argument, "phase_convention_ok: bad row or trajectory");
  }
  Index arg_min = 0;
  cycle.row(elbow_row).minCoeff(&arg_min);
  const double phase = static_cast<double>(arg_min) / static_cast<double>(cycle.cols() - 1);
  return phase >= 0.40 && phase <= 0.60;
}

double range_of_motion(const Vector& trajectory) {
  if (trajectory.size() == 0) {
    raise(errc::signal_too_short, "range_of_motion: empty trajectory");
  }
  return trajectory.maxCoeff() - trajectory.minCoeff();
}

}  // namespace synkin
