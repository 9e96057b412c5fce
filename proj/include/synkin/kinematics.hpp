#pragma once

#include <string>
#include <vector>

#include "synkin/config.hpp"
#include "synkin/types.hpp"

namespace synkin {

struct KinematicsConfig {
  double smooth_window_frac = 0.01;  // moving-mean window as a fraction of length
  int ell = 101;                     // phase-grid points, 0..100% inclusive
  std::string interp = "spline";     // "spline" (cubic, not-a-knot) or "linear"
  double peak_prominence_deg = 10.0;
  double cycle_period_s = 4.0;       // nominal curl period
  int expected_cycles = 5;
};

KinematicsConfig kinematics_config(const Config& cfg);

// Centered moving mean per joint, window = round(frac * length) forced odd
// (minimum 3), truncated at the edges. Raises signal_too_short when the
// trajectory is shorter than the window.
JointTrajectorySet smooth_trajectories(const JointTrajectorySet& traj, double window_frac);

// Splits a trial into repetition cycles at local maxima of the elbow
// flexion-extension angle (the most-extended posture; 0 degrees is full
// flexion). Peaks are accepted greedily by height, must rise at least
// peak_prominence_deg above the surrounding dips, and must be separated by at
// least half the nominal cycle period; trajectory endpoints are eligible.
// Raises no_cycles_detected when fewer than two boundaries survive and
// cycle_count_mismatch when the segment count differs from expected_cycles.
CycleSet segment_cycles(const JointTrajectorySet& traj, int expected_cycles,
                        const KinematicsConfig& cfg);

// Resamples a joints x length segment onto a uniform ell-point phase grid.
// Cubic not-a-knot spline by default, piecewise linear when interp ==
// "linear"; segment endpoints are preserved exactly. Raises signal_too_short
// for segments under 4 samples and invalid_argument for ell < 2 or an
// unknown interpolation name.
NormalizedCycle time_normalize(const Matrix& segment, int ell, const std::string& interp);

// Elementwise mean across a subject's repetition cycles.
// Raises invalid_argument on an empty list and dimension_mismatch when the
// cycles disagree in shape.
NormalizedCycle average_cycles(const std::vector<NormalizedCycle>& cycles);

// Elementwise mean across subjects (s >= 1), same shape rules as above.
NormalizedCycle group_average(const std::vector<NormalizedCycle>& subjects);

// Per-subject deviations from a group-mean trajectory, and their spread.
// For subject i and each joint, the signed deviation is the mean pointwise
// difference (subject minus mean) over the phase grid; the absolute variant
// uses the mean absolute difference. similarity is the across-subject mean of
// the deviations and discrepancy their sample standard deviation.
struct TrajectoryDeviationStats {
  Matrix deviations;      // joints x subjects, signed
  Matrix abs_deviations;  // joints x subjects
  Vector similarity;      // per joint, signed mean
  Vector discrepancy;     // per joint, signed sample std
  Vector abs_similarity;  // per joint
  Vector abs_discrepancy; // per joint
};

// Raises insufficient_subjects for fewer than two subjects and
// dimension_mismatch on shape disagreement with the mean.
TrajectoryDeviationStats similarity_discrepancy(const std::vector<NormalizedCycle>& subjects,
                                                const NormalizedCycle& mean);

// True when the deepest elbow flexion (the trajectory minimum of the given
// row) falls inside [40%, 60%] of the cycle, i.e. the lifting phase occupies
// roughly the first half. Used as a soft sanity check, not an error.
bool phase_convention_ok(const NormalizedCycle& cycle, Index elbow_row);

// Max minus min of a single-joint trajectory. Raises signal_too_short on an
// empty vector.
double range_of_motion(const Vector& trajectory);

}  // namespace synkin
