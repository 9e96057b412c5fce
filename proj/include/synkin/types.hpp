#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "synkin/error.hpp"

namespace synkin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Recording conditions for a bicep-curl trial, in protocol order.
enum class Condition { weight_free, standard, fatigue };

inline constexpr std::array<Condition, 3> all_conditions = {
    Condition::weight_free, Condition::standard, Condition::fatigue};

// Canonical condition names as used in directory layouts and reports.
std::string to_string(Condition c);
Condition parse_condition(const std::string& name);

// Canonical surface-EMG channel order: biceps brachii, brachioradialis,
// upper trapezius, triceps brachii, flexor carpi ulnaris, flexor carpi
// radialis, anterior deltoid, posterior deltoid.
inline const std::vector<std::string>& muscle_labels() {
  static const std::vector<std::string> labels = {"BIC", "BRA", "UT",  "TRI",
                                                  "FCU", "FCR", "AD",  "PD"};
  return labels;
}

// Canonical joint-angle channel order: elbow flexion-extension, shoulder
// flexion-extension, shoulder elevation-depression, wrist flexion-extension.
// Angles are in degrees; elbow 0 deg is fully flexed, so local maxima of the
// elbow trace mark the most-extended posture between repetitions.
inline const std::vector<std::string>& joint_labels() {
  static const std::vector<std::string> labels = {
      "elbow_flex_ext", "shoulder_flex_ext", "shoulder_elev_dep", "wrist_flex_ext"};
  return labels;
}

// Index of a label within a label list; raises missing_channel if absent.
Index label_index(const std::vector<std::string>& labels, const std::string& name);

// A multi-channel surface-EMG recording. samples is channels x time in mV,
// rows follow `channels` (canonical order after ingestion).
struct EmgRecording {
  Matrix samples;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
  Condition condition = Condition::standard;
  int subject_id = 0;
};

// Rectified, smoothed activity per channel; same layout as the recording it
// was derived from. Values are non-negative by construction.
struct EnvelopeMatrix {
  Matrix values;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
};

// Whole-trial amplitude and spectral summaries per channel, in the order of
// the recording's channel list. rms in mV, median frequency in Hz.
struct FatigueMetrics {
  Vector rms;
  Vector median_freq_hz;
  std::vector<std::string> channels;
};

// Percent changes of fatigue metrics between two recordings of the same
// channels: positive rms_change_pct means the test condition is larger.
struct FatigueChange {
  Vector rms_change_pct;
  Vector medfreq_change_pct;
  std::vector<std::string> channels;
};

// Joint-angle trajectories, joints x time in degrees, rows follow `joints`.
struct JointTrajectorySet {
  Matrix angles;
  double sample_rate_hz = 0.0;
  std::vector<std::string> joints;
  Condition condition = Condition::standard;
  int subject_id = 0;
};

// Repetition segmentation of a trial: boundaries are sample indices of the
// most-extended elbow posture; segment k spans [boundaries[k], boundaries[k+1]].
struct CycleSet {
  std::vector<Index> boundaries;
  std::vector<Matrix> segments;  // each joints x segment-length, endpoints shared
};

// A trajectory resampled onto the uniform 0..100% phase grid (joints x ell).
using NormalizedCycle = Matrix;

}  // namespace synkin
