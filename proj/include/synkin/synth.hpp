#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "synkin/mathutil.hpp"
#include "synkin/types.hpp"

namespace synkin {

// Everything planted for one recording condition. Phase templates live on a
// uniform grid of `ell` points spanning 0..100% of a curl cycle, endpoints
// included; both endpoints of every template must agree so that cycles tile
// into a continuous trial.
struct ConditionPlan {
  // Synergy directions, channels x synergies, unit-L2 columns.
  Matrix w;
  // Activation templates, synergies x ell, non-negative; row RMS carries the
  // planted activation amplitude.
  Matrix activations;
  // Per-channel amplitude multiplier applied to the activation profile.
  Vector rms_scale;
  // Per-channel shift of the carrier band edges in Hz (negative = downward,
  // the spectral signature of fatigue).
  Vector band_shift_hz;
  // Joint-angle templates, joints x ell, degrees.
  Matrix kin_templates;
  // Per-joint targets for the cohort's deviation statistics: mean and sample
  // standard deviation of the per-subject mean absolute deviation from the
  // cohort-average trajectory, in degrees. Zero means an identical cohort.
  Vector kin_dev_mean_deg;
  Vector kin_dev_std_deg;
};

// A full synthetic study: cohort size, timing, noise level, and one plan per
// condition. All randomness is derived from `seed`, so identical specs
// reproduce identical data bit for bit.
struct ScenarioSpec {
  int n_subjects = 12;
  int cycles_per_trial = 5;
  double cycle_period_s = 4.0;
  double emg_rate_hz = 1000.0;
  double kin_rate_hz = 100.0;
  // Carrier band of the surface-EMG model before any per-condition shift.
  double band_low_hz = 30.0;
  double band_high_hz = 80.0;
  // Additive white noise level relative to each channel's signal power.
  double snr_db = 20.0;
  // Subject-to-subject spread: perturbation of synergy vector entries,
  // whole-recording gain, and activation amplitude (all multiplicative,
  // standard deviations of a unit-mean factor).
  double weight_jitter = 0.005;
  double gain_jitter = 0.02;
  double activation_jitter = 0.05;
  // White measurement noise on joint angles, degrees.
  double kin_noise_deg = 0.3;
  std::uint64_t seed = 1;
  std::vector<Condition> conditions;
  std::map<Condition, ConditionPlan> plans;
};

// Raises invalid_argument (with the offending field named) when the spec is
// internally inconsistent: mismatched dimensions, non-unit synergy columns,
// negative activations, non-positive rates/SNR, carrier band outside
// (0, Nyquist), or template endpoints that disagree.
void validate_scenario(const ScenarioSpec& spec);

// A unit-RMS signal whose spectrum is flat over [low_hz, high_hz] and zero
// elsewhere, built from uniformly random spectral phases. Its median
// frequency estimates the band centre. Raises invalid_argument when the band
// is empty or does not fit below the Nyquist frequency.
Vector band_limited_carrier(Index n, double rate_hz, double low_hz, double high_hz, Rng& rng);

// Synthesizes one subject-condition recording: per-channel signal =
// (rms_scale x subject gain x W.C activation profile) modulating an
// independent flat-band carrier, plus white noise at the spec SNR relative
// to that channel's signal power. A channel with zero activation stays
// exactly silent. Deterministic per (seed, subject, condition).
// Raises invalid_argument for a bad spec or subject index and
// missing_condition when the condition has no plan.
EmgRecording generate_emg(const ScenarioSpec& spec, int subject, Condition condition);

// Synthesizes one subject-condition trajectory set: per-joint template plus
// a smooth subject-specific deviation, resampled to the cycle period, tiled
// over cycles_per_trial (sharing cycle endpoints), plus white measurement
// noise. Per-subject deviation amplitudes are laid out so that the cohort's
// mean absolute deviation statistics match the plan's kin_dev targets and
// the cohort-average trajectory equals the template. Deterministic per
// (seed, subject, condition). Errors as generate_emg.
JointTrajectorySet generate_kinematics(const ScenarioSpec& spec, int subject, Condition condition);

// The signed deviation amplitude of every subject for one joint: a two-level
// cohort pattern (one third high, two thirds low, signs balanced within each
// level) whose mean and sample standard deviation of absolute values equal
// the plan's targets exactly when both cohort levels hold an even number of
// subjects. Exposed for tests.
std::vector<double> subject_deviation_amplitudes(const ScenarioSpec& spec, Condition condition,
                                                 Index joint);

// The cohort-shared unit-mean-absolute deviation shape for one joint on the
// template phase grid. Exposed for tests.
Vector deviation_shape(const ScenarioSpec& spec, Index joint, Index ell);

// Built-in scenarios, selected by name in the `synth` subcommand:
//   "default"        full three-condition cohort planting the reference
//                    study's magnitudes (synergy shares, activation
//                    amplitudes, trajectory shapes, deviation table);
//   "null"           Standard and Fatigue share one plan -- nothing to
//                    detect; the false-positive control;
//   "fatigue_shift"  Standard vs Fatigue differing only by a planted
//                    upper-trapezius RMS x2.272 and a -3.8555 Hz carrier
//                    shift (-7.01% of the 55 Hz band centre);
//   "rom_shift"      Standard vs Fatigue differing only by +12 deg of
//                    shoulder flexion-extension range;
//   "identical"      zero jitter, zero deviation, zero kinematic noise --
//                    every subject identical;
//   "noiseless"      the default cohort with jitter and noise removed,
//                    for round-trip recovery tests.
ScenarioSpec default_scenario();
ScenarioSpec null_scenario();
ScenarioSpec fatigue_shift_scenario();
ScenarioSpec rom_shift_scenario();
ScenarioSpec identical_cohort_scenario();
ScenarioSpec noiseless_scenario();

// Lookup by the names above with cohort size, seed, and SNR overrides;
// raises invalid_argument for an unknown name.
ScenarioSpec scenario_by_name(const std::string& name, int n_subjects, std::uint64_t seed,
                              double snr_db);

// Writes the whole study to disk: subject_<k>/<Condition>/emg.csv and
// kinematics.csv for every cell, plus scenario.json at the root recording
// the full spec. Returns the list of files written (relative to root).
std::vector<std::string> write_scenario_tree(const ScenarioSpec& spec,
                                             const std::filesystem::path& root,
                                             const std::string& scenario_name);

}  // namespace synkin
