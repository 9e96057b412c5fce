#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "synkin/config.hpp"
#include "synkin/kinematics.hpp"
#include "synkin/nnmf.hpp"
#include "synkin/signal.hpp"
#include "synkin/stats.hpp"
#include "synkin/synergy.hpp"
#include "synkin/types.hpp"

namespace synkin {

// Study-level configuration resolved from a Config. `subjects` empty means
// "discover subject_<k> directories under data_root".
struct StudyConfig {
  std::filesystem::path data_root;
  std::filesystem::path output_dir;
  std::vector<int> subjects;
  std::vector<Condition> conditions;
  Condition reference_condition = Condition::standard;
  Condition stats_condition_a = Condition::standard;
  Condition stats_condition_b = Condition::fatigue;
  std::string fatigue_source = "raw";  // "raw" or "filtered"
  int nnmf_downsample = 20;
  BandpassConfig bandpass;
  EnvelopeConfig envelope;
  PsdConfig psd;
  FactorizeConfig factorize;
  RankSelectConfig rank_select;
  KinematicsConfig kinematics;
  double detect_rms_increase_pct = 50.0;
  double detect_rom_increase_deg = 10.0;
  std::map<std::string, std::string> raw_values;  // echoed into the report
};

StudyConfig study_config(const Config& cfg);

// Everything measured from one subject's recording of one condition.
// Synergy columns are ordered by the subject's reference-condition labeling
// (Synergy I first), so the same column means the same synergy across
// conditions and subjects.
struct SubjectConditionAnalysis {
  int subject = 0;  // directory id (subject_<k>)
  Condition condition = Condition::standard;
  FatigueMetrics fatigue;                  // per-channel RMS and median frequency
  VafCurve vaf;                            // VAF by rank, selected rank
  Matrix w_matched;                        // channels x n, unit-norm columns
  Matrix c_matched;                        // n x t activations (envelope time base)
  std::vector<double> match_similarity;    // cosine to the reference labeling
  NormalizedCycle activation_cycle;        // n x ell, mean activation per phase
  NormalizedCycle mean_cycle;              // joints x ell, averaged kinematic cycle
  Vector rom_deg;                          // per joint, from mean_cycle
};

// Cross-subject summaries for one condition.
struct ConditionGroupStats {
  Condition condition = Condition::standard;
  Vector rms_mean, rms_se;              // per channel
  Vector medfreq_mean, medfreq_se;      // per channel
  GroupSynergyStats synergy;            // mean / sample std of matched weights
  Matrix activation_mean;               // n x ell
  Matrix activation_se;                 // n x ell
  NormalizedCycle trajectory_mean;      // joints x ell
  Matrix trajectory_se;                 // joints x ell
  TrajectoryDeviationStats deviation;   // per-joint trajectory deviation stats
  Vector rom_deg;                       // per joint, from trajectory_mean
};

// One paired comparison between the two statistics conditions. `skipped` is
// set (with `note`) when the test could not run, e.g. all differences zero.
struct PairedComparison {
  std::string metric;
  double value_a = 0.0;
  double value_b = 0.0;
  TestResult test;
  bool significant = false;  // p < 0.05
  bool skipped = false;
  std::string note;
};

// Compensation verdict. `criteria` holds the letters of the rules that
// fired: 'a' upper-trapezius RMS increase, 'b' shoulder elevation-depression
// range-of-motion increase, 'c' shoulder flexion-extension range increase.
struct CompensationVerdict {
  int subject = 0;  // 0 = cohort-level verdict
  bool compensation = false;
  std::vector<char> criteria;
  double ut_rms_change_pct = 0.0;
  double rom_change_shoulder_ed_deg = 0.0;
  double rom_change_shoulder_fe_deg = 0.0;
};

struct DetectionResult {
  CompensationVerdict cohort;
  std::vector<CompensationVerdict> subjects;
};

struct StudyReport {
  std::vector<int> subjects;
  std::vector<Condition> conditions;
  int common_rank = 0;  // factorization rank used for matched synergies
  std::vector<SubjectConditionAnalysis> analyses;  // subject-major order
  std::vector<ConditionGroupStats> groups;         // in `conditions` order
  Condition stats_condition_a = Condition::standard;
  Condition stats_condition_b = Condition::fatigue;
  bool stats_insufficient_n = false;  // fewer than two subjects
  std::vector<PairedComparison> comparisons;
  DetectionResult detection;
  std::map<std::string, std::string> config_echo;
};

// Runs the full analysis over data_root: ingest -> band-pass filter ->
// envelope -> per-subject factorization with rank selection -> normalization
// and matching -> group statistics -> kinematics chain -> paired statistics
// -> detection. Writes report.json, the plot-series CSVs, and manifest.json
// into output_dir, and returns the in-memory report. Module errors are
// re-raised with "subject_<k>/<Condition>:" provenance; a missing condition
// directory raises missing_condition.
StudyReport run_study(const StudyConfig& cfg);

// Applies the standard-vs-fatigue compensation rules to a finished report:
// (a) upper-trapezius RMS increased by more than rms_increase_pct,
// (b) shoulder elevation-depression range of motion increased by at least
// rom_increase_deg, (c) same for shoulder flexion-extension. Produces one
// verdict per subject plus a cohort verdict from the group means. Raises
// missing_condition unless the report covers Standard and Fatigue.
DetectionResult detect_compensation(const StudyReport& report, double rms_increase_pct,
                                    double rom_increase_deg);

// Writes the five plot-series CSV families (fatigue bars, VAF curves,
// synergy bars, activation profiles, trajectories) plus manifest.json into
// output_dir. Returns {filename -> content hash} for every CSV written.
std::map<std::string, std::string> emit_plot_series(const StudyReport& report,
                                                    const std::filesystem::path& output_dir);

// Serializes the full report deterministically (sorted keys, round-trip
// number formatting).
void write_report_json(const StudyReport& report, const std::filesystem::path& path);

// FNV-1a 64-bit content hash, rendered as 16 hex digits.
std::string content_hash_hex(const std::string& bytes);

}  // namespace synkin
