#include "synkin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "synkin/csv.hpp"
#include "synkin/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace synkin {

namespace {

const char* kRomanNumerals[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};

std::string synergy_name(int index) {
  if (index >= 0 && index < 8) return std::string("Synergy ") + kRomanNumerals[index];
  return "Synergy " + std::to_string(index + 1);
}

std::string cell_tag(int subject, Condition cond) {
  return "subject_" + std::to_string(subject) + "/" + to_string(cond);
}

// Re-raises any library error with subject/condition provenance prepended.
template <typename Fn>
auto annotated(const std::string& tag, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    raise(e.code(), tag + ": " + e.what());
  }
}

Matrix decimate_columns(const Matrix& m, int step) {
  if (step <= 1) return m;
  const Index n = (m.cols() + step - 1) / step;
  Matrix out(m.rows(), n);
  for (Index i = 0; i < n; ++i) out.col(i) = m.col(i * static_cast<Index>(step));
  return out;
}

double mean_of(const Vector& v) { return v.size() ? v.mean() : 0.0; }

double sample_std(const Vector& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(n - 1));
}

double standard_error(const Vector& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  return sample_std(v) / std::sqrt(static_cast<double>(n));
}

// Everything derived from one (subject, condition) data cell before synergy
// matching (which needs the whole cohort's rank vote).
struct CellRaw {
  FatigueMetrics fatigue;
  RankSweep sweep;
  Matrix env;  // channels x time, decimated
  double env_rate_hz = 0.0;
  NormalizedCycle mean_cycle;
  Vector rom_deg;
};

CellRaw analyze_cell(const StudyConfig& cfg, int subject, Condition cond) {
  const fs::path dir = cfg.data_root / ("subject_" + std::to_string(subject)) / to_string(cond);
  if (!fs::exists(dir)) {
    raise(errc::missing_condition, cell_tag(subject, cond) + ": condition directory missing under " +
                                       cfg.data_root.string());
  }
  CellRaw out;

  EmgRecording rec = ingest_emg_csv(dir / "emg.csv", muscle_labels());
  rec.condition = cond;
  rec.subject_id = subject;
  const EmgRecording filtered = bandpass_filter(rec, cfg.bandpass);
  out.fatigue = compute_fatigue_metrics(cfg.fatigue_source == "filtered" ? filtered : rec, cfg.psd);

  const EnvelopeMatrix env = extract_envelope(filtered, cfg.envelope);
  out.env = decimate_columns(env.values, cfg.nnmf_downsample);
  out.env_rate_hz = env.sample_rate_hz / static_cast<double>(cfg.nnmf_downsample);
  out.sweep = rank_sweep(out.env, cfg.factorize, cfg.rank_select);

  const TimedMatrix timed = read_timed_csv(dir / "kinematics.csv", joint_labels());
  JointTrajectorySet traj;
  traj.angles = timed.values;
  traj.sample_rate_hz = timed.sample_rate_hz;
  traj.joints = timed.channels;
  traj.condition = cond;
  traj.subject_id = subject;
  const JointTrajectorySet smooth = smooth_trajectories(traj, cfg.kinematics.smooth_window_frac);
  const CycleSet cycles = segment_cycles(smooth, cfg.kinematics.expected_cycles, cfg.kinematics);
  std::vector<NormalizedCycle> norm;
  norm.reserve(cycles.segments.size());
  for (const Matrix& seg : cycles.segments) {
    norm.push_back(time_normalize(seg, cfg.kinematics.ell, cfg.kinematics.interp));
  }
  out.mean_cycle = average_cycles(norm);
  out.rom_deg.resize(out.mean_cycle.rows());
  for (Index j = 0; j < out.mean_cycle.rows(); ++j) {
    out.rom_deg[j] = range_of_motion(out.mean_cycle.row(j));
  }
  return out;
}

// Averages an activation trace (n x time) over fixed-period repetition
// cycles onto the phase grid. Activations carry no kinematic landmark, so
// cycles are cut on the protocol's nominal period.
NormalizedCycle activation_phase_profile(const Matrix& c, double rate_hz,
                                         const KinematicsConfig& kc) {
  const Index cycle_len = static_cast<Index>(std::llround(kc.cycle_period_s * rate_hz));
  if (cycle_len < 4) {
    raise(errc::signal_too_short, "activation cycle too short at the envelope sample rate");
  }
  const Index n_cycles = c.cols() / cycle_len;
  if (n_cycles < 1) {
    raise(errc::signal_too_short, "activation trace shorter than one repetition cycle");
  }
  std::vector<NormalizedCycle> cycles;
  cycles.reserve(static_cast<size_t>(n_cycles));
  for (Index k = 0; k < n_cycles; ++k) {
    cycles.push_back(time_normalize(c.middleCols(k * cycle_len, cycle_len), kc.ell, kc.interp));
  }
  return average_cycles(cycles);
}

// Elementwise mean and standard error across same-shaped matrices.
void elementwise_mean_se(const std::vector<Matrix>& items, Matrix& mean, Matrix& se) {
  const Index rows = items.front().rows();
  const Index cols = items.front().cols();
  mean = Matrix::Zero(rows, cols);
  se = Matrix::Zero(rows, cols);
  for (const Matrix& m : items) mean += m - items.front();
  mean = items.front() + mean / static_cast<double>(items.size());
  if (items.size() < 2) return;
  for (const Matrix& m : items) se += (m - mean).cwiseProduct(m - mean);
  se = (se / static_cast<double>(items.size() - 1)).cwiseSqrt() /
       std::sqrt(static_cast<double>(items.size()));
}

TrajectoryDeviationStats zero_deviation_stats(Index joints, Index subjects) {
  TrajectoryDeviationStats out;
  out.deviations = Matrix::Zero(joints, subjects);
  out.abs_deviations = Matrix::Zero(joints, subjects);
  out.similarity = Vector::Zero(joints);
  out.discrepancy = Vector::Zero(joints);
  out.abs_similarity = Vector::Zero(joints);
  out.abs_discrepancy = Vector::Zero(joints);
  return out;
}

std::vector<int> discover_subjects(const fs::path& root) {
  std::vector<int> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    constexpr const char* kPrefix = "subject_";
    if (name.rfind(kPrefix, 0) != 0) continue;
    const std::string digits = name.substr(std::string(kPrefix).size());
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
      continue;
    }
    out.push_back(std::stoi(digits));
  }
  std::sort(out.begin(), out.end());
  return out;
}

const ConditionGroupStats& group_for(const StudyReport& report, Condition cond,
                                     const char* who) {
  for (const ConditionGroupStats& g : report.groups) {
    if (g.condition == cond) return g;
  }
  raise(errc::missing_condition,
        std::string(who) + ": report does not cover condition " + to_string(cond));
}

const SubjectConditionAnalysis& analysis_for(const StudyReport& report, int subject,
                                             Condition cond, const char* who) {
  for (const SubjectConditionAnalysis& a : report.analyses) {
    if (a.subject == subject && a.condition == cond) return a;
  }
  raise(errc::missing_condition, std::string(who) + ": report has no analysis for " +
                                     cell_tag(subject, cond));
}

double percent_change(double reference, double test) {
  if (reference <= 0.0) return test > 0.0 ? 1e12 : 0.0;
  return (test / reference - 1.0) * 100.0;
}

CompensationVerdict make_verdict(int subject, double ut_change_pct, double rom_ed_change,
                                 double rom_fe_change, double rms_increase_pct,
                                 double rom_increase_deg) {
  CompensationVerdict v;
  v.subject = subject;
  v.ut_rms_change_pct = ut_change_pct;
  v.rom_change_shoulder_ed_deg = rom_ed_change;
  v.rom_change_shoulder_fe_deg = rom_fe_change;
  if (ut_change_pct > rms_increase_pct) v.criteria.push_back('a');
  if (rom_ed_change >= rom_increase_deg) v.criteria.push_back('b');
  if (rom_fe_change >= rom_increase_deg) v.criteria.push_back('c');
  v.compensation = !v.criteria.empty();
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::file_not_found, "cannot open for writing: " + path.string());
  out << text;
  if (!out) raise(errc::file_not_found, "write failed: " + path.string());
}

}  // namespace

StudyConfig study_config(const Config& cfg) {
  StudyConfig out;
  out.data_root = cfg.get_str("study.data_root");
  out.output_dir = cfg.get_str("study.output_dir");
  for (const std::string& s : cfg.get_list("study.subjects")) out.subjects.push_back(std::stoi(s));
  for (const std::string& s : cfg.get_list("study.conditions")) {
    out.conditions.push_back(parse_condition(s));
  }
  out.reference_condition = parse_condition(cfg.get_str("study.reference_condition"));
  out.stats_condition_a = parse_condition(cfg.get_str("stats.condition_a"));
  out.stats_condition_b = parse_condition(cfg.get_str("stats.condition_b"));
  out.fatigue_source = cfg.get_str("fatigue.source");
  if (out.fatigue_source != "raw" && out.fatigue_source != "filtered") {
    raise(errc::invalid_argument, "fatigue.source must be raw or filtered, got " +
                                      out.fatigue_source);
  }
  out.nnmf_downsample = cfg.get_int("nnmf.downsample");
  if (out.nnmf_downsample < 1) {
    raise(errc::invalid_argument, "nnmf.downsample must be at least 1");
  }
  out.bandpass = bandpass_config(cfg);
  out.envelope = envelope_config(cfg);
  out.psd = psd_config(cfg);
  out.factorize = factorize_config(cfg);
  out.rank_select = rank_select_config(cfg);
  out.kinematics = kinematics_config(cfg);
  out.detect_rms_increase_pct = cfg.get_double("detect.rms_increase_pct");
  out.detect_rom_increase_deg = cfg.get_double("detect.rom_increase_deg");
  out.raw_values = cfg.values();
  return out;
}

StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.conditions.empty()) raise(errc::invalid_argument, "study.conditions is empty");
  {
    std::set<Condition> seen(cfg.conditions.begin(), cfg.conditions.end());
    if (seen.size() != cfg.conditions.size()) {
      raise(errc::invalid_argument, "study.conditions lists a condition twice");
    }
    if (!seen.count(cfg.reference_condition)) {
      raise(errc::invalid_argument, "study.reference_condition " +
                                        to_string(cfg.reference_condition) +
                                        " is not among study.conditions");
    }
  }
  if (!fs::exists(cfg.data_root)) {
    raise(errc::file_not_found, "study.data_root does not exist: " + cfg.data_root.string());
  }

  StudyReport report;
  report.subjects = cfg.subjects.empty() ? discover_subjects(cfg.data_root) : cfg.subjects;
  std::sort(report.subjects.begin(), report.subjects.end());
  if (report.subjects.empty()) {
    raise(errc::file_not_found,
          "no subject_<k> directories found under " + cfg.data_root.string());
  }
  report.conditions = cfg.conditions;
  report.stats_condition_a = cfg.stats_condition_a;
  report.stats_condition_b = cfg.stats_condition_b;
  report.stats_insufficient_n = report.subjects.size() < 2;
  report.config_echo = cfg.raw_values;

  const auto n_subjects = report.subjects.size();
  const auto n_conditions = cfg.conditions.size();

  // Stage 1: per-cell measurements, independent across subjects (parallel
  // over subjects; assembly below is a deterministic subject-ordered
  // reduction).
  std::vector<std::vector<CellRaw>> cells(n_subjects);
  {
    const auto analyze_subject = [&](size_t si) {
      std::vector<CellRaw> row;
      row.reserve(n_conditions);
      for (const Condition cond : cfg.conditions) {
        const std::string tag = cell_tag(report.subjects[si], cond);
        row.push_back(annotated(tag, [&] { return analyze_cell(cfg, report.subjects[si], cond); }));
      }
      return row;
    };
    const size_t workers = std::min<size_t>(
        n_subjects, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1 || n_subjects <= 1) {
      for (size_t si = 0; si < n_subjects; ++si) cells[si] = analyze_subject(si);
    } else {
      std::vector<std::future<std::vector<CellRaw>>> futures;
      futures.reserve(n_subjects);
      for (size_t si = 0; si < n_subjects; ++si) {
        futures.push_back(std::async(std::launch::async, analyze_subject, si));
      }
      for (size_t si = 0; si < n_subjects; ++si) cells[si] = futures[si].get();
    }
  }

  const size_t ref_index = static_cast<size_t>(
      std::find(cfg.conditions.begin(), cfg.conditions.end(), cfg.reference_condition) -
      cfg.conditions.begin());

  // Cohort rank: the most common rank selected on the reference condition
  // (ties to the smaller rank), so matched synergies share a shape across
  // subjects even if an individual curve wobbles.
  {
    std::map<int, int> votes;
    for (size_t si = 0; si < n_subjects; ++si) votes[cells[si][ref_index].sweep.curve.selected_rank]++;
    int best_rank = 0, best_count = -1;
    for (const auto& [rank, count] : votes) {
      if (count > best_count) {
        best_rank = rank;
        best_count = count;
      }
    }
    report.common_rank = best_rank;
  }

  // Stage 2: factorize every cell at the cohort rank, normalize, order the
  // subject's reference-condition synergies by the key-muscle rule, and
  // match every condition onto that labeling.
  report.analyses.reserve(n_subjects * n_conditions);
  for (size_t si = 0; si < n_subjects; ++si) {
    const int subject = report.subjects[si];
    std::vector<NormalizedSynergy> normalized(n_conditions);
    for (size_t ci = 0; ci < n_conditions; ++ci) {
      const std::string tag = cell_tag(subject, cfg.conditions[ci]);
      normalized[ci] = annotated(tag, [&] {
        // The rank scan already factorized every rank up to max_rank; reuse
        // the cohort-rank run rather than repeating it.
        const auto& by_rank = cells[si][ci].sweep.by_rank;
        const auto hit = by_rank.find(report.common_rank);
        if (hit != by_rank.end()) return normalize_synergies(hit->second.w, hit->second.c);
        const Factorization fac = factorize(cells[si][ci].env, report.common_rank, cfg.factorize);
        return normalize_synergies(fac.w, fac.c);
      });
    }

    // Reference labeling: Synergy I (key muscle) first, the rest keep their
    // left-to-right order.
    const NormalizedSynergy& ref = normalized[ref_index];
    std::vector<Index> ref_order;
    {
      const int first = primary_synergy_index(ref.w, 0);
      ref_order.push_back(first);
      for (Index k = 0; k < ref.w.cols(); ++k) {
        if (k != first) ref_order.push_back(k);
      }
    }
    Matrix w_ref(ref.w.rows(), ref.w.cols());
    for (size_t i = 0; i < ref_order.size(); ++i) w_ref.col(static_cast<Index>(i)) = ref.w.col(ref_order[i]);

    for (size_t ci = 0; ci < n_conditions; ++ci) {
      const Condition cond = cfg.conditions[ci];
      const std::string tag = cell_tag(subject, cond);
      const NormalizedSynergy& cand = normalized[ci];

      SubjectConditionAnalysis a;
      a.subject = subject;
      a.condition = cond;
      a.fatigue = cells[si][ci].fatigue;
      a.vaf = cells[si][ci].sweep.curve;
      a.mean_cycle = cells[si][ci].mean_cycle;
      a.rom_deg = cells[si][ci].rom_deg;

      const SynergyLabeling match =
          annotated(tag, [&] { return match_synergies(w_ref, cand.w, 0); });
      a.w_matched.resize(cand.w.rows(), cand.w.cols());
      a.c_matched.resize(cand.c.rows(), cand.c.cols());
      for (Index i = 0; i < cand.w.cols(); ++i) {
        a.w_matched.col(i) = cand.w.col(match.order[static_cast<size_t>(i)]);
        a.c_matched.row(i) = cand.c.row(match.order[static_cast<size_t>(i)]);
      }
      a.match_similarity = match.similarity;
      a.activation_cycle = annotated(tag, [&] {
        return activation_phase_profile(a.c_matched, cells[si][ci].env_rate_hz, cfg.kinematics);
      });
      report.analyses.push_back(std::move(a));
    }
  }

  // Stage 3: cross-subject summaries per condition.
  const Index n_channels = static_cast<Index>(muscle_labels().size());
  for (size_t ci = 0; ci < n_conditions; ++ci) {
    const Condition cond = cfg.conditions[ci];
    ConditionGroupStats g;
    g.condition = cond;

    std::vector<Matrix> w_list, act_list;
    std::vector<NormalizedCycle> traj_list;
    Matrix rms(n_channels, static_cast<Index>(n_subjects));
    Matrix medfreq(n_channels, static_cast<Index>(n_subjects));
    for (size_t si = 0; si < n_subjects; ++si) {
      const SubjectConditionAnalysis& a = report.analyses[si * n_conditions + ci];
      rms.col(static_cast<Index>(si)) = a.fatigue.rms;
      medfreq.col(static_cast<Index>(si)) = a.fatigue.median_freq_hz;
      w_list.push_back(a.w_matched);
      act_list.push_back(a.activation_cycle);
      traj_list.push_back(a.mean_cycle);
    }

    g.rms_mean.resize(n_channels);
    g.rms_se.resize(n_channels);
    g.medfreq_mean.resize(n_channels);
    g.medfreq_se.resize(n_channels);
    for (Index ch = 0; ch < n_channels; ++ch) {
      g.rms_mean[ch] = mean_of(rms.row(ch));
      g.rms_se[ch] = standard_error(rms.row(ch));
      g.medfreq_mean[ch] = mean_of(medfreq.row(ch));
      g.medfreq_se[ch] = standard_error(medfreq.row(ch));
    }

    if (n_subjects >= 2) {
      g.synergy = group_synergy_stats(w_list);
    } else {
      g.synergy.mean = w_list.front();
      g.synergy.stdev = Matrix::Zero(w_list.front().rows(), w_list.front().cols());
    }
    elementwise_mean_se(act_list, g.activation_mean, g.activation_se);

    g.trajectory_mean = group_average(traj_list);
    Matrix traj_se;
    {
      std::vector<Matrix> as_matrices(traj_list.begin(), traj_list.end());
      Matrix unused_mean;
      elementwise_mean_se(as_matrices, unused_mean, traj_se);
    }
    g.trajectory_se = traj_se;
    g.deviation = n_subjects >= 2
                      ? similarity_discrepancy(traj_list, g.trajectory_mean)
                      : zero_deviation_stats(g.trajectory_mean.rows(), 1);
    g.rom_deg.resize(g.trajectory_mean.rows());
    for (Index j = 0; j < g.trajectory_mean.rows(); ++j) {
      g.rom_deg[j] = range_of_motion(g.trajectory_mean.row(j));
    }
    report.groups.push_back(std::move(g));
  }

  // Stage 4: paired statistics between the two configured conditions.
  const auto a_it = std::find(cfg.conditions.begin(), cfg.conditions.end(), cfg.stats_condition_a);
  const auto b_it = std::find(cfg.conditions.begin(), cfg.conditions.end(), cfg.stats_condition_b);
  if (!report.stats_insufficient_n && a_it != cfg.conditions.end() && b_it != cfg.conditions.end() &&
      cfg.stats_condition_a != cfg.stats_condition_b) {
    const size_t ai = static_cast<size_t>(a_it - cfg.conditions.begin());
    const size_t bi = static_cast<size_t>(b_it - cfg.conditions.begin());
    const auto subject_analysis = [&](size_t si, size_t ci) -> const SubjectConditionAnalysis& {
      return report.analyses[si * n_conditions + ci];
    };
    const auto add_comparison = [&](const std::string& metric, const Vector& va,
                                    const Vector& vb) {
      PairedComparison cmp;
      cmp.metric = metric;
      cmp.value_a = mean_of(va);
      cmp.value_b = mean_of(vb);
      try {
        cmp.test = wilcoxon_signed_rank(va, vb);
        cmp.significant = cmp.test.p_value < 0.05;
      } catch (const Error& e) {
        cmp.skipped = true;
        cmp.note = e.what();
      }
      report.comparisons.push_back(std::move(cmp));
    };

    const std::vector<std::string>& muscles = muscle_labels();
    Vector va(static_cast<Index>(n_subjects)), vb(static_cast<Index>(n_subjects));
    for (Index ch = 0; ch < n_channels; ++ch) {
      for (size_t si = 0; si < n_subjects; ++si) {
        va[static_cast<Index>(si)] = subject_analysis(si, ai).fatigue.rms[ch];
        vb[static_cast<Index>(si)] = subject_analysis(si, bi).fatigue.rms[ch];
      }
      add_comparison("rms/" + muscles[static_cast<size_t>(ch)], va, vb);
    }
    for (Index ch = 0; ch < n_channels; ++ch) {
      for (size_t si = 0; si < n_subjects; ++si) {
        va[static_cast<Index>(si)] = subject_analysis(si, ai).fatigue.median_freq_hz[ch];
        vb[static_cast<Index>(si)] = subject_analysis(si, bi).fatigue.median_freq_hz[ch];
      }
      add_comparison("medfreq/" + muscles[static_cast<size_t>(ch)], va, vb);
    }
    for (int k = 0; k < report.common_rank; ++k) {
      for (Index ch = 0; ch < n_channels; ++ch) {
        for (size_t si = 0; si < n_subjects; ++si) {
          va[static_cast<Index>(si)] = subject_analysis(si, ai).w_matched(ch, k);
          vb[static_cast<Index>(si)] = subject_analysis(si, bi).w_matched(ch, k);
        }
        add_comparison("weight/" + synergy_name(k) + "/" + muscles[static_cast<size_t>(ch)], va,
                       vb);
      }
    }
    const std::vector<std::string>& joints = joint_labels();
    for (Index j = 0; j < static_cast<Index>(joints.size()); ++j) {
      for (size_t si = 0; si < n_subjects; ++si) {
        va[static_cast<Index>(si)] = subject_analysis(si, ai).rom_deg[j];
        vb[static_cast<Index>(si)] = subject_analysis(si, bi).rom_deg[j];
      }
      add_comparison("rom/" + joints[static_cast<size_t>(j)], va, vb);
    }
    const ConditionGroupStats& group_a = report.groups[ai];
    const ConditionGroupStats& group_b = report.groups[bi];
    for (Index j = 0; j < static_cast<Index>(joints.size()); ++j) {
      for (size_t si = 0; si < n_subjects; ++si) {
        va[static_cast<Index>(si)] = group_a.deviation.abs_deviations(j, static_cast<Index>(si));
        vb[static_cast<Index>(si)] = group_b.deviation.abs_deviations(j, static_cast<Index>(si));
      }
      add_comparison("deviation/" + joints[static_cast<size_t>(j)], va, vb);
    }
  }

  // Stage 5: detection verdicts, when both conditions are present.
  const bool has_standard = std::find(cfg.conditions.begin(), cfg.conditions.end(),
                                      Condition::standard) != cfg.conditions.end();
  const bool has_fatigue = std::find(cfg.conditions.begin(), cfg.conditions.end(),
                                     Condition::fatigue) != cfg.conditions.end();
  if (has_standard && has_fatigue) {
    report.detection =
        detect_compensation(report, cfg.detect_rms_increase_pct, cfg.detect_rom_increase_deg);
  }

  // Stage 6: artifacts.
  fs::create_directories(cfg.output_dir);
  write_report_json(report, cfg.output_dir / "report.json");
  emit_plot_series(report, cfg.output_dir);
  return report;
}

DetectionResult detect_compensation(const StudyReport& report, double rms_increase_pct,
                                    double rom_increase_deg) {
  const Index ut = label_index(muscle_labels(), "UT");
  const Index shoulder_fe = label_index(joint_labels(), joint_labels()[1]);
  const Index shoulder_ed = label_index(joint_labels(), joint_labels()[2]);

  const ConditionGroupStats& std_group = group_for(report, Condition::standard, "detect");
  const ConditionGroupStats& fat_group = group_for(report, Condition::fatigue, "detect");

  DetectionResult out;
  out.cohort = make_verdict(0, percent_change(std_group.rms_mean[ut], fat_group.rms_mean[ut]),
                            fat_group.rom_deg[shoulder_ed] - std_group.rom_deg[shoulder_ed],
                            fat_group.rom_deg[shoulder_fe] - std_group.rom_deg[shoulder_fe],
                            rms_increase_pct, rom_increase_deg);
  for (const int subject : report.subjects) {
    const SubjectConditionAnalysis& s = analysis_for(report, subject, Condition::standard, "detect");
    const SubjectConditionAnalysis& f = analysis_for(report, subject, Condition::fatigue, "detect");
    out.subjects.push_back(make_verdict(
        subject, percent_change(s.fatigue.rms[ut], f.fatigue.rms[ut]),
        f.rom_deg[shoulder_ed] - s.rom_deg[shoulder_ed],
        f.rom_deg[shoulder_fe] - s.rom_deg[shoulder_fe], rms_increase_pct, rom_increase_deg));
  }
  return out;
}

std::string content_hash_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64 offset basis
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;  // FNV-1a 64 prime
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::map<std::string, std::string> emit_plot_series(const StudyReport& report,
                                                    const fs::path& output_dir) {
  fs::create_directories(output_dir);
  if (!fs::is_directory(output_dir)) {
    raise(errc::file_not_found, "output directory unusable: " + output_dir.string());
  }
  const std::vector<std::string>& muscles = muscle_labels();
  const std::vector<std::string>& joints = joint_labels();

  std::map<std::string, std::string> manifest;
  const auto emit = [&](const std::string& name, const std::string& header,
                        const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const std::string& row : rows) {
      text += row;
      text += '\n';
    }
    write_text_file(output_dir / name, text);
    manifest[name] = content_hash_hex(text);
  };
  const auto num = [](double v) { return format_number(v); };

  {  // Per-muscle amplitude and spectral summaries, one bar per condition.
    std::vector<std::string> rows;
    for (const ConditionGroupStats& g : report.groups) {
      for (size_t ch = 0; ch < muscles.size(); ++ch) {
        const Index c = static_cast<Index>(ch);
        rows.push_back(to_string(g.condition) + "," + muscles[ch] + "," + num(g.rms_mean[c]) +
                       "," + num(g.rms_se[c]) + "," + num(g.medfreq_mean[c]) + "," +
                       num(g.medfreq_se[c]));
      }
    }
    emit("plot_fatigue_bars.csv",
         "condition,muscle,rms_mean,rms_se,medfreq_mean,medfreq_se", rows);
  }

  {  // Reconstruction-quality curves, one line per subject and condition.
    std::vector<std::string> rows;
    for (const SubjectConditionAnalysis& a : report.analyses) {
      for (const auto& [rank, vaf] : a.vaf.vaf_by_rank) {
        rows.push_back(to_string(a.condition) + "," + std::to_string(a.subject) + "," +
                       std::to_string(rank) + "," + num(vaf) + "," +
                       (rank == a.vaf.selected_rank ? "1" : "0"));
      }
    }
    emit("plot_vaf_curves.csv", "condition,subject,rank,vaf,selected", rows);
  }

  {  // Synergy weight bars with crossing-subject spread and significance.
    std::map<std::string, const PairedComparison*> by_metric;
    for (const PairedComparison& c : report.comparisons) by_metric[c.metric] = &c;
    std::vector<std::string> rows;
    for (const ConditionGroupStats& g : report.groups) {
      for (Index k = 0; k < g.synergy.mean.cols(); ++k) {
        const std::string label = synergy_name(static_cast<int>(k));
        for (size_t ch = 0; ch < muscles.size(); ++ch) {
          const Index c = static_cast<Index>(ch);
          std::string sig, p;
          const auto it = by_metric.find("weight/" + label + "/" + muscles[ch]);
          if (it != by_metric.end() && !it->second->skipped) {
            sig = it->second->significant ? "1" : "0";
            p = num(it->second->test.p_value);
          }
          rows.push_back(to_string(g.condition) + "," + label + "," + muscles[ch] + "," +
                         num(g.synergy.mean(c, k)) + "," + num(g.synergy.stdev(c, k)) + "," +
                         sig + "," + p);
        }
      }
    }
    emit("plot_synergy_bars.csv",
         "condition,synergy,muscle,weight_mean,weight_std,significant,p_value", rows);
  }

  {  // Activation profiles vs phase.
    std::vector<std::string> rows;
    for (const ConditionGroupStats& g : report.groups) {
      for (Index k = 0; k < g.activation_mean.rows(); ++k) {
        for (Index i = 0; i < g.activation_mean.cols(); ++i) {
          const double phase =
              100.0 * static_cast<double>(i) / static_cast<double>(g.activation_mean.cols() - 1);
          rows.push_back(to_string(g.condition) + "," + synergy_name(static_cast<int>(k)) + "," +
                         num(phase) + "," + num(g.activation_mean(k, i)) + "," +
                         num(g.activation_se(k, i)));
        }
      }
    }
    emit("plot_activations.csv", "condition,synergy,phase_pct,mean,se", rows);
  }

  {  // Joint trajectories vs phase.
    std::vector<std::string> rows;
    for (const ConditionGroupStats& g : report.groups) {
      for (Index j = 0; j < g.trajectory_mean.rows(); ++j) {
        for (Index i = 0; i < g.trajectory_mean.cols(); ++i) {
          const double phase =
              100.0 * static_cast<double>(i) / static_cast<double>(g.trajectory_mean.cols() - 1);
          rows.push_back(to_string(g.condition) + "," + joints[static_cast<size_t>(j)] + "," +
                         num(phase) + "," + num(g.trajectory_mean(j, i)) + "," +
                         num(g.trajectory_se(j, i)));
        }
      }
    }
    emit("plot_trajectories.csv", "condition,joint,phase_pct,mean,se", rows);
  }

  {  // Manifest with content hashes.
    json files = json::array();
    for (const auto& [name, hash] : manifest) {
      json f;
      f["name"] = name;
      f["hash"] = hash;
      files.push_back(f);
    }
    json m;
    m["files"] = files;
    write_text_file(output_dir / "manifest.json", m.dump(2) + "\n");
  }
  return manifest;
}

void write_report_json(const StudyReport& report, const fs::path& path) {
  json j;
  j["subjects"] = report.subjects;
  {
    json conds = json::array();
    for (const Condition c : report.conditions) conds.push_back(to_string(c));
    j["conditions"] = conds;
  }
  j["common_rank"] = report.common_rank;
  j["channels"] = muscle_labels();
  j["joints"] = joint_labels();

  json analyses = json::array();
  for (const SubjectConditionAnalysis& a : report.analyses) {
    json ja;
    ja["subject"] = a.subject;
    ja["condition"] = to_string(a.condition);
    ja["rms"] = vector_to_json(a.fatigue.rms);
    ja["median_freq_hz"] = vector_to_json(a.fatigue.median_freq_hz);
    json vaf;
    for (const auto& [rank, v] : a.vaf.vaf_by_rank) vaf[std::to_string(rank)] = v;
    ja["vaf_by_rank"] = vaf;
    ja["selected_rank"] = a.vaf.selected_rank;
    ja["growth_rule_met"] = a.vaf.growth_rule_met;
    ja["synergy_weights"] = matrix_to_json(a.w_matched);
    ja["match_similarity"] = a.match_similarity;
    ja["activation_cycle"] = matrix_to_json(a.activation_cycle);
    ja["mean_cycle"] = matrix_to_json(a.mean_cycle);
    ja["rom_deg"] = vector_to_json(a.rom_deg);
    analyses.push_back(std::move(ja));
  }
  j["analyses"] = analyses;

  json groups = json::array();
  for (const ConditionGroupStats& g : report.groups) {
    json jg;
    jg["condition"] = to_string(g.condition);
    jg["rms_mean"] = vector_to_json(g.rms_mean);
    jg["rms_se"] = vector_to_json(g.rms_se);
    jg["medfreq_mean"] = vector_to_json(g.medfreq_mean);
    jg["medfreq_se"] = vector_to_json(g.medfreq_se);
    jg["synergy_mean"] = matrix_to_json(g.synergy.mean);
    jg["synergy_std"] = matrix_to_json(g.synergy.stdev);
    jg["activation_mean"] = matrix_to_json(g.activation_mean);
    jg["activation_se"] = matrix_to_json(g.activation_se);
    jg["trajectory_mean"] = matrix_to_json(g.trajectory_mean);
    jg["trajectory_se"] = matrix_to_json(g.trajectory_se);
    jg["deviation_mean_signed"] = vector_to_json(g.deviation.similarity);
    jg["deviation_std_signed"] = vector_to_json(g.deviation.discrepancy);
    jg["deviation_mean_abs"] = vector_to_json(g.deviation.abs_similarity);
    jg["deviation_std_abs"] = vector_to_json(g.deviation.abs_discrepancy);
    jg["deviation_per_subject_abs"] = matrix_to_json(g.deviation.abs_deviations);
    jg["rom_deg"] = vector_to_json(g.rom_deg);
    groups.push_back(std::move(jg));
  }
  j["groups"] = groups;

  json stats;
  stats["condition_a"] = to_string(report.stats_condition_a);
  stats["condition_b"] = to_string(report.stats_condition_b);
  stats["insufficient_n"] = report.stats_insufficient_n;
  json comparisons = json::array();
  for (const PairedComparison& c : report.comparisons) {
    json jc;
    jc["metric"] = c.metric;
    jc["value_a"] = c.value_a;
    jc["value_b"] = c.value_b;
    jc["skipped"] = c.skipped;
    if (c.skipped) {
      jc["note"] = c.note;
    } else {
      jc["statistic"] = c.test.statistic;
      jc["p_value"] = c.test.p_value;
      jc["method"] = to_string(c.test.method);
      jc["n_effective"] = c.test.n_effective;
      jc["significant"] = c.significant;
    }
    comparisons.push_back(std::move(jc));
  }
  stats["comparisons"] = comparisons;
  j["stats"] = stats;

  const auto verdict_json = [](const CompensationVerdict& v) {
    json jv;
    jv["subject"] = v.subject;
    jv["compensation"] = v.compensation;
    json crit = json::array();
    for (const char c : v.criteria) crit.push_back(std::string(1, c));
    jv["criteria"] = crit;
    jv["ut_rms_change_pct"] = v.ut_rms_change_pct;
    jv["rom_change_shoulder_elev_dep_deg"] = v.rom_change_shoulder_ed_deg;
    jv["rom_change_shoulder_flex_ext_deg"] = v.rom_change_shoulder_fe_deg;
    return jv;
  };
  if (report.detection.subjects.empty()) {
    j["detection"] = nullptr;
  } else {
    json detection;
    detection["cohort"] = verdict_json(report.detection.cohort);
    json per_subject = json::array();
    for (const CompensationVerdict& v : report.detection.subjects) {
      per_subject.push_back(verdict_json(v));
    }
    detection["subjects"] = per_subject;
    j["detection"] = detection;
  }

  j["config"] = report.config_echo;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace synkin
