// Command-line front end: each subcommand exposes one stage of the analysis,
// `run` executes the whole study from a config file.
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synkin/csv.hpp"
#include "synkin/error.hpp"
#include "synkin/pipeline.hpp"
#include "synkin/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace synkin;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_format = true) {
  cmd->add_option("--config", args.config_path, "Configuration file (dotted keys)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory");
  auto* seed_opt = cmd->add_option("--seed", args.seed, "Random seed override");
  cmd->callback([&args, seed_opt] { args.seed_given = seed_opt->count() > 0; });
  if (with_format) {
    cmd->add_option("--format", args.format, "Summary format")
        ->check(CLI::IsMember({"json", "csv"}));
  }
}

Config load_config(const CommonArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg.load_file(args.config_path);
  if (args.seed_given) cfg.set("nnmf.seed", std::to_string(args.seed));
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::file_not_found, "cannot open for writing: " + path.string());
  out << text;
}


// Writes a labeled table (one row per label, one value column) as JSON or CSV.
void write_labeled_table(const fs::path& dir, const std::string& stem, const std::string& format,
                         const std::vector<std::string>& labels,
                         const std::vector<std::pair<std::string, Vector>>& columns) {
  if (format == "json") {
    json j;
    for (const auto& [name, values] : columns) {
      json col;
      for (size_t i = 0; i < labels.size(); ++i) col[labels[i]] = values[static_cast<Index>(i)];
      j[name] = col;
    }
    write_text(dir / (stem + ".json"), j.dump(2) + "\n");
    return;
  }
  std::string text = "label";
  for (const auto& [name, values] : columns) text += "," + name;
  text += "\n";
  for (size_t i = 0; i < labels.size(); ++i) {
    text += labels[i];
    for (const auto& [name, values] : columns) {
      text += "," + format_number(values[static_cast<Index>(i)]);
    }
    text += "\n";
  }
  write_text(dir / (stem + ".csv"), text);
}

// --- synth ----------------------------------------------------------------

int cmd_synth(const std::string& scenario, int subjects, double snr_db, std::uint64_t seed,
              const std::string& out_dir) {
  const ScenarioSpec spec = scenario_by_name(scenario, subjects, seed, snr_db);
  const std::vector<std::string> files = write_scenario_tree(spec, out_dir, scenario);
  std::cout << "wrote " << files.size() << " files under " << out_dir << "\n";
  return 0;
}

// --- filter ----------------------------------------------------------------

int cmd_filter(const std::string& input, const CommonArgs& args) {
  const Config cfg = load_config(args);
  const EmgRecording rec = ingest_emg_csv(input, muscle_labels());
  const EmgRecording filtered = bandpass_filter(rec, bandpass_config(cfg));
  const EnvelopeMatrix env = extract_envelope(filtered, envelope_config(cfg));
  const bool use_filtered = cfg.get_str("fatigue.source") == "filtered";
  const FatigueMetrics metrics =
      compute_fatigue_metrics(use_filtered ? filtered : rec, psd_config(cfg));

  fs::create_directories(args.out_dir);
  write_timed_csv(fs::path(args.out_dir) / "filtered.csv", filtered.samples,
                  filtered.sample_rate_hz, filtered.channels);
  write_timed_csv(fs::path(args.out_dir) / "envelope.csv", env.values, env.sample_rate_hz,
                  env.channels);
  write_labeled_table(args.out_dir, "fatigue_metrics", args.format, metrics.channels,
                      {{"rms", metrics.rms}, {"median_freq_hz", metrics.median_freq_hz}});

  std::cout << "channel  rms       medfreq_hz\n";
  for (size_t ch = 0; ch < metrics.channels.size(); ++ch) {
    const Index c = static_cast<Index>(ch);
    std::cout << metrics.channels[ch] << "  " << metrics.rms[c] << "  "
              << metrics.median_freq_hz[c] << "\n";
  }
  return 0;
}

// --- synergy ----------------------------------------------------------------

int cmd_synergy(const std::string& input, const CommonArgs& args) {
  const Config cfg = load_config(args);
  const EmgRecording rec = ingest_emg_csv(input, muscle_labels());
  const EmgRecording filtered = bandpass_filter(rec, bandpass_config(cfg));
  const EnvelopeMatrix env = extract_envelope(filtered, envelope_config(cfg));

  const int step = std::max(1, cfg.get_int("nnmf.downsample"));
  const Index n = (env.values.cols() + step - 1) / step;
  Matrix e(env.values.rows(), n);
  for (Index i = 0; i < n; ++i) e.col(i) = env.values.col(i * step);
  const double env_rate = env.sample_rate_hz / step;

  const FactorizeConfig fcfg = factorize_config(cfg);
  const VafCurve curve = select_rank(e, fcfg, rank_select_config(cfg));
  const Factorization fac = factorize(e, curve.selected_rank, fcfg);
  const NormalizedSynergy norm = normalize_synergies(fac.w, fac.c);
  const std::vector<std::string> labels = synergy_labels(norm.w, 0);

  fs::create_directories(args.out_dir);
  {
    std::string text = "muscle";
    for (const std::string& label : labels) text += "," + label;
    text += "\n";
    for (Index ch = 0; ch < norm.w.rows(); ++ch) {
      text += muscle_labels()[static_cast<size_t>(ch)];
      for (Index k = 0; k < norm.w.cols(); ++k) text += "," + format_number(norm.w(ch, k));
      text += "\n";
    }
    write_text(fs::path(args.out_dir) / "weights.csv", text);
  }
  write_timed_csv(fs::path(args.out_dir) / "activations.csv", norm.c, env_rate, labels);
  if (args.format == "json") {
    json j;
    j["selected_rank"] = curve.selected_rank;
    j["growth_rule_met"] = curve.growth_rule_met;
    for (const auto& [rank, vaf] : curve.vaf_by_rank) j["vaf_by_rank"][std::to_string(rank)] = vaf;
    j["labels"] = labels;
    write_text(fs::path(args.out_dir) / "vaf.json", j.dump(2) + "\n");
  } else {
    std::string text = "rank,vaf,selected\n";
    for (const auto& [rank, vaf] : curve.vaf_by_rank) {
      text += std::to_string(rank) + "," + format_number(vaf) + "," +
              (rank == curve.selected_rank ? "1" : "0") + "\n";
    }
    write_text(fs::path(args.out_dir) / "vaf.csv", text);
  }

  std::cout << "selected rank " << curve.selected_rank << " (VAF "
            << curve.vaf_by_rank.at(curve.selected_rank) << ")\n";
  for (size_t k = 0; k < labels.size(); ++k) std::cout << "column " << k + 1 << ": " << labels[k] << "\n";
  return 0;
}

// --- kinematics --------------------------------------------------------------

int cmd_kinematics(const std::string& input, const CommonArgs& args) {
  const Config cfg = load_config(args);
  const KinematicsConfig kcfg = kinematics_config(cfg);
  const TimedMatrix timed = read_timed_csv(input, joint_labels());
  JointTrajectorySet traj;
  traj.angles = timed.values;
  traj.sample_rate_hz = timed.sample_rate_hz;
  traj.joints = timed.channels;

  const JointTrajectorySet smooth = smooth_trajectories(traj, kcfg.smooth_window_frac);
  const CycleSet cycles = segment_cycles(smooth, kcfg.expected_cycles, kcfg);
  std::vector<NormalizedCycle> norm;
  for (const Matrix& seg : cycles.segments) {
    norm.push_back(time_normalize(seg, kcfg.ell, kcfg.interp));
  }
  const NormalizedCycle mean_cycle = average_cycles(norm);
  Vector rom(mean_cycle.rows());
  for (Index j = 0; j < mean_cycle.rows(); ++j) rom[j] = range_of_motion(mean_cycle.row(j));

  fs::create_directories(args.out_dir);
  write_timed_csv(fs::path(args.out_dir) / "mean_cycle.csv", mean_cycle,
                  static_cast<double>(kcfg.ell - 1), traj.joints);
  write_labeled_table(args.out_dir, "rom", args.format, traj.joints, {{"rom_deg", rom}});

  std::cout << "cycles: " << cycles.segments.size() << "\n";
  for (size_t j = 0; j < traj.joints.size(); ++j) {
    std::cout << traj.joints[j] << " ROM " << rom[static_cast<Index>(j)] << " deg\n";
  }
  return 0;
}

// --- stats ---------------------------------------------------------------

// Reads "metric,v1,v2,..." rows; all rows must have the same width.
std::vector<std::pair<std::string, Vector>> read_metric_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::file_not_found, "cannot open " + path.string());
  std::vector<std::pair<std::string, Vector>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) parts.push_back(field);
    if (parts.size() < 2) {
      raise(errc::parse_error, path.string() + ": need a metric name and at least one value");
    }
    Vector values(static_cast<Index>(parts.size() - 1));
    for (size_t i = 1; i < parts.size(); ++i) {
      try {
        values[static_cast<Index>(i - 1)] = std::stod(parts[i]);
      } catch (const std::exception&) {
        raise(errc::parse_error, path.string() + ": non-numeric value '" + parts[i] + "'");
      }
    }
    if (!rows.empty() && rows.front().second.size() != values.size()) {
      raise(errc::parse_error, path.string() + ": rows have differing widths");
    }
    rows.emplace_back(parts[0], std::move(values));
  }
  if (rows.empty()) raise(errc::parse_error, path.string() + ": no data rows");
  return rows;
}

int cmd_stats(const std::string& file_a, const std::string& file_b, const CommonArgs& args) {
  const auto rows_a = read_metric_rows(file_a);
  const auto rows_b = read_metric_rows(file_b);
  if (rows_a.size() != rows_b.size()) {
    raise(errc::dimension_mismatch, "inputs list different metric counts");
  }
  std::vector<LabeledTestResult> results;
  for (size_t i = 0; i < rows_a.size(); ++i) {
    if (rows_a[i].first != rows_b[i].first) {
      raise(errc::dimension_mismatch, "metric order differs: " + rows_a[i].first + " vs " +
                                          rows_b[i].first);
    }
    LabeledTestResult r;
    r.metric = rows_a[i].first;
    r.result = wilcoxon_signed_rank(rows_a[i].second, rows_b[i].second);
    results.push_back(std::move(r));
  }

  fs::create_directories(args.out_dir);
  if (args.format == "json") {
    json j = json::array();
    for (const LabeledTestResult& r : results) {
      json e;
      e["metric"] = r.metric;
      e["statistic"] = r.result.statistic;
      e["p_value"] = r.result.p_value;
      e["method"] = to_string(r.result.method);
      e["n_effective"] = r.result.n_effective;
      j.push_back(std::move(e));
    }
    write_text(fs::path(args.out_dir) / "paired_tests.json", j.dump(2) + "\n");
  } else {
    write_results_csv(fs::path(args.out_dir) / "paired_tests.csv", results);
  }
  for (const LabeledTestResult& r : results) {
    std::cout << r.metric << ": W=" << r.result.statistic << " p=" << r.result.p_value << "\n";
  }
  return 0;
}

// --- run / detect / plots ---------------------------------------------------

StudyConfig study_config_from(const CommonArgs& args, bool override_out) {
  Config cfg = load_config(args);
  if (override_out) cfg.set("study.output_dir", args.out_dir);
  return study_config(cfg);
}

void print_verdict(const CompensationVerdict& v, const std::string& who) {
  std::cout << who << ": " << (v.compensation ? "compensation" : "no compensation");
  if (!v.criteria.empty()) {
    std::cout << " (criteria ";
    for (const char c : v.criteria) std::cout << c;
    std::cout << ")";
  }
  std::cout << "\n";
}

int cmd_run(const CommonArgs& args, bool override_out) {
  const StudyConfig cfg = study_config_from(args, override_out);
  const StudyReport report = run_study(cfg);
  std::cout << "subjects: " << report.subjects.size() << ", conditions: "
            << report.conditions.size() << ", synergies: " << report.common_rank << "\n";
  for (const ConditionGroupStats& g : report.groups) {
    const Index ut = label_index(muscle_labels(), "UT");
    std::cout << to_string(g.condition) << ": UT rms " << g.rms_mean[ut] << ", elbow ROM "
              << g.rom_deg[0] << " deg\n";
  }
  if (!report.detection.subjects.empty()) print_verdict(report.detection.cohort, "cohort");
  std::cout << "report: " << (cfg.output_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_detect(const CommonArgs& args, double rms_pct, double rom_deg, bool thresholds_given) {
  const StudyConfig cfg = study_config_from(args, false);
  const StudyReport report = run_study(cfg);
  const DetectionResult detection =
      thresholds_given ? detect_compensation(report, rms_pct, rom_deg) : report.detection;
  if (detection.subjects.empty()) {
    raise(errc::missing_condition, "detection needs both Standard and Fatigue conditions");
  }
  if (args.format == "json") {
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
    json j;
    j["cohort"] = verdict_json(detection.cohort);
    json subjects = json::array();
    for (const CompensationVerdict& v : detection.subjects) subjects.push_back(verdict_json(v));
    j["subjects"] = subjects;
    std::cout << j.dump(2) << "\n";
  } else {
    print_verdict(detection.cohort, "cohort");
    for (const CompensationVerdict& v : detection.subjects) {
      print_verdict(v, "subject_" + std::to_string(v.subject));
    }
  }
  return 0;
}

int cmd_plots(const CommonArgs& args) {
  const StudyConfig cfg = study_config_from(args, false);
  const StudyReport report = run_study(cfg);
  const auto manifest = emit_plot_series(report, args.out_dir);
  for (const auto& [name, hash] : manifest) std::cout << hash << "  " << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Muscle synergy and kinematics analysis for repeated lifting trials"};
  app.require_subcommand(1);

  // synth
  std::string synth_scenario = "default";
  int synth_subjects = 12;
  double synth_snr = 20.0;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "data";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic study data tree");
  synth->add_option("--scenario", synth_scenario,
                    "default | null | fatigue_shift | rom_shift | identical | noiseless");
  synth->add_option("--subjects", synth_subjects, "Cohort size")->check(CLI::PositiveNumber);
  synth->add_option("--snr", synth_snr, "Signal-to-noise ratio in dB");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--out", synth_out, "Directory for the data tree");

  // filter
  CommonArgs filter_args;
  std::string filter_input;
  auto* filter = app.add_subcommand("filter", "Band-pass, envelope, and fatigue metrics for one recording");
  filter->add_option("input", filter_input, "EMG CSV file")->required()->check(CLI::ExistingFile);
  add_common(filter, filter_args);

  // synergy
  CommonArgs synergy_args;
  std::string synergy_input;
  auto* synergy = app.add_subcommand("synergy", "Extract muscle synergies from one recording");
  synergy->add_option("input", synergy_input, "EMG CSV file")->required()->check(CLI::ExistingFile);
  add_common(synergy, synergy_args);

  // kinematics
  CommonArgs kin_args;
  std::string kin_input;
  auto* kin = app.add_subcommand("kinematics", "Cycle-normalized joint trajectories for one recording");
  kin->add_option("input", kin_input, "Joint-angle CSV file")->required()->check(CLI::ExistingFile);
  add_common(kin, kin_args);

  // stats
  CommonArgs stats_args;
  std::string stats_a, stats_b;
  auto* stats = app.add_subcommand("stats", "Paired tests between two metric tables");
  stats->add_option("a", stats_a, "First table (metric,v1,v2,...)")->required()->check(CLI::ExistingFile);
  stats->add_option("b", stats_b, "Second table, same metrics and width")->required()->check(CLI::ExistingFile);
  add_common(stats, stats_args);

  // run
  CommonArgs run_args;
  auto* run = app.add_subcommand("run", "Run the full study described by the config");
  add_common(run, run_args, /*with_format=*/false);

  // detect
  CommonArgs detect_args;
  double detect_rms_pct = 50.0, detect_rom_deg = 10.0;
  auto* detect = app.add_subcommand("detect", "Run the study and print compensation verdicts");
  add_common(detect, detect_args);
  auto* rms_opt = detect->add_option("--rms-pct", detect_rms_pct,
                                     "Amplitude-increase threshold, percent");
  auto* rom_opt = detect->add_option("--rom-deg", detect_rom_deg,
                                     "Range-of-motion increase threshold, degrees");

  // plots
  CommonArgs plots_args;
  auto* plots = app.add_subcommand("plots", "Run the study and write plot series CSVs");
  add_common(plots, plots_args, /*with_format=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_scenario, synth_subjects, synth_snr, synth_seed, synth_out);
    }
    if (filter->parsed()) return cmd_filter(filter_input, filter_args);
    if (synergy->parsed()) return cmd_synergy(synergy_input, synergy_args);
    if (kin->parsed()) return cmd_kinematics(kin_input, kin_args);
    if (stats->parsed()) return cmd_stats(stats_a, stats_b, stats_args);
    if (run->parsed()) return cmd_run(run_args, run->count("--out") > 0);
    if (detect->parsed()) {
      const bool given = rms_opt->count() > 0 || rom_opt->count() > 0;
      return cmd_detect(detect_args, detect_rms_pct, detect_rom_deg, given);
    }
    if (plots->parsed()) return cmd_plots(plots_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
