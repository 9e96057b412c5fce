#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synkin/pipeline.hpp"
#include "synkin/synth.hpp"

using namespace synkin;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (const char c : text) n += c == '\n';
  return n;
}

// Test-sized analysis settings: fewer restarts and a smaller rank sweep keep
// the suite fast; the defaults are exercised by the end-to-end binary.
StudyConfig small_config(const fs::path& root, const fs::path& out) {
  Config c;
  c.set("study.data_root", root.string());
  c.set("study.output_dir", out.string());
  c.set("nnmf.restarts", "6");
  c.set("nnmf.max_iter", "400");
  c.set("nnmf.max_rank", "4");
  return study_config(c);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One shared three-subject study: generated, analyzed once, inspected by
// several cases below.
struct SharedStudy {
  fs::path root;
  fs::path out;
  StudyConfig cfg;
  StudyReport report;
};

const SharedStudy& shared_study() {
  static const SharedStudy value = [] {
    SharedStudy s;
    s.root = scratch_dir("synkin_pipeline_tree");
    ScenarioSpec spec = default_scenario();
    spec.n_subjects = 3;
    spec.seed = 7;
    write_scenario_tree(spec, s.root, "default");
    s.out = fs::temp_directory_path() / "synkin_pipeline_out";
    fs::remove_all(s.out);
    s.cfg = small_config(s.root, s.out);
    s.report = run_study(s.cfg);
    return s;
  }();
  return value;
}

template <typename Fn>
errc error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return errc::invalid_argument;
}

}  // namespace

TEST_CASE("study configuration reads analysis settings from config keys") {
  Config c;
  c.set("study.data_root", "/data/root");
  c.set("study.output_dir", "/data/out");
  c.set("study.subjects", "2, 4, 9");
  c.set("study.conditions", "Standard,Fatigue");
  c.set("study.reference_condition", "Standard");
  c.set("stats.condition_a", "Standard");
  c.set("stats.condition_b", "Fatigue");
  c.set("fatigue.source", "filtered");
  c.set("nnmf.downsample", "10");
  c.set("detect.rms_increase_pct", "35");
  c.set("detect.rom_increase_deg", "7.5");

  const StudyConfig cfg = study_config(c);
  CHECK(cfg.data_root == fs::path("/data/root"));
  CHECK(cfg.output_dir == fs::path("/data/out"));
  CHECK(cfg.subjects == std::vector<int>{2, 4, 9});
  CHECK(cfg.conditions == std::vector<Condition>{Condition::standard, Condition::fatigue});
  CHECK(cfg.reference_condition == Condition::standard);
  CHECK(cfg.fatigue_source == "filtered");
  CHECK(cfg.nnmf_downsample == 10);
  CHECK(cfg.detect_rms_increase_pct == doctest::Approx(35.0));
  CHECK(cfg.detect_rom_increase_deg == doctest::Approx(7.5));
  CHECK(cfg.raw_values.at("nnmf.downsample") == "10");

  SUBCASE("rejects an unknown fatigue source") {
    c.set("fatigue.source", "envelope");
    CHECK(error_code_of([&] { study_config(c); }) == errc::invalid_argument);
  }
  SUBCASE("rejects a non-positive downsample factor") {
    c.set("nnmf.downsample", "0");
    CHECK(error_code_of([&] { study_config(c); }) == errc::invalid_argument);
  }
}

TEST_CASE("full study analyzes every subject and condition") {
  const SharedStudy& s = shared_study();
  const StudyReport& r = s.report;

  // Subjects came from directory discovery (the config listed none).
  CHECK(r.subjects == std::vector<int>{1, 2, 3});
  REQUIRE(r.conditions.size() == 3);
  REQUIRE(r.analyses.size() == 9);
  CHECK(r.common_rank == 2);
  CHECK_FALSE(r.stats_insufficient_n);

  for (const SubjectConditionAnalysis& a : r.analyses) {
    CAPTURE(a.subject);
    CAPTURE(to_string(a.condition));
    CHECK(a.vaf.vaf_by_rank.at(r.common_rank) >= 0.90);
    CHECK(a.w_matched.rows() == 8);
    CHECK(a.w_matched.cols() == r.common_rank);
    REQUIRE_FALSE(a.match_similarity.empty());
    CHECK(*std::min_element(a.match_similarity.begin(), a.match_similarity.end()) > 0.7);
    // Column one carries the elbow-flexor-led synergy in every condition.
    CHECK(a.w_matched(0, 0) > a.w_matched.col(0).tail(6).maxCoeff());
    CHECK(a.activation_cycle.rows() == r.common_rank);
    CHECK(a.activation_cycle.cols() == s.cfg.kinematics.ell);
    CHECK(a.mean_cycle.rows() == 4);
    CHECK(a.mean_cycle.cols() == s.cfg.kinematics.ell);
    CHECK(a.rom_deg[0] == doctest::Approx(100.0).epsilon(0.10));
    CHECK(a.fatigue.rms.minCoeff() > 0.0);
  }

  REQUIRE(r.groups.size() == 3);
  const ConditionGroupStats* std_group = nullptr;
  const ConditionGroupStats* fat_group = nullptr;
  for (const ConditionGroupStats& g : r.groups) {
    if (g.condition == Condition::standard) std_group = &g;
    if (g.condition == Condition::fatigue) fat_group = &g;
    CHECK(g.rms_mean.minCoeff() > 0.0);
    CHECK(g.synergy.mean.cols() == r.common_rank);
    CHECK(g.activation_mean.rows() == r.common_rank);
    CHECK(g.trajectory_mean.rows() == 4);
    CHECK(g.rom_deg.size() == 4);
  }
  REQUIRE(std_group != nullptr);
  REQUIRE(fat_group != nullptr);

  // The planted contrast: trapezius amplitude more than doubles under
  // fatigue, and shoulder elevation range grows by more than ten degrees.
  const Index ut = label_index(muscle_labels(), "UT");
  CHECK(fat_group->rms_mean[ut] / std_group->rms_mean[ut] > 1.5);
  CHECK(fat_group->rom_deg[2] - std_group->rom_deg[2] > 10.0);

  // 8 rms + 8 median-frequency + 2x8 weights + 4 range + 4 deviation metrics.
  CHECK(r.comparisons.size() == 40);
  for (const PairedComparison& cmp : r.comparisons) {
    CAPTURE(cmp.metric);
    CHECK_FALSE(cmp.skipped);
    CHECK(cmp.test.n_effective <= 3);
    CHECK(cmp.test.p_value > 0.0);
    CHECK(cmp.test.p_value <= 1.0);
  }

  REQUIRE(r.detection.subjects.size() == 3);
  const std::string cohort_criteria(r.detection.cohort.criteria.begin(),
                                    r.detection.cohort.criteria.end());
  CHECK(r.detection.cohort.compensation);
  CHECK(cohort_criteria.find('a') != std::string::npos);
  CHECK(cohort_criteria.find('b') != std::string::npos);
  CHECK(cohort_criteria.find('c') == std::string::npos);
}

TEST_CASE("study artifacts land in the output directory") {
  const SharedStudy& s = shared_study();
  for (const char* name :
       {"report.json", "plot_fatigue_bars.csv", "plot_vaf_curves.csv", "plot_synergy_bars.csv",
        "plot_activations.csv", "plot_trajectories.csv", "manifest.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(s.out / name));
  }

  // Activation profiles: one row per condition, synergy, and phase sample.
  const std::string activations = slurp(s.out / "plot_activations.csv");
  CHECK(line_count(activations) == 1 + 3 * 2 * s.cfg.kinematics.ell);
  const std::string trajectories = slurp(s.out / "plot_trajectories.csv");
  CHECK(line_count(trajectories) == 1 + 3 * 4 * s.cfg.kinematics.ell);

  // The manifest lists exactly the five plot files with their hashes.
  const std::string manifest = slurp(s.out / "manifest.json");
  for (const char* name : {"plot_fatigue_bars.csv", "plot_vaf_curves.csv",
                           "plot_synergy_bars.csv", "plot_activations.csv",
                           "plot_trajectories.csv"}) {
    CAPTURE(name);
    CHECK(manifest.find(name) != std::string::npos);
    CHECK(manifest.find(content_hash_hex(slurp(s.out / name))) != std::string::npos);
  }
}

TEST_CASE("a second run reproduces every artifact byte for byte") {
  const SharedStudy& s = shared_study();
  StudyConfig cfg = s.cfg;
  cfg.output_dir = fs::temp_directory_path() / "synkin_pipeline_out_rerun";
  fs::remove_all(cfg.output_dir);
  run_study(cfg);
  for (const char* name :
       {"report.json", "plot_fatigue_bars.csv", "plot_vaf_curves.csv", "plot_synergy_bars.csv",
        "plot_activations.csv", "plot_trajectories.csv", "manifest.json"}) {
    CAPTURE(name);
    CHECK(slurp(s.out / name) == slurp(cfg.output_dir / name));
  }
}

TEST_CASE("content hash is stable and sensitive") {
  CHECK(content_hash_hex("") == "cbf29ce484222325");
  CHECK(content_hash_hex("a") == content_hash_hex("a"));
  CHECK(content_hash_hex("a") != content_hash_hex("b"));
  CHECK(content_hash_hex("ab") != content_hash_hex("ba"));
}

TEST_CASE("a missing condition directory is reported with its cell") {
  const fs::path root = scratch_dir("synkin_pipeline_missing");
  ScenarioSpec spec = scenario_by_name("fatigue_shift", 1, 3, 20.0);
  write_scenario_tree(spec, root, "fatigue_shift");
  fs::remove_all(root / "subject_1" / "Fatigue");

  StudyConfig cfg = small_config(root, root / "out");
  cfg.conditions = {Condition::standard, Condition::fatigue};
  cfg.subjects = {1};
  try {
    run_study(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_condition);
    CHECK(std::string(e.what()).find("subject_1/Fatigue") != std::string::npos);
  }
}

TEST_CASE("a single-subject study skips group statistics but still detects") {
  const fs::path root = scratch_dir("synkin_pipeline_single");
  ScenarioSpec spec = default_scenario();
  spec.n_subjects = 1;
  spec.seed = 11;
  write_scenario_tree(spec, root, "default");

  StudyConfig cfg = small_config(root, root / "out");
  cfg.conditions = {Condition::standard, Condition::fatigue};
  const StudyReport r = run_study(cfg);

  CHECK(r.subjects == std::vector<int>{1});
  CHECK(r.stats_insufficient_n);
  CHECK(r.comparisons.empty());
  for (const ConditionGroupStats& g : r.groups) {
    CHECK(g.rms_se.maxCoeff() == 0.0);
    CHECK(g.synergy.stdev.maxCoeff() == 0.0);
    CHECK(g.activation_se.maxCoeff() == 0.0);
    CHECK(g.deviation.abs_similarity.maxCoeff() == 0.0);
  }
  REQUIRE(r.detection.subjects.size() == 1);
  CHECK(r.detection.cohort.compensation);
  CHECK(r.detection.subjects[0].compensation);
}

TEST_CASE("a pure range-of-motion shift trips only the posture criterion") {
  const fs::path root = scratch_dir("synkin_pipeline_romshift");
  ScenarioSpec spec = scenario_by_name("rom_shift", 2, 5, 20.0);
  write_scenario_tree(spec, root, "rom_shift");

  StudyConfig cfg = small_config(root, root / "out");
  cfg.conditions = {Condition::standard, Condition::fatigue};
  const StudyReport r = run_study(cfg);

  const std::string criteria(r.detection.cohort.criteria.begin(),
                             r.detection.cohort.criteria.end());
  CHECK(criteria == "c");
  CHECK(r.detection.cohort.ut_rms_change_pct < 50.0);
  // The flex-ext excursion widens from 8 to 20 degrees, so the change lands
  // near +12 after smoothing and averaging.
  CHECK(r.detection.cohort.rom_change_shoulder_fe_deg == doctest::Approx(12.0).epsilon(0.10));
}

TEST_CASE("detection thresholds are strict for amplitude and inclusive for range") {
  // Hand-built report: one subject, amplitude change exactly at the
  // threshold, elevation range change exactly at the threshold.
  StudyReport r;
  r.subjects = {1};
  r.conditions = {Condition::standard, Condition::fatigue};

  const auto make_group = [](Condition cond, double ut_rms, double rom_ed, double rom_fe) {
    ConditionGroupStats g;
    g.condition = cond;
    g.rms_mean = Vector::Ones(8);
    g.rms_mean[label_index(muscle_labels(), "UT")] = ut_rms;
    g.rom_deg = Vector::Zero(4);
    g.rom_deg[2] = rom_ed;
    g.rom_deg[1] = rom_fe;
    return g;
  };
  const auto make_analysis = [](Condition cond, double ut_rms, double rom_ed, double rom_fe) {
    SubjectConditionAnalysis a;
    a.subject = 1;
    a.condition = cond;
    a.fatigue.rms = Vector::Ones(8);
    a.fatigue.rms[label_index(muscle_labels(), "UT")] = ut_rms;
    a.rom_deg = Vector::Zero(4);
    a.rom_deg[2] = rom_ed;
    a.rom_deg[1] = rom_fe;
    return a;
  };
  r.groups = {make_group(Condition::standard, 1.0, 20.0, 30.0),
              make_group(Condition::fatigue, 1.5, 30.0, 39.0)};
  r.analyses = {make_analysis(Condition::standard, 1.0, 20.0, 30.0),
                make_analysis(Condition::fatigue, 1.5, 30.0, 39.0)};

  // +50% exactly: amplitude criterion must stay silent (strictly greater
  // required); +10 degrees exactly: range criterion fires (at least).
  const DetectionResult at_threshold = detect_compensation(r, 50.0, 10.0);
  const std::string cohort(at_threshold.cohort.criteria.begin(),
                           at_threshold.cohort.criteria.end());
  CHECK(cohort == "b");
  CHECK(at_threshold.cohort.ut_rms_change_pct == doctest::Approx(50.0));
  REQUIRE(at_threshold.subjects.size() == 1);
  CHECK(std::string(at_threshold.subjects[0].criteria.begin(),
                    at_threshold.subjects[0].criteria.end()) == "b");

  // Lower thresholds: all three criteria fire.
  const DetectionResult loose = detect_compensation(r, 49.0, 9.0);
  CHECK(std::string(loose.cohort.criteria.begin(), loose.cohort.criteria.end()) == "abc");
  CHECK(loose.cohort.compensation);

  // Without a Fatigue group the detector refuses rather than guessing.
  StudyReport incomplete = r;
  incomplete.groups.pop_back();
  try {
    detect_compensation(incomplete, 50.0, 10.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_condition);
  }
}

TEST_CASE("study validation rejects inconsistent condition settings") {
  const SharedStudy& s = shared_study();

  StudyConfig bad = s.cfg;
  bad.conditions.clear();
  CHECK(error_code_of([&] { run_study(bad); }) == errc::invalid_argument);

  bad = s.cfg;
  bad.reference_condition = Condition::fatigue;
  bad.conditions = {Condition::standard};
  CHECK(error_code_of([&] { run_study(bad); }) == errc::invalid_argument);

  bad = s.cfg;
  bad.conditions = {Condition::standard, Condition::standard};
  CHECK(error_code_of([&] { run_study(bad); }) == errc::invalid_argument);

  bad = s.cfg;
  bad.data_root = s.root / "nowhere";
  CHECK(error_code_of([&] { run_study(bad); }) == errc::file_not_found);
}
