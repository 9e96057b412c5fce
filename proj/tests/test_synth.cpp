#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synkin/error.hpp"
#include "synkin/kinematics.hpp"
#include "synkin/nnmf.hpp"
#include "synkin/signal.hpp"
#include "synkin/synergy.hpp"
#include "synkin/synth.hpp"

using namespace synkin;

namespace {

template <typename Fn>
void expect_error(errc code, Fn&& fn) {
  try {
    fn();
    FAIL_CHECK("expected an error but none was raised");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

// The production analysis chain from a raw recording to a decimated envelope
// matrix ready for factorization.
Matrix envelope_decimated(const EmgRecording& rec, int decimate = 20) {
  const EmgRecording filtered = bandpass_filter(rec, BandpassConfig{});
  const EnvelopeMatrix env = extract_envelope(filtered, EnvelopeConfig{});
  const Index n = env.values.cols() / decimate;
  Matrix out(env.values.rows(), n);
  for (Index i = 0; i < n; ++i) out.col(i) = env.values.col(i * decimate);
  return out;
}

// The production kinematics chain from a generated trajectory to the
// subject's averaged phase-normalized cycle.
NormalizedCycle subject_cycle(const ScenarioSpec& spec, int subject, Condition cond) {
  const KinematicsConfig kc;
  const JointTrajectorySet traj = generate_kinematics(spec, subject, cond);
  const JointTrajectorySet smooth = smooth_trajectories(traj, kc.smooth_window_frac);
  const CycleSet cycles = segment_cycles(smooth, kc.expected_cycles, kc);
  std::vector<NormalizedCycle> norm;
  norm.reserve(cycles.segments.size());
  for (const Matrix& seg : cycles.segments) norm.push_back(time_normalize(seg, kc.ell, kc.interp));
  return average_cycles(norm);
}

std::vector<NormalizedCycle> cohort_cycles(const ScenarioSpec& spec, Condition cond) {
  std::vector<NormalizedCycle> out;
  out.reserve(static_cast<size_t>(spec.n_subjects));
  for (int s = 0; s < spec.n_subjects; ++s) out.push_back(subject_cycle(spec, s, cond));
  return out;
}

double sample_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("scenario validation rejects inconsistent specs") {
  ScenarioSpec spec = default_scenario();
  validate_scenario(spec);  // the baseline passes

  SUBCASE("non-unit synergy column") {
    spec.plans[Condition::standard].w(0, 0) += 0.1;
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("negative activation") {
    spec.plans[Condition::standard].activations(0, 3) = -0.1;
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("non-positive snr") {
    spec.snr_db = 0.0;
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("listed condition without a plan") {
    spec.plans.erase(Condition::fatigue);
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("template endpoints that cannot tile") {
    spec.plans[Condition::standard].kin_templates(0, 0) += 1.0;
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("shifted carrier band leaving the valid range") {
    spec.plans[Condition::standard].band_shift_hz.setConstant(-30.5);
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("deviation spread without a mean") {
    spec.plans[Condition::standard].kin_dev_mean_deg[1] = 0.0;
    spec.plans[Condition::standard].kin_dev_std_deg[1] = 1.0;
    expect_error(errc::invalid_argument, [&] { validate_scenario(spec); });
  }
  SUBCASE("subject outside the cohort") {
    expect_error(errc::invalid_argument,
                 [&] { (void)generate_emg(spec, spec.n_subjects, Condition::standard); });
  }
  SUBCASE("condition not in the scenario") {
    ScenarioSpec two = null_scenario();  // lists Standard and Fatigue only
    expect_error(errc::missing_condition,
                 [&] { (void)generate_emg(two, 0, Condition::weight_free); });
  }
  SUBCASE("unknown scenario name") {
    expect_error(errc::invalid_argument, [&] { (void)scenario_by_name("bogus", 12, 1, 20.0); });
  }
}

TEST_CASE("carrier: unit power and band-centre median frequency") {
  const PsdConfig psd;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Vector x = band_limited_carrier(20000, 1000.0, 30.0, 80.0, rng);
    CHECK(rms_amplitude(x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(median_frequency(x, 1000.0, psd) - 55.0) < 2.0);
  }
  // A shifted band from the same phase stream: the median frequency tracks
  // the band centre, and the contrast between the two carriers isolates the
  // planted shift.
  Rng rng_a(42);
  Rng rng_b(42);
  const Vector base = band_limited_carrier(20000, 1000.0, 30.0, 80.0, rng_a);
  const Vector shifted = band_limited_carrier(20000, 1000.0, 30.0 - 3.8555, 80.0 - 3.8555, rng_b);
  const double f_base = median_frequency(base, 1000.0, psd);
  const double f_shift = median_frequency(shifted, 1000.0, psd);
  CHECK(std::abs(f_shift - (55.0 - 3.8555)) < 2.0);
  CHECK(std::abs((f_shift - f_base) - (-3.8555)) < 0.5);

  Rng bad(1);
  expect_error(errc::invalid_argument,
               [&] { (void)band_limited_carrier(20000, 1000.0, 600.0, 700.0, bad); });
}

TEST_CASE("zero activation stays exactly silent") {
  ScenarioSpec spec = noiseless_scenario();
  for (auto& [cond, plan] : spec.plans) plan.activations.setZero();
  const EmgRecording rec = generate_emg(spec, 0, Condition::standard);
  CHECK(rec.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generation is bit-deterministic per (spec, seed)") {
  const ScenarioSpec spec = default_scenario();
  const EmgRecording a = generate_emg(spec, 3, Condition::fatigue);
  const EmgRecording b = generate_emg(spec, 3, Condition::fatigue);
  CHECK(a.samples == b.samples);
  const JointTrajectorySet ka = generate_kinematics(spec, 3, Condition::fatigue);
  const JointTrajectorySet kb = generate_kinematics(spec, 3, Condition::fatigue);
  CHECK(ka.angles == kb.angles);

  ScenarioSpec reseeded = spec;
  reseeded.seed = 2;
  CHECK(generate_emg(reseeded, 3, Condition::fatigue).samples != a.samples);
}

TEST_CASE("recordings are finite, labeled, and canonically shaped") {
  const ScenarioSpec spec = default_scenario();
  for (const Condition cond : spec.conditions) {
    const EmgRecording rec = generate_emg(spec, 0, cond);
    CHECK(rec.samples.allFinite());
    CHECK(rec.samples.rows() == 8);
    CHECK(rec.samples.cols() == 20000);
    CHECK(rec.channels == muscle_labels());
    CHECK(rec.sample_rate_hz == 1000.0);
    const JointTrajectorySet traj = generate_kinematics(spec, 0, cond);
    CHECK(traj.angles.allFinite());
    CHECK(traj.angles.rows() == 4);
    CHECK(traj.angles.cols() == 2001);
    CHECK(traj.joints == joint_labels());
  }
}

TEST_CASE("noiseless round trip recovers the planted synergy directions") {
  const ScenarioSpec spec = noiseless_scenario();
  FactorizeConfig fc;
  fc.restarts = 10;
  for (const Condition cond : {Condition::standard, Condition::fatigue}) {
    const Matrix env = envelope_decimated(generate_emg(spec, 0, cond));
    const Factorization fac = factorize(env, 2, fc);
    const NormalizedSynergy norm = normalize_synergies(fac.w, fac.c);
    const SynergyLabeling match = match_synergies(spec.plans.at(cond).w, norm.w);
    REQUIRE(match.similarity.size() == 2);
    CHECK(match.similarity[0] >= 0.99);
    CHECK(match.similarity[1] >= 0.99);
  }
}

TEST_CASE("planted upper-trapezius contrast survives measurement") {
  const ScenarioSpec spec = fatigue_shift_scenario();
  const Index ut = label_index(muscle_labels(), "UT");
  const PsdConfig psd;

  // Single subject: amplitude ratio within 3% of x2.272 and the spectral
  // shift within 0.5 Hz of -3.8555.
  const FatigueMetrics std_m = compute_fatigue_metrics(generate_emg(spec, 0, Condition::standard), psd);
  const FatigueMetrics fat_m = compute_fatigue_metrics(generate_emg(spec, 0, Condition::fatigue), psd);
  const double ratio = fat_m.rms[ut] / std_m.rms[ut];
  CHECK(std::abs(ratio / 2.272 - 1.0) < 0.03);
  CHECK(std::abs((fat_m.median_freq_hz[ut] - std_m.median_freq_hz[ut]) - (-3.8555)) < 0.5);

  // Cohort: the mean ratio tightens around the planted value.
  double mean_ratio = 0.0;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const FatigueMetrics a = compute_fatigue_metrics(generate_emg(spec, s, Condition::standard), psd);
    const FatigueMetrics b = compute_fatigue_metrics(generate_emg(spec, s, Condition::fatigue), psd);
    mean_ratio += b.rms[ut] / a.rms[ut];
  }
  mean_ratio /= spec.n_subjects;
  CHECK(std::abs(mean_ratio / 2.272 - 1.0) < 0.015);
}

TEST_CASE("elbow trajectories hold the template range") {
  const ScenarioSpec spec = default_scenario();
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (const Condition cond : spec.conditions) {
      const JointTrajectorySet traj = generate_kinematics(spec, s, cond);
      CHECK(traj.angles.row(0).minCoeff() >= 45.0);
      CHECK(traj.angles.row(0).maxCoeff() <= 155.0);
    }
  }
}

TEST_CASE("identical cohort has exactly zero deviation statistics") {
  ScenarioSpec spec = identical_cohort_scenario();
  const std::vector<NormalizedCycle> cohort = cohort_cycles(spec, Condition::fatigue);
  const NormalizedCycle mean = group_average(cohort);
  const TrajectoryDeviationStats stats = similarity_discrepancy(cohort, mean);
  CHECK(stats.abs_similarity.maxCoeff() == 0.0);
  CHECK(stats.abs_discrepancy.maxCoeff() == 0.0);
}

TEST_CASE("shoulder elevation peaks at thirty degrees near twenty percent") {
  const ScenarioSpec spec = default_scenario();
  const NormalizedCycle mean = group_average(cohort_cycles(spec, Condition::fatigue));
  Index peak_at = 0;
  const double peak = mean.row(2).maxCoeff(&peak_at);
  CHECK(peak == doctest::Approx(30.0).epsilon(1.0 / 30.0));
  const double phase = static_cast<double>(peak_at) / static_cast<double>(mean.cols() - 1);
  CHECK(phase >= 0.15);
  CHECK(phase <= 0.25);
}

TEST_CASE("cohort deviation statistics reproduce the planted table") {
  const ScenarioSpec spec = default_scenario();
  for (const Condition cond : spec.conditions) {
    const std::vector<NormalizedCycle> cohort = cohort_cycles(spec, cond);
    const NormalizedCycle mean = group_average(cohort);
    const TrajectoryDeviationStats stats = similarity_discrepancy(cohort, mean);
    const ConditionPlan& plan = spec.plans.at(cond);
    for (Index j = 0; j < 4; ++j) {
      const double m = plan.kin_dev_mean_deg[j];
      const double s = plan.kin_dev_std_deg[j];
      CHECK(std::abs(stats.abs_similarity[j] - m) <= 0.15 * m);
      CHECK(std::abs(stats.abs_discrepancy[j] - s) <= 0.15 * s);
    }
  }
}

TEST_CASE("deviation amplitudes: balanced signs, exact moments") {
  const ScenarioSpec spec = default_scenario();
  for (const Condition cond : spec.conditions) {
    const ConditionPlan& plan = spec.plans.at(cond);
    for (Index j = 0; j < 4; ++j) {
      const std::vector<double> amp = subject_deviation_amplitudes(spec, cond, j);
      REQUIRE(amp.size() == 12);
      double signed_sum = 0.0;
      std::vector<double> mags;
      for (double a : amp) {
        signed_sum += a;
        mags.push_back(std::abs(a));
      }
      CHECK(std::abs(signed_sum) <= 1e-9);
      double mean = 0.0;
      for (double x : mags) mean += x;
      mean /= 12.0;
      CHECK(mean == doctest::Approx(plan.kin_dev_mean_deg[j]).epsilon(1e-12));
      CHECK(sample_std(mags) == doctest::Approx(plan.kin_dev_std_deg[j]).epsilon(1e-12));
      // One third of the cohort deviates strongly.
      int high = 0;
      for (double x : mags) high += (x > plan.kin_dev_mean_deg[j] + 1e-9) ? 1 : 0;
      CHECK(high == 4);
    }
  }
  // Equal plans (the null contrast) draw identical amplitudes per subject.
  const ScenarioSpec null_spec = null_scenario();
  for (Index j = 0; j < 4; ++j) {
    CHECK(subject_deviation_amplitudes(null_spec, Condition::standard, j) ==
          subject_deviation_amplitudes(null_spec, Condition::fatigue, j));
  }
}

TEST_CASE("deviation shapes: unit magnitude, elbow anchors pinned") {
  const ScenarioSpec spec = default_scenario();
  for (Index j = 0; j < 4; ++j) {
    const Vector g = deviation_shape(spec, j, 101);
    CHECK(g.cwiseAbs().mean() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.cwiseAbs().maxCoeff() <= 3.5);
  }
  const Vector elbow = deviation_shape(spec, 0, 101);
  CHECK(std::abs(elbow[0]) <= 1e-12);
  CHECK(std::abs(elbow[50]) <= 1e-12);
  CHECK(std::abs(elbow[100]) <= 1e-12);
  CHECK(elbow.cwiseAbs().maxCoeff() <= 2.4);
}

TEST_CASE("rank selection recovers the planted synergy count at 20 dB") {
  RankSelectConfig rc;
  rc.max_rank = 4;
  FactorizeConfig fc;
  fc.restarts = 10;
  fc.max_iter = 500;
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ScenarioSpec spec = default_scenario();
    spec.seed = seed;
    spec.n_subjects = 1;
    const Matrix env = envelope_decimated(generate_emg(spec, 0, Condition::standard));
    if (select_rank(env, fc, rc).selected_rank == 2) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("scenario tree: layout, ingestion round trip, determinism") {
  const ScenarioSpec spec = scenario_by_name("identical", 1, 7, 20.0);
  const std::filesystem::path root =
      std::filesystem::temp_directory_path() / "synkin_scenario_tree_test";
  std::filesystem::remove_all(root);
  const std::vector<std::string> files = write_scenario_tree(spec, root, "identical");
  CHECK(files.size() == 5);  // 1 subject x 2 conditions x 2 files + scenario.json
  CHECK(std::filesystem::exists(root / "subject_1" / "Standard" / "emg.csv"));
  CHECK(std::filesystem::exists(root / "subject_1" / "Fatigue" / "kinematics.csv"));
  CHECK(std::filesystem::exists(root / "scenario.json"));

  const EmgRecording back =
      ingest_emg_csv(root / "subject_1" / "Standard" / "emg.csv", muscle_labels());
  CHECK(back.sample_rate_hz == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(back.channels == muscle_labels());
  const EmgRecording direct = generate_emg(spec, 0, Condition::standard);
  CHECK((back.samples - direct.samples).cwiseAbs().maxCoeff() < 1e-9);

  // Rewriting the tree reproduces every byte.
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string first = slurp(root / "subject_1" / "Standard" / "emg.csv") +
                            slurp(root / "scenario.json");
  write_scenario_tree(spec, root, "identical");
  const std::string second = slurp(root / "subject_1" / "Standard" / "emg.csv") +
                             slurp(root / "scenario.json");
  CHECK(first == second);
  std::filesystem::remove_all(root);
}
