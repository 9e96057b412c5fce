#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "synkin/error.hpp"
#include "synkin/kinematics.hpp"
#include "synkin/mathutil.hpp"

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

// Four-joint trajectory set whose elbow row is the given trace; the other
// rows are distinct affine copies so segmentation slices can be checked to
// carry every joint.
JointTrajectorySet make_traj(const Vector& elbow, double fs) {
  JointTrajectorySet traj;
  traj.joints = joint_labels();
  traj.sample_rate_hz = fs;
  traj.condition = Condition::standard;
  traj.subject_id = 1;
  traj.angles.resize(4, elbow.size());
  traj.angles.row(0) = elbow.transpose();
  traj.angles.row(1) = 0.5 * elbow.transpose();
  traj.angles.row(2) = Vector::Constant(elbow.size(), 20.0).transpose();
  traj.angles.row(3) = -0.25 * elbow.transpose();
  return traj;
}

// Five curl repetitions at 100 Hz: elbow swings 100..150 degrees with peaks
// (most extended) every 4 s, including both endpoints.
Vector five_cycle_elbow(Index n = 2001, double fs = 100.0, double period_s = 4.0) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = 100.0 + 25.0 * (1.0 + std::cos(2.0 * M_PI * t / period_s));
  }
  return x;
}

Vector smooth_oracle(const Vector& x, int window) {
  const Index n = x.size();
  const Index lo_half = (window - 1) / 2;
  const Index hi_half = window / 2;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const Index lo = std::max(Index{0}, i - lo_half);
    const Index hi = std::min(n - 1, i + hi_half);
    out[i] = x.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

}  // namespace

TEST_CASE("moving-mean smoothing preserves constants and interior ramps") {
  const double fs = 100.0;
  SUBCASE("constant trajectory is unchanged") {
    const JointTrajectorySet traj = make_traj(Vector::Constant(500, 42.0), fs);
    const JointTrajectorySet smooth = smooth_trajectories(traj, 0.01);
    CHECK((smooth.angles - traj.angles).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("linear ramp is unchanged away from the edges") {
    Vector ramp(1000);
    for (Index i = 0; i < ramp.size(); ++i) ramp[i] = 10.0 + 0.05 * static_cast<double>(i);
    const JointTrajectorySet traj = make_traj(ramp, fs);
    const JointTrajectorySet smooth = smooth_trajectories(traj, 0.01);
    const int window = 11;  // round(0.01 * 1000) forced odd
    for (Index i = window; i < ramp.size() - window; ++i) {
      CHECK(smooth.angles(0, i) == doctest::Approx(ramp[i]).epsilon(1e-9));
    }
  }
  SUBCASE("step transition matches a direct truncated-window oracle") {
    Vector step = Vector::Zero(300);
    step.tail(150).setConstant(90.0);
    const JointTrajectorySet traj = make_traj(step, fs);
    const JointTrajectorySet smooth = smooth_trajectories(traj, 0.01);
    const int window = 3;  // round(0.01 * 300) = 3
    const Vector oracle = smooth_oracle(step, window);
    CHECK((smooth.angles.row(0).transpose() - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    // The blur region spans exactly the window around the step edge.
    for (Index i = 0; i + 1 < step.size(); ++i) {
      CHECK(smooth.angles(0, i) <= smooth.angles(0, i + 1) + 1e-12);  // monotone
    }
    CHECK(smooth.angles(0, 147) == 0.0);
    CHECK(smooth.angles(0, 152) == 90.0);
    CHECK(smooth.angles(0, 149) > 0.0);
    CHECK(smooth.angles(0, 150) < 90.0);
  }
  SUBCASE("degenerate inputs are rejected") {
    const JointTrajectorySet tiny = make_traj(Vector::Constant(2, 1.0), fs);
    expect_error(errc::signal_too_short, [&] { smooth_trajectories(tiny, 0.5); });
    const JointTrajectorySet traj = make_traj(Vector::Constant(100, 1.0), fs);
    expect_error(errc::invalid_argument, [&] { smooth_trajectories(traj, 0.0); });
    expect_error(errc::invalid_argument, [&] { smooth_trajectories(traj, 1.0); });
  }
}

TEST_CASE("cycle segmentation finds the planted repetition boundaries") {
  KinematicsConfig cfg;
  const JointTrajectorySet traj = make_traj(five_cycle_elbow(), 100.0);
  const CycleSet cycles = segment_cycles(traj, 5, cfg);
  REQUIRE(cycles.boundaries.size() == 6);
  REQUIRE(cycles.segments.size() == 5);
  for (int k = 0; k < 6; ++k) {
    CHECK(std::abs(static_cast<long>(cycles.boundaries[k]) - 400L * k) <= 5);
  }
  for (const Matrix& seg : cycles.segments) {
    CHECK(seg.rows() == 4);  // every joint row rides along
    CHECK(seg.cols() >= 396);
  }
  // Adjacent segments share their boundary sample.
  CHECK(cycles.segments[0].col(cycles.segments[0].cols() - 1) == cycles.segments[1].col(0));
}

TEST_CASE("cycle segmentation ignores small ripples below the prominence floor") {
  KinematicsConfig cfg;
  Vector elbow = five_cycle_elbow();
  for (Index i = 0; i < elbow.size(); ++i) {
    elbow[i] += 0.5 * std::sin(2.0 * M_PI * 3.0 * static_cast<double>(i) / 100.0);
  }
  const JointTrajectorySet traj = make_traj(elbow, 100.0);
  const CycleSet cycles = segment_cycles(traj, 5, cfg);
  CHECK(cycles.segments.size() == 5);
}

TEST_CASE("cycle segmentation error cases") {
  KinematicsConfig cfg;
  SUBCASE("constant angle has no cycles") {
    const JointTrajectorySet traj = make_traj(Vector::Constant(2001, 120.0), 100.0);
    expect_error(errc::no_cycles_detected, [&] { segment_cycles(traj, 5, cfg); });
  }
  SUBCASE("four clean cycles against an expectation of five") {
    const JointTrajectorySet traj = make_traj(five_cycle_elbow(1601), 100.0);
    expect_error(errc::cycle_count_mismatch, [&] { segment_cycles(traj, 5, cfg); });
  }
  SUBCASE("missing elbow row") {
    JointTrajectorySet traj = make_traj(five_cycle_elbow(), 100.0);
    traj.joints[0] = "something_else";
    expect_error(errc::missing_channel, [&] { segment_cycles(traj, 5, cfg); });
  }
}

TEST_CASE("segmenting a time-reversed trace mirrors the boundaries") {
  KinematicsConfig cfg;
  // Asymmetric cycles so the mirror is non-trivial: add a slow drift.
  Vector elbow = five_cycle_elbow();
  for (Index i = 0; i < elbow.size(); ++i) {
    elbow[i] += 2.0 * std::sin(2.0 * M_PI * static_cast<double>(i) / 2001.0);
  }
  const JointTrajectorySet fwd = make_traj(elbow, 100.0);
  const JointTrajectorySet rev = make_traj(Vector(elbow.reverse()), 100.0);
  const CycleSet a = segment_cycles(fwd, 5, cfg);
  const CycleSet b = segment_cycles(rev, 5, cfg);
  REQUIRE(a.boundaries.size() == b.boundaries.size());
  const Index n = elbow.size();
  for (std::size_t k = 0; k < a.boundaries.size(); ++k) {
    const Index mirrored = n - 1 - b.boundaries[b.boundaries.size() - 1 - k];
    CHECK(std::abs(static_cast<long>(a.boundaries[k]) - static_cast<long>(mirrored)) <= 1);
  }
}

TEST_CASE("phase normalization reproduces linear and polynomial segments") {
  SUBCASE("linear segments are exact in both modes") {
    Matrix seg(2, 40);
    for (Index i = 0; i < 40; ++i) {
      seg(0, i) = 3.0 + 0.7 * static_cast<double>(i);
      seg(1, i) = -1.0 - 0.2 * static_cast<double>(i);
    }
    for (const char* mode : {"spline", "linear"}) {
      const NormalizedCycle out = time_normalize(seg, 101, mode);
      REQUIRE(out.cols() == 101);
      for (int k = 0; k < 101; ++k) {
        const double s = static_cast<double>(k) * 39.0 / 100.0;
        CHECK(out(0, k) == doctest::Approx(3.0 + 0.7 * s).epsilon(1e-9));
        CHECK(out(1, k) == doctest::Approx(-1.0 - 0.2 * s).epsilon(1e-9));
      }
    }
  }
  SUBCASE("cubic polynomials are reproduced by the spline") {
    Matrix seg(1, 10);
    for (Index i = 0; i < 10; ++i) {
      const double t = static_cast<double>(i);
      seg(0, i) = t * t * t - 2.0 * t * t + t - 5.0;
    }
    const NormalizedCycle out = time_normalize(seg, 37, "spline");
    for (int k = 0; k < 37; ++k) {
      const double s = static_cast<double>(k) * 9.0 / 36.0;
      CHECK(out(0, k) == doctest::Approx(s * s * s - 2.0 * s * s + s - 5.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("phase normalization of a sine stays within 0.1% of the analytic curve") {
  Matrix seg(1, 400);
  for (Index i = 0; i < 400; ++i) {
    seg(0, i) = 30.0 * std::sin(2.0 * M_PI * static_cast<double>(i) / 399.0);
  }
  const NormalizedCycle out = time_normalize(seg, 101, "spline");
  double max_err = 0.0;
  for (int k = 0; k < 101; ++k) {
    const double s = static_cast<double>(k) * 399.0 / 100.0;
    max_err = std::max(max_err, std::abs(out(0, k) - 30.0 * std::sin(2.0 * M_PI * s / 399.0)));
  }
  CHECK(max_err < 0.001 * 30.0);
}

TEST_CASE("phase normalization edge behavior") {
  Matrix seg(1, 101);
  Rng rng(7);
  for (Index i = 0; i < 101; ++i) seg(0, i) = rng.uniform01() * 90.0;

  SUBCASE("matching grid sizes give the identity") {
    const NormalizedCycle out = time_normalize(seg, 101, "spline");
    CHECK((out - seg).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("endpoints are copied exactly") {
    const NormalizedCycle out = time_normalize(seg, 57, "spline");
    CHECK(out(0, 0) == seg(0, 0));
    CHECK(out(0, 56) == seg(0, 100));
  }
  SUBCASE("invalid requests are rejected") {
    expect_error(errc::signal_too_short, [&] { time_normalize(Matrix(seg.leftCols(3)), 101, "spline"); });
    expect_error(errc::invalid_argument, [&] { time_normalize(seg, 1, "spline"); });
    expect_error(errc::invalid_argument, [&] { time_normalize(seg, 101, "cosine"); });
  }
}

TEST_CASE("cycle averaging") {
  Matrix base(2, 101);
  for (Index i = 0; i < 101; ++i) {
    base(0, i) = 100.0 + 25.0 * std::cos(2.0 * M_PI * static_cast<double>(i) / 100.0);
    base(1, i) = 20.0 + 5.0 * std::sin(2.0 * M_PI * static_cast<double>(i) / 100.0);
  }

  SUBCASE("five identical cycles average to themselves") {
    const NormalizedCycle avg = average_cycles(std::vector<NormalizedCycle>(5, base));
    CHECK((avg - base).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("symmetric offsets cancel to the midline") {
    const NormalizedCycle avg = average_cycles(
        {NormalizedCycle(base.array() + 2.0), NormalizedCycle(base.array() - 2.0)});
    CHECK((avg - base).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("averaging five noisy repetitions shrinks the noise as expected") {
    const double sigma = 1.0;
    double total_rmse = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(500 + static_cast<std::uint64_t>(trial));
      std::vector<NormalizedCycle> noisy;
      for (int c = 0; c < 5; ++c) {
        NormalizedCycle cycle = base;
        for (Index j = 0; j < cycle.rows(); ++j) {
          for (Index i = 0; i < cycle.cols(); ++i) cycle(j, i) += sigma * rng.normal();
        }
        noisy.push_back(cycle);
      }
      const NormalizedCycle avg = average_cycles(noisy);
      const double rmse =
          std::sqrt((avg - base).array().square().sum() / static_cast<double>(base.size()));
      total_rmse += rmse;
      CHECK(rmse < 2.0 * sigma / std::sqrt(5.0));
    }
    CHECK(total_rmse / trials < 1.2 * sigma / std::sqrt(5.0));
  }
  SUBCASE("degenerate lists are rejected") {
    expect_error(errc::invalid_argument, [&] { average_cycles({}); });
    expect_error(errc::dimension_mismatch,
                 [&] { average_cycles({base, NormalizedCycle(base.leftCols(50))}); });
  }
}

TEST_CASE("group averaging across subjects") {
  Matrix base(1, 101);
  for (Index i = 0; i < 101; ++i) {
    base(0, i) = 100.0 + 25.0 * std::cos(2.0 * M_PI * static_cast<double>(i) / 100.0);
  }
  SUBCASE("a single subject averages to itself") {
    const NormalizedCycle avg = group_average({base});
    CHECK((avg - base).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("mirrored deviations cancel") {
    Matrix dev(1, 101);
    for (Index i = 0; i < 101; ++i) dev(0, i) = 4.0 * std::sin(0.13 * static_cast<double>(i));
    const NormalizedCycle avg = group_average({NormalizedCycle(base + dev), NormalizedCycle(base - dev)});
    CHECK((avg - base).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("twelve noisy subjects recover the template at the expected rate") {
    const double sigma = 2.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      std::vector<NormalizedCycle> subjects;
      for (int s = 0; s < 12; ++s) {
        NormalizedCycle subject = base;
        for (Index i = 0; i < subject.cols(); ++i) subject(0, i) += sigma * rng.normal();
        subjects.push_back(subject);
      }
      const NormalizedCycle avg = group_average(subjects);
      const double rmse =
          std::sqrt((avg - base).array().square().sum() / static_cast<double>(base.size()));
      CHECK(rmse < 1.5 * sigma / std::sqrt(12.0));
    }
  }
}

TEST_CASE("similarity and discrepancy of subject deviations") {
  Matrix mean(2, 101);
  for (Index i = 0; i < 101; ++i) {
    mean(0, i) = 100.0 + 25.0 * std::cos(2.0 * M_PI * static_cast<double>(i) / 100.0);
    mean(1, i) = 15.0;
  }

  SUBCASE("identical subjects have zero deviation and spread") {
    const TrajectoryDeviationStats stats = similarity_discrepancy({mean, mean, mean}, mean);
    CHECK(stats.deviations.cwiseAbs().maxCoeff() == 0.0);
    CHECK(stats.similarity.cwiseAbs().maxCoeff() == 0.0);
    CHECK(stats.discrepancy.cwiseAbs().maxCoeff() == 0.0);
    CHECK(stats.abs_similarity.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("constant +3/-3 offsets give the two-point textbook values") {
    const NormalizedCycle up = mean.array() + 3.0;
    const NormalizedCycle down = mean.array() - 3.0;
    const TrajectoryDeviationStats stats = similarity_discrepancy({up, down}, mean);
    for (Index j = 0; j < 2; ++j) {
      CHECK(stats.deviations(j, 0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(stats.deviations(j, 1) == doctest::Approx(-3.0).epsilon(1e-12));
      CHECK(stats.similarity[j] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(stats.discrepancy[j] == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-9));
      CHECK(stats.abs_deviations(j, 0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(stats.abs_similarity[j] == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(stats.abs_discrepancy[j] == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  SUBCASE("fewer than two subjects or mismatched shapes are rejected") {
    expect_error(errc::insufficient_subjects, [&] { similarity_discrepancy({mean}, mean); });
    expect_error(errc::dimension_mismatch,
                 [&] { similarity_discrepancy({mean, NormalizedCycle(mean.leftCols(50))}, mean); });
  }
}

TEST_CASE("deviation metrics satisfy their structural identities") {
  Rng rng(99);
  std::vector<NormalizedCycle> subjects;
  for (int s = 0; s < 7; ++s) {
    Matrix subject(3, 101);
    for (Index j = 0; j < 3; ++j) {
      for (Index i = 0; i < 101; ++i) subject(j, i) = 50.0 + 20.0 * rng.uniform01();
    }
    subjects.push_back(subject);
  }
  const NormalizedCycle mean = group_average(subjects);
  const TrajectoryDeviationStats stats = similarity_discrepancy(subjects, mean);

  // Deviations from the group's own mean sum to zero.
  CHECK(stats.deviations.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(stats.similarity.cwiseAbs().maxCoeff() <= 1e-9);

  // A constant offset applied to every subject and the mean cancels.
  std::vector<NormalizedCycle> shifted;
  for (const auto& s : subjects) shifted.push_back(NormalizedCycle(s.array() + 17.5));
  const TrajectoryDeviationStats shifted_stats =
      similarity_discrepancy(shifted, NormalizedCycle(mean.array() + 17.5));
  CHECK((shifted_stats.deviations - stats.deviations).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((shifted_stats.discrepancy - stats.discrepancy).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("phase normalization commutes with averaging for equal-length cycles") {
  Rng rng(41);
  std::vector<Matrix> raw;
  for (int c = 0; c < 5; ++c) {
    Matrix seg(2, 237);
    for (Index j = 0; j < 2; ++j) {
      for (Index i = 0; i < 237; ++i) seg(j, i) = 100.0 * rng.uniform01();
    }
    raw.push_back(seg);
  }
  std::vector<NormalizedCycle> normalized;
  for (const Matrix& seg : raw) normalized.push_back(time_normalize(seg, 101, "spline"));
  const NormalizedCycle route_a = average_cycles(normalized);
  const NormalizedCycle route_b = time_normalize(average_cycles(raw), 101, "spline");
  CHECK((route_a - route_b).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("phase convention check locates the deepest flexion") {
  Matrix good(1, 101);
  Matrix bad(1, 101);
  for (Index i = 0; i < 101; ++i) {
    const double phase = static_cast<double>(i) / 100.0;
    good(0, i) = 100.0 + 25.0 * std::cos(2.0 * M_PI * phase);          // minimum at 50%
    bad(0, i) = 100.0 + 25.0 * std::cos(2.0 * M_PI * (phase + 0.35));  // minimum at 15%
  }
  CHECK(phase_convention_ok(good, 0));
  CHECK_FALSE(phase_convention_ok(bad, 0));
  expect_error(errc::invalid_argument, [&] { phase_convention_ok(good, 3); });
}

TEST_CASE("range of motion is the trajectory span") {
  CHECK(range_of_motion(five_cycle_elbow()) == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(range_of_motion(Vector::Constant(10, 7.0)) == 0.0);
  expect_error(errc::signal_too_short, [&] { range_of_motion(Vector()); });
}
