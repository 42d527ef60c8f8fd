#include "caudal/kinematics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace caudal {
namespace {

TEST(ServoAngle, SineZeroCrossing) {
  EXPECT_NEAR(servo_angle({60.0, 0.0, 1.4}, 0.0), 0.0, 1e-12);
}

TEST(ServoAngle, SinePeak) {
  EXPECT_NEAR(servo_angle({60.0, 0.0, 1.4}, 1.0 / (4.0 * 1.4)), 60.0, 1e-9);
}

TEST(ServoAngle, OffsetTrough) {
  // -20 + 40*sin(3*pi/2) = -60
  EXPECT_NEAR(servo_angle({40.0, -20.0, 1.4}, 3.0 / (4.0 * 1.4)), -60.0, 1e-9);
}

TEST(ServoAngle, StaysInsideEnvelope) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amp(0.0, 60.0), off(-20.0, 20.0),
      freq(0.1, 16.0), time(0.0, 100.0);
  for (int i = 0; i < 20000; ++i) {
    const PropulsionParams p{amp(rng), off(rng), freq(rng)};
    const double theta = servo_angle(p, time(rng));
    EXPECT_LE(std::abs(theta - p.offset_deg), p.amplitude_deg + 1e-9);
  }
}

TEST(ServoAngle, PeriodicInOnePeriod) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> amp(0.0, 60.0), off(-20.0, 20.0),
      freq(0.2, 8.0), time(0.0, 50.0);
  for (int i = 0; i < 20000; ++i) {
    const PropulsionParams p{amp(rng), off(rng), freq(rng)};
    const double t = time(rng);
    EXPECT_NEAR(servo_angle(p, t), servo_angle(p, t + 1.0 / p.frequency_hz),
                1e-9);
  }
}

TEST(Schedule, HalfWaveAmplitudeAtZero) {
  const PropulsionParams p = eval_schedule(half_wave_amplitude_schedule(), 0.0);
  EXPECT_DOUBLE_EQ(p.amplitude_deg, 20.0);
  EXPECT_DOUBLE_EQ(p.offset_deg, 0.0);
  EXPECT_DOUBLE_EQ(p.frequency_hz, 1.4);
}

TEST(Schedule, HalfWaveAmplitudePeak) {
  // t = 50 s puts the 0.005 Hz modulation at a quarter period: sin = 1.
  const PropulsionParams p =
      eval_schedule(half_wave_amplitude_schedule(), 50.0);
  EXPECT_NEAR(p.amplitude_deg, 60.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.offset_deg, 0.0);
}

TEST(Schedule, CoupledAtZero) {
  const PropulsionParams p =
      eval_schedule(coupled_amplitude_offset_schedule(), 0.0);
  EXPECT_DOUBLE_EQ(p.amplitude_deg, 20.0);
  EXPECT_DOUBLE_EQ(p.offset_deg, 0.0);
  EXPECT_DOUBLE_EQ(p.frequency_hz, 1.4);
}

TEST(Schedule, HalfWaveStaysInsideEnvelope) {
  const Schedule s = half_wave_amplitude_schedule();
  for (double t = 0.0; t <= 400.0; t += 0.25) {
    const PropulsionParams p = eval_schedule(s, t);
    EXPECT_GE(p.amplitude_deg, 20.0);
    EXPECT_LE(p.amplitude_deg, 60.0 + 1e-12);
    EXPECT_DOUBLE_EQ(p.offset_deg, 0.0);
  }
}

TEST(Schedule, CoupledBoundsFollowItsPublishedForm) {
  // The coupled schedule follows its published closed form: the offset spans
  // +/-20 deg and the amplitude floor is 20 deg. Its amplitude peak exceeds
  // the sweep envelope at some phases, which is a property of the form
  // itself, so only the floor and the offset span are contractual.
  const Schedule s = coupled_amplitude_offset_schedule();
  double a_max = 0.0;
  for (double t = 0.0; t <= 1000.0; t += 0.25) {
    const PropulsionParams p = eval_schedule(s, t);
    EXPECT_GE(p.amplitude_deg, 20.0);
    EXPECT_LE(std::abs(p.offset_deg), 20.0 + 1e-12);
    a_max = std::max(a_max, p.amplitude_deg);
  }
  EXPECT_GT(a_max, 50.0);
}

TEST(Schedule, CustomCallback) {
  Schedule s;
  s.kind = ScheduleKind::Custom;
  EXPECT_THROW(eval_schedule(s, 0.0), config_error);
  s.custom = [](double t) {
    return PropulsionParams{30.0 + t, 5.0, 1.4};
  };
  EXPECT_DOUBLE_EQ(eval_schedule(s, 2.0).amplitude_deg, 32.0);
  EXPECT_DOUBLE_EQ(eval_schedule(s, 2.0).offset_deg, 5.0);
}

TEST(Sweep, RespectsAllConstraints) {
  const SweepGrid grid;  // defaults
  const auto points = generate_sweep(grid);
  ASSERT_FALSE(points.empty());
  for (const auto& p : points) {
    EXPECT_LT(std::abs(p.offset_deg), 20.0);
    EXPECT_GT(p.amplitude_deg, 0.0);
    EXPECT_LE(p.amplitude_deg, 60.0 - std::abs(p.offset_deg));
    EXPECT_GT(p.frequency_hz, 0.0);
    EXPECT_LE(p.frequency_hz, 82.0 / p.amplitude_deg);
  }
}

TEST(Sweep, PeakStrokeSpeedBounded) {
  const auto points = generate_sweep(SweepGrid{});
  for (const auto& p : points)
    EXPECT_LE(2.0 * kPi * p.frequency_hz * p.amplitude_deg,
              2.0 * kPi * 82.0 * (1.0 + 1e-12));
}

TEST(Sweep, OversizedAmplitudeExcluded) {
  SweepGrid g;
  g.amplitude_min_deg = 70.0;
  g.amplitude_max_deg = 70.0;
  g.offset_min_deg = 0.0;
  g.offset_max_deg = 0.0;
  EXPECT_TRUE(generate_sweep(g).empty());
}

TEST(Sweep, FrequencyAboveStrokeLimitExcluded) {
  // 2.1 Hz at 41 deg exceeds 82/41 = 2.0 Hz, so nothing qualifies.
  SweepGrid g;
  g.amplitude_min_deg = 41.0;
  g.amplitude_max_deg = 41.0;
  g.offset_min_deg = 0.0;
  g.offset_max_deg = 0.0;
  g.frequency_min_hz = 2.1;
  g.frequencies_per_amplitude = 1;
  EXPECT_TRUE(generate_sweep(g).empty());
}

TEST(Sweep, AdmissiblePointIncluded) {
  SweepGrid g;
  g.amplitude_min_deg = 40.0;
  g.amplitude_max_deg = 40.0;
  g.offset_min_deg = 10.0;
  g.offset_max_deg = 10.0;
  g.frequency_min_hz = 1.4;
  g.frequencies_per_amplitude = 3;
  const auto points = generate_sweep(g);
  bool found = false;
  for (const auto& p : points)
    if (p.amplitude_deg == 40.0 && p.offset_deg == 10.0 &&
        p.frequency_hz == 1.4)
      found = true;
  EXPECT_TRUE(found);
}

TEST(Sweep, DeterministicOrdering) {
  SweepGrid g;
  g.offset_min_deg = -5.0;
  g.offset_max_deg = 5.0;
  g.offset_step_deg = 5.0;
  g.amplitude_min_deg = 30.0;
  g.amplitude_max_deg = 40.0;
  g.amplitude_step_deg = 10.0;
  g.frequency_min_hz = 1.0;
  g.frequencies_per_amplitude = 2;
  const auto points = generate_sweep(g);
  ASSERT_EQ(points.size(), 12u);  // 3 offsets x 2 amplitudes x 2 frequencies
  // offset outer, amplitude middle, frequency inner
  EXPECT_DOUBLE_EQ(points[0].offset_deg, -5.0);
  EXPECT_DOUBLE_EQ(points[0].amplitude_deg, 30.0);
  EXPECT_DOUBLE_EQ(points[0].frequency_hz, 1.0);
  EXPECT_DOUBLE_EQ(points[1].frequency_hz, 82.0 / 30.0);
  EXPECT_DOUBLE_EQ(points[2].amplitude_deg, 40.0);
  EXPECT_DOUBLE_EQ(points[4].offset_deg, 0.0);
  const auto again = generate_sweep(g);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_DOUBLE_EQ(points[i].amplitude_deg, again[i].amplitude_deg);
    EXPECT_DOUBLE_EQ(points[i].offset_deg, again[i].offset_deg);
    EXPECT_DOUBLE_EQ(points[i].frequency_hz, again[i].frequency_hz);
  }
}

TEST(Sweep, EmptyGridYieldsEmptyList) {
  SweepGrid g;
  g.amplitude_min_deg = 50.0;
  g.amplitude_max_deg = 40.0;  // empty amplitude range
  EXPECT_TRUE(generate_sweep(g).empty());
}

TEST(Sweep, NonPositiveStepsRejected) {
  SweepGrid g;
  g.amplitude_step_deg = 0.0;
  EXPECT_THROW(generate_sweep(g), config_error);
  g = SweepGrid{};
  g.offset_step_deg = -1.0;
  EXPECT_THROW(generate_sweep(g), config_error);
  g = SweepGrid{};
  g.frequencies_per_amplitude = 0;
  EXPECT_THROW(generate_sweep(g), config_error);
}

TEST(Sweep, RandomGridsNeverViolateConstraints) {
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> off_lo(-40.0, 10.0),
      off_span(0.0, 50.0), step(0.7, 15.0), amp_lo(0.0, 30.0),
      amp_span(0.0, 60.0), f_lo(0.05, 3.0);
  std::uniform_int_distribution<int> nf(1, 6);
  for (int i = 0; i < 2000; ++i) {
    SweepGrid g;
    g.offset_min_deg = off_lo(rng);
    g.offset_max_deg = g.offset_min_deg + off_span(rng);
    g.offset_step_deg = step(rng);
    g.amplitude_min_deg = amp_lo(rng);
    g.amplitude_max_deg = g.amplitude_min_deg + amp_span(rng);
    g.amplitude_step_deg = step(rng);
    g.frequency_min_hz = f_lo(rng);
    g.frequencies_per_amplitude = nf(rng);
    for (const auto& p : generate_sweep(g)) {
      ASSERT_LT(std::abs(p.offset_deg), 20.0);
      ASSERT_GT(p.amplitude_deg, 0.0);
      ASSERT_LE(p.amplitude_deg, 60.0 - std::abs(p.offset_deg));
      ASSERT_GT(p.frequency_hz, 0.0);
      ASSERT_LE(p.frequency_hz, 82.0 / p.amplitude_deg);
    }
  }
}

}  // namespace
}  // namespace caudal
