#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "caudal/errors.hpp"

namespace caudal {

inline constexpr double kPi = std::numbers::pi;

/// Servo envelope shared by the sweep generator and the schedule factories.
/// The offset bound is exclusive, the other two are inclusive.
inline constexpr double kMaxOffsetDeg = 20.0;           // |b| < 20
inline constexpr double kMaxDeflectionDeg = 60.0;       // a <= 60 - |b|
inline constexpr double kMaxStrokeSpeedDegPerS = 82.0;  // f <= 82 / a
inline constexpr double kNominalFrequencyHz = 1.4;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Tail-stroke waveform parameters. The commanded servo angle is
/// offset + amplitude * sin(2*pi*f*t), everything in degrees.
struct PropulsionParams {
  double amplitude_deg = 0.0;
  double offset_deg = 0.0;
  double frequency_hz = kNominalFrequencyHz;
};

/// Commanded servo angle at time t, in degrees. Total function.
inline double servo_angle(const PropulsionParams& p, double t_s) {
  return p.offset_deg +
         p.amplitude_deg * std::sin(2.0 * kPi * p.frequency_hz * t_s);
}

enum class ScheduleKind {
  ConstantParams,
  HalfWaveAmplitude,
  CoupledAmplitudeOffset,
  Custom,
};

/// Slow modulation of the waveform parameters used for identification runs.
///
/// HalfWaveAmplitude:      a = base + |span * sin(2*pi*amplitude_mod*t)|, b = 0
/// CoupledAmplitudeOffset: b = offset_span * sin(2*pi*offset_mod*t),
///                         a = base + |(span - b) * sin(2*pi*amplitude_mod*t)|
///
/// The two modulation frequencies are deliberately different so the effect of
/// amplitude and offset on the measured forces can be told apart.
struct Schedule {
  ScheduleKind kind = ScheduleKind::ConstantParams;
  PropulsionParams constant{20.0, 0.0, kNominalFrequencyHz};
  double base_amplitude_deg = 20.0;
  double amplitude_span_deg = 40.0;
  double amplitude_mod_hz = 0.005;
  double offset_span_deg = 20.0;
  double offset_mod_hz = 0.002;
  double flap_frequency_hz = kNominalFrequencyHz;
  std::function<PropulsionParams(double)> custom;
};

/// Symmetric half-wave amplitude schedule: a sweeps 20..60 deg at 0.005 Hz.
inline Schedule half_wave_amplitude_schedule() {
  Schedule s;
  s.kind = ScheduleKind::HalfWaveAmplitude;
  s.amplitude_mod_hz = 0.005;
  return s;
}

/// Coupled schedule: offset at 0.002 Hz, amplitude envelope at 0.004 Hz.
inline Schedule coupled_amplitude_offset_schedule() {
  Schedule s;
  s.kind = ScheduleKind::CoupledAmplitudeOffset;
  s.amplitude_mod_hz = 0.004;
  s.offset_mod_hz = 0.002;
  return s;
}

inline PropulsionParams eval_schedule(const Schedule& s, double t_s) {
  switch (s.kind) {
    case ScheduleKind::ConstantParams:
      return s.constant;
    case ScheduleKind::HalfWaveAmplitude: {
      const double a =
          s.base_amplitude_deg +
          std::abs(s.amplitude_span_deg *
                   std::sin(2.0 * kPi * s.amplitude_mod_hz * t_s));
      return {a, 0.0, s.flap_frequency_hz};
    }
    case ScheduleKind::CoupledAmplitudeOffset: {
      const double b =
          s.offset_span_deg * std::sin(2.0 * kPi * s.offset_mod_hz * t_s);
      const double a =
          s.base_amplitude_deg +
          std::abs((s.amplitude_span_deg - b) *
                   std::sin(2.0 * kPi * s.amplitude_mod_hz * t_s));
      return {a, b, s.flap_frequency_hz};
    }
    case ScheduleKind::Custom:
      if (!s.custom) throw config_error("custom schedule has no callback");
      return s.custom(t_s);
  }
  throw config_error("unknown schedule kind");
}

/// Grid specification for the identification sweep. Frequencies form a
/// geometric ladder per amplitude, from frequency_min_hz up to the
/// stroke-speed limit 82/a (the top rung lands on the limit exactly).
struct SweepGrid {
  double offset_min_deg = -15.0;
  double offset_max_deg = 15.0;
  double offset_step_deg = 5.0;
  double amplitude_min_deg = 5.0;
  double amplitude_max_deg = 60.0;
  double amplitude_step_deg = 5.0;
  double frequency_min_hz = 0.2;
  int frequencies_per_amplitude = 8;
};

namespace detail {

inline int grid_count(double lo, double hi, double step) {
  if (hi < lo) return 0;
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

}  // namespace detail

/// Enumerates every admissible grid point, offset outer, amplitude middle,
/// frequency inner. Points violating |b| < 20, 0 < a <= 60 - |b| or
/// 0 < f <= 82/a are dropped. An empty grid yields an empty list.
inline std::vector<PropulsionParams> generate_sweep(const SweepGrid& g) {
  if (g.offset_step_deg <= 0.0 || g.amplitude_step_deg <= 0.0)
    throw config_error("sweep grid step sizes must be strictly positive");
  if (g.frequency_min_hz <= 0.0)
    throw config_error("sweep grid frequency_min_hz must be strictly positive");
  if (g.frequencies_per_amplitude < 1)
    throw config_error("sweep grid needs at least one frequency per amplitude");

  std::vector<PropulsionParams> out;
  const int nb = detail::grid_count(g.offset_min_deg, g.offset_max_deg,
                                    g.offset_step_deg);
  const int na = detail::grid_count(g.amplitude_min_deg, g.amplitude_max_deg,
                                    g.amplitude_step_deg);
  for (int ib = 0; ib < nb; ++ib) {
    const double b = g.offset_min_deg + ib * g.offset_step_deg;
    if (std::abs(b) >= kMaxOffsetDeg) continue;
    for (int ia = 0; ia < na; ++ia) {
      const double a = g.amplitude_min_deg + ia * g.amplitude_step_deg;
      if (a <= 0.0 || a > kMaxDeflectionDeg - std::abs(b)) continue;
      const double f_hi = kMaxStrokeSpeedDegPerS / a;
      if (f_hi < g.frequency_min_hz) continue;
      const int nf = g.frequencies_per_amplitude;
      double prev = 0.0;
      for (int jf = 0; jf < nf; ++jf) {
        double f = f_hi;
        if (nf > 1) {
          const double ratio = f_hi / g.frequency_min_hz;
          f = g.frequency_min_hz *
              std::pow(ratio, static_cast<double>(jf) / (nf - 1));
          if (jf == nf - 1) f = f_hi;  // land on the limit exactly
          f = std::min(f, f_hi);
        }
        if (f <= 0.0 || f == prev) continue;
        out.push_back({a, b, f});
        prev = f;
      }
    }
  }
  return out;
}

}  // namespace caudal
