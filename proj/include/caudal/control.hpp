#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "caudal/cyclestats.hpp"
#include "caudal/errors.hpp"
#include "caudal/plant.hpp"
#include "caudal/sysid.hpp"

namespace caudal {

/// Discrete PID configuration for the force-magnitude loop. The control tick
/// defaults to one flapping cycle because the feedback quantity is a cycle
/// average. Output limits bound the commanded propulsion amplitude.
struct ControllerConfig {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  bool feedforward_enabled = false;
  double sample_period_s = 1.0 / kNominalFrequencyHz;
  double a_min_deg = 20.0;
  double a_max_deg = kMaxDeflectionDeg;
  bool anti_windup = true;

  void validate() const {
    if (kp < 0.0 || ki < 0.0 || kd < 0.0)
      throw config_error("controller gains must be nonnegative");
    if (sample_period_s <= 0.0)
      throw config_error("controller sample period must be positive");
    if (!(a_min_deg < a_max_deg))
      throw config_error("controller amplitude limits must satisfy min < max");
  }
};

/// Named gain presets. The plain names carry the gains reported for the
/// physical rig; the -sim variants are retuned for the bundled simulated
/// plant, whose cycle-rate loop needs far stronger integral action.
inline ControllerConfig controller_preset(std::string_view name) {
  ControllerConfig c;
  if (name == "p") {
    c.kp = 100.0;
  } else if (name == "p-109") {
    c.kp = 109.0;
  } else if (name == "p-120") {
    c.kp = 120.0;
  } else if (name == "pi") {
    c.kp = 80.0;
    c.ki = 0.12;
  } else if (name == "ff-p") {
    c.kp = 10.9;
    c.feedforward_enabled = true;
  } else if (name == "ff-pi") {
    c.kp = 9.0;
    c.ki = 0.05;
    c.feedforward_enabled = true;
  } else if (name == "pi-sim") {
    c.kp = 60.0;
    c.ki = 60.0;
  } else if (name == "ff-pi-sim") {
    c.kp = 9.0;
    c.ki = 40.0;
    c.feedforward_enabled = true;
  } else {
    throw config_error(
        "unknown controller preset '" + std::string(name) +
        "' (expected p, p-109, p-120, pi, ff-p, ff-pi, pi-sim, ff-pi-sim)");
  }
  return c;
}

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;
};

/// One PID update: kp*e + ki*Integral(e dt) + kd*de/dt with trapezoidal
/// integration. The first call primes the error history, so a constant error
/// integrates exactly and the derivative starts at zero. Saturation handling
/// is the caller's job: pass integrate = false to freeze the integrator.
inline double pid_step(PidState& state, const ControllerConfig& cfg,
                       double error, double dt_s, bool integrate = true) {
  if (dt_s <= 0.0) throw config_error("pid step dt must be positive");
  if (!state.primed) {
    state.prev_error = error;
    state.primed = true;
  }
  if (integrate)
    state.integral += 0.5 * dt_s * (error + state.prev_error);
  const double derivative = (error - state.prev_error) / dt_s;
  state.prev_error = error;
  return cfg.kp * error + cfg.ki * state.integral + cfg.kd * derivative;
}

/// Inverts a fitted forward-force model into a commanded amplitude:
/// a = (reference - intercept) / gain, clamped to the output limits.
inline double feedforward_amplitude(const StaticModel& model,
                                    double reference_N, double a_min_deg,
                                    double a_max_deg) {
  if (model.target != FitTarget::ForwardForce)
    throw input_error("feedforward needs a forward-force model");
  const double gain = model.coefficient_for(Term::A);
  if (gain == 0.0)
    throw numeric_error("feedforward inversion needs a nonzero amplitude gain");
  const double intercept = model.coefficient_for(Term::One);
  return std::clamp((reference_N - intercept) / gain, a_min_deg, a_max_deg);
}

/// Per-tick record of a closed-loop tracking run.
struct TrackingStep {
  double t_s = 0.0;
  double reference_N = 0.0;
  double measured_N = 0.0;
  double ff_term_deg = 0.0;
  double fb_term_deg = 0.0;
  double commanded_a_deg = 0.0;
};

struct TrackingTrace {
  std::vector<TrackingStep> steps;
  double control_period_s = 0.0;   // realized tick length (integer plant steps)
  double saturated_fraction = 0.0; // ticks with the command pinned at a limit
  bool unstable = false;           // pinned for more than 90% of ticks
};

using ReferenceSignal = std::function<double(double)>;

/// Repeated positive half-sine arches: peak * |sin(pi * t / arch_period)|.
inline ReferenceSignal half_sine_reference(double peak_N,
                                           double arch_period_s) {
  if (arch_period_s <= 0.0)
    throw config_error("half-sine arch period must be positive");
  return [peak_N, arch_period_s](double t_s) {
    return peak_N * std::abs(std::sin(kPi * t_s / arch_period_s));
  };
}

inline ReferenceSignal constant_reference(double level_N) {
  return [level_N](double) { return level_N; };
}

/// Runs the closed loop of controller, plant and rolling cycle average.
///
/// Each control tick reads the current cycle-average force magnitude,
/// computes feedforward (when enabled) plus PID feedback, clamps the summed
/// amplitude command and holds it (offset 0, nominal frequency) until the
/// next tick. With anti-windup on, the integrator freezes while the command
/// is saturated in the direction the error keeps pushing.
inline TrackingTrace run_tracking(ThrustPlant& plant,
                                  const ControllerConfig& cfg,
                                  const StaticModel* ff_model,
                                  const ReferenceSignal& reference,
                                  double duration_s) {
  cfg.validate();
  if (cfg.feedforward_enabled && ff_model == nullptr)
    throw config_error("feedforward enabled but no static model supplied");
  if (duration_s <= 0.0) throw config_error("tracking duration must be > 0");
  const double dt = plant.dt_s();
  if (cfg.sample_period_s < dt)
    throw config_error(
        "controller sample period is shorter than the plant step");
  const auto steps_per_tick = std::llround(cfg.sample_period_s / dt);

  const double f = plant.config().map.nominal_frequency_hz;
  CycleAverager averager(plant.config().sensor.sample_rate_hz, f);

  TrackingTrace trace;
  trace.control_period_s = static_cast<double>(steps_per_tick) * dt;
  PidState pid;
  bool saturated_high = false, saturated_low = false;
  std::size_t pinned_ticks = 0;

  const auto n_ticks =
      static_cast<std::size_t>(std::ceil(duration_s / trace.control_period_s));
  for (std::size_t k = 0; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * trace.control_period_s;
    const double r = reference(t);
    const double y =
        averager.samples_seen() > 0 ? averager.latest().magnitude_N : 0.0;
    const double e = r - y;

    const bool freeze = cfg.anti_windup && ((saturated_high && e > 0.0) ||
                                            (saturated_low && e < 0.0));
    const double ff =
        cfg.feedforward_enabled
            ? feedforward_amplitude(*ff_model, r, cfg.a_min_deg, cfg.a_max_deg)
            : 0.0;
    const double fb = pid_step(pid, cfg, e, trace.control_period_s, !freeze);
    const double raw = ff + fb;
    const double cmd = std::clamp(raw, cfg.a_min_deg, cfg.a_max_deg);
    saturated_high = raw > cfg.a_max_deg;
    saturated_low = raw < cfg.a_min_deg;
    if (cmd == cfg.a_min_deg || cmd == cfg.a_max_deg) ++pinned_ticks;

    trace.steps.push_back({t, r, y, ff, fb, cmd});

    const PropulsionParams p{cmd, 0.0, f};
    for (long i = 0; i < steps_per_tick; ++i) averager.push(plant.step(p));
  }

  trace.saturated_fraction =
      trace.steps.empty()
          ? 0.0
          : static_cast<double>(pinned_ticks) / trace.steps.size();
  trace.unstable = trace.saturated_fraction > 0.9;
  return trace;
}

/// Aggregate tracking metrics; per-cycle groups follow the reference period.
struct TrackingSummary {
  double mean_abs_error_N = 0.0;
  double steady_state_error_N = 0.0;  // mean error over the final 10% of ticks
  std::vector<double> per_cycle_mae_N;
  double saturated_fraction = 0.0;
  bool unstable = false;
};

inline TrackingSummary summarize_tracking(const TrackingTrace& trace,
                                          double reference_cycle_s) {
  TrackingSummary s;
  s.saturated_fraction = trace.saturated_fraction;
  s.unstable = trace.unstable;
  if (trace.steps.empty()) return s;

  double total = 0.0;
  for (const auto& st : trace.steps)
    total += std::abs(st.reference_N - st.measured_N);
  s.mean_abs_error_N = total / static_cast<double>(trace.steps.size());

  const std::size_t tail =
      std::max<std::size_t>(1, trace.steps.size() / 10);
  double tail_sum = 0.0;
  for (std::size_t i = trace.steps.size() - tail; i < trace.steps.size(); ++i)
    tail_sum += trace.steps[i].reference_N - trace.steps[i].measured_N;
  s.steady_state_error_N = tail_sum / static_cast<double>(tail);

  if (reference_cycle_s > 0.0) {
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (const auto& st : trace.steps) {
      const auto cyc = static_cast<std::size_t>(st.t_s / reference_cycle_s);
      if (cyc >= sums.size()) {
        sums.resize(cyc + 1, 0.0);
        counts.resize(cyc + 1, 0);
      }
      sums[cyc] += std::abs(st.reference_N - st.measured_N);
      ++counts[cyc];
    }
    for (std::size_t i = 0; i < sums.size(); ++i)
      s.per_cycle_mae_N.push_back(
          counts[i] ? sums[i] / static_cast<double>(counts[i]) : 0.0);
  }
  return s;
}

}  // namespace caudal
