#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "caudal/cyclestats.hpp"
#include "caudal/errors.hpp"
#include "caudal/kinematics.hpp"

namespace caudal {

/// First-order-plus-dead-time channel: gain * exp(-L s) / (tau s + 1).
struct FopdtModel {
  double gain = 1.0;
  double time_constant_s = 1.0;
  double dead_time_s = 0.0;
};

/// Analytic step response of an FOPDT channel: 0 before the dead time,
/// gain * step_size * (1 - exp(-(t - L)/tau)) afterwards.
inline double fopdt_step_response(const FopdtModel& m, double step_size,
                                  double t_s) {
  if (m.time_constant_s <= 0.0)
    throw config_error("fopdt time constant must be positive");
  if (m.dead_time_s < 0.0)
    throw config_error("fopdt dead time must be nonnegative");
  if (t_s < m.dead_time_s) return 0.0;
  return m.gain * step_size *
         (1.0 - std::exp(-(t_s - m.dead_time_s) / m.time_constant_s));
}

/// Converts a torque measured at the sensor into the force applied at the
/// far end of the attachment bar.
inline double torque_to_force(double torque_Nm, double bar_length_m) {
  if (bar_length_m <= 0.0)
    throw input_error("attachment bar length must be positive");
  return torque_Nm / bar_length_m;
}

enum class StaticMapKind { LinearDecoupled, EmpiricalGrid };

/// Steady-state force map sampled on a rectangular (amplitude, offset)
/// lattice. Cells with a missing corner cannot be interpolated.
struct EmpiricalGrid {
  std::vector<double> amplitudes_deg;  // ascending
  std::vector<double> offsets_deg;     // ascending
  std::vector<double> forward_N;       // row-major [ia * n_offsets + ib]
  std::vector<double> angle_deg;
};

struct EmpiricalSample {
  double amplitude_deg = 0.0;
  double offset_deg = 0.0;
  double forward_N = 0.0;
  double angle_deg = 0.0;
};

/// Static (cycle-averaged, settled) force map of the thrust plant.
///
/// Inside the controllable regime (amplitude at or above
/// controllable_min_amplitude_deg, frequency within tolerance of nominal) the
/// map is linear and decoupled: forward force proportional to amplitude,
/// force angle proportional to offset. An actuated stroke outside that regime
/// produces a constant small negative forward force; a stationary tail
/// (amplitude zero) produces nothing.
struct StaticForceMap {
  StaticMapKind kind = StaticMapKind::LinearDecoupled;
  double forward_gain_N_per_deg = 0.00912;
  double angle_gain_deg_per_deg = -0.866;
  double controllable_min_amplitude_deg = 20.0;
  double nominal_frequency_hz = kNominalFrequencyHz;
  double frequency_tolerance_hz = 0.05;
  double degraded_forward_force_N = -0.05;
  EmpiricalGrid grid;
};

struct StaticForces {
  double forward_N = 0.0;
  double angle_deg = 0.0;
};

namespace detail {

inline EmpiricalGrid grid_from_samples(std::span<const EmpiricalSample> rows) {
  EmpiricalGrid g;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto insert_sorted = [](std::vector<double>& v, double x) {
    auto it = std::lower_bound(v.begin(), v.end(), x - 1e-9);
    if (it == v.end() || std::abs(*it - x) > 1e-9) v.insert(it, x);
  };
  for (const auto& r : rows) {
    insert_sorted(g.amplitudes_deg, r.amplitude_deg);
    insert_sorted(g.offsets_deg, r.offset_deg);
  }
  const std::size_t nb = g.offsets_deg.size();
  g.forward_N.assign(g.amplitudes_deg.size() * nb, nan);
  g.angle_deg.assign(g.amplitudes_deg.size() * nb, nan);
  auto index_of = [](const std::vector<double>& v, double x) {
    auto it = std::lower_bound(v.begin(), v.end(), x - 1e-9);
    return static_cast<std::size_t>(it - v.begin());
  };
  for (const auto& r : rows) {
    const std::size_t ia = index_of(g.amplitudes_deg, r.amplitude_deg);
    const std::size_t ib = index_of(g.offsets_deg, r.offset_deg);
    g.forward_N[ia * nb + ib] = r.forward_N;
    g.angle_deg[ia * nb + ib] = r.angle_deg;
  }
  return g;
}

inline StaticForces grid_interpolate(const EmpiricalGrid& g, double a,
                                     double b) {
  if (g.amplitudes_deg.empty() || g.offsets_deg.empty())
    throw input_error("empirical force map is empty");
  if (a < g.amplitudes_deg.front() || a > g.amplitudes_deg.back() ||
      b < g.offsets_deg.front() || b > g.offsets_deg.back())
    throw input_error("empirical force map query outside the sampled range");
  auto bracket = [](const std::vector<double>& v, double x) {
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(v.begin(), v.end(), x) - v.begin());
    if (hi == v.size()) --hi;
    if (hi == 0) ++hi;
    return std::pair<std::size_t, std::size_t>{hi - 1, hi};
  };
  const auto [ia0, ia1] = bracket(g.amplitudes_deg, a);
  const auto [ib0, ib1] = bracket(g.offsets_deg, b);
  const std::size_t nb = g.offsets_deg.size();
  auto cell = [&](const std::vector<double>& z) {
    const double z00 = z[ia0 * nb + ib0], z01 = z[ia0 * nb + ib1];
    const double z10 = z[ia1 * nb + ib0], z11 = z[ia1 * nb + ib1];
    if (std::isnan(z00) || std::isnan(z01) || std::isnan(z10) ||
        std::isnan(z11))
      throw input_error(
          "empirical force map query falls in a cell with missing samples");
    const double da = g.amplitudes_deg[ia1] - g.amplitudes_deg[ia0];
    const double db = g.offsets_deg[ib1] - g.offsets_deg[ib0];
    const double wa = da > 0.0 ? (a - g.amplitudes_deg[ia0]) / da : 0.0;
    const double wb = db > 0.0 ? (b - g.offsets_deg[ib0]) / db : 0.0;
    return (1 - wa) * ((1 - wb) * z00 + wb * z01) +
           wa * ((1 - wb) * z10 + wb * z11);
  };
  return {cell(g.forward_N), cell(g.angle_deg)};
}

}  // namespace detail

inline StaticForceMap empirical_force_map(
    std::span<const EmpiricalSample> rows) {
  StaticForceMap m;
  m.kind = StaticMapKind::EmpiricalGrid;
  m.grid = detail::grid_from_samples(rows);
  return m;
}

/// Settled cycle-averaged forces produced by holding the given waveform.
inline StaticForces static_forces(const StaticForceMap& m,
                                  const PropulsionParams& p) {
  if (m.kind == StaticMapKind::EmpiricalGrid)
    return detail::grid_interpolate(m.grid, p.amplitude_deg, p.offset_deg);
  if (p.amplitude_deg <= 0.0) return {0.0, 0.0};  // tail at rest
  const bool controllable =
      p.amplitude_deg >= m.controllable_min_amplitude_deg &&
      std::abs(p.frequency_hz - m.nominal_frequency_hz) <=
          m.frequency_tolerance_hz;
  if (!controllable) return {m.degraded_forward_force_N, 0.0};
  return {m.forward_gain_N_per_deg * p.amplitude_deg,
          m.angle_gain_deg_per_deg * p.offset_deg};
}

/// Unity-gain first-order lag behind an integer-sample transport delay,
/// discretized with a zero-order hold so step responses match the continuous
/// channel exactly at the sample instants.
class FopdtChannel {
 public:
  FopdtChannel(double tau_s, double dead_time_s, double dt_s) {
    if (tau_s <= 0.0) throw config_error("channel time constant must be > 0");
    if (dead_time_s < 0.0) throw config_error("channel dead time must be >= 0");
    if (dt_s <= 0.0) throw config_error("channel step must be > 0");
    const auto steps = std::llround(dead_time_s / dt_s);
    if (std::abs(static_cast<double>(steps) * dt_s - dead_time_s) > 1e-9)
      throw config_error(
          "dead time is not an integer number of simulation steps");
    alpha_ = std::exp(-dt_s / tau_s);
    delay_.assign(static_cast<std::size_t>(steps), 0.0);
  }

  double step(double target) {
    double u = target;
    if (!delay_.empty()) {
      u = delay_[head_];
      delay_[head_] = target;
      head_ = (head_ + 1) % delay_.size();
    }
    state_ = alpha_ * state_ + (1.0 - alpha_) * u;
    return state_;
  }

  double output() const { return state_; }

  void reset() {
    state_ = 0.0;
    head_ = 0;
    std::fill(delay_.begin(), delay_.end(), 0.0);
  }

 private:
  double alpha_ = 0.0;
  double state_ = 0.0;
  std::vector<double> delay_;
  std::size_t head_ = 0;
};

/// Sensor-path configuration for the simulated rig.
struct SensorConfig {
  double bar_length_m = 0.3;
  double noise_std_N = 0.02;
  double ripple_fraction = 0.5;
  double sample_rate_hz = 100.0;
  std::uint64_t rng_seed = 1;
};

struct PlantConfig {
  StaticForceMap map;
  double magnitude_tau_s = 0.34;
  double magnitude_dead_time_s = 0.28;
  double angle_tau_s = 0.13;
  double angle_dead_time_s = 0.12;
  SensorConfig sensor;
  double dt_s = 0.01;
};

/// Deterministic simulated thrust plant.
///
/// The static map provides settled (magnitude, angle) targets; two FOPDT
/// channels lag them; the polar pair is then decomposed into forward/side
/// force, with an optional flapping ripple (one thrust pulse per half stroke
/// on the forward axis, one sway per stroke on the side axis) and seeded
/// Gaussian sensor noise on top. Single-owner state: not safe for concurrent
/// mutation.
class ThrustPlant {
 public:
  explicit ThrustPlant(const PlantConfig& cfg)
      : cfg_(cfg),
        magnitude_(cfg.magnitude_tau_s, cfg.magnitude_dead_time_s, cfg.dt_s),
        angle_(cfg.angle_tau_s, cfg.angle_dead_time_s, cfg.dt_s),
        rng_(cfg.sensor.rng_seed) {
    if (cfg_.dt_s <= 0.0) throw config_error("plant dt must be positive");
    if (cfg_.sensor.sample_rate_hz <= 0.0)
      throw config_error("sensor sample rate must be positive");
    if (cfg_.sensor.bar_length_m <= 0.0)
      throw config_error("attachment bar length must be positive");
    if (cfg_.sensor.noise_std_N < 0.0 || cfg_.sensor.ripple_fraction < 0.0)
      throw config_error("noise and ripple levels must be nonnegative");
    const double period = 1.0 / cfg_.sensor.sample_rate_hz;
    const auto k = std::llround(period / cfg_.dt_s);
    if (k < 1 || std::abs(static_cast<double>(k) * cfg_.dt_s - period) > 1e-9)
      throw config_error("plant dt must divide the sensor sample period");
  }

  const PlantConfig& config() const { return cfg_; }
  double dt_s() const { return cfg_.dt_s; }
  double time_s() const { return t_; }

  /// Advances one simulation step and returns the sample at the new time.
  ForceSample step(const PropulsionParams& p) {
    const StaticForces target = static_forces(cfg_.map, p);
    const double mag = magnitude_.step(target.forward_N);
    const double ang = angle_.step(target.angle_deg);
    phase_ += 2.0 * kPi * p.frequency_hz * cfg_.dt_s;
    t_ += cfg_.dt_s;

    const double ang_rad = deg_to_rad(ang);
    double fwd = mag * std::cos(ang_rad);
    double side = mag * std::sin(ang_rad);
    if (cfg_.sensor.ripple_fraction > 0.0) {
      fwd += cfg_.sensor.ripple_fraction * std::abs(fwd) *
             std::sin(2.0 * phase_);
      side += cfg_.sensor.ripple_fraction * std::abs(mag) * std::sin(phase_);
    }
    if (cfg_.sensor.noise_std_N > 0.0) {
      fwd += cfg_.sensor.noise_std_N * gauss_(rng_);
      side += cfg_.sensor.noise_std_N * gauss_(rng_);
    }
    return {t_, fwd, side};
  }

  /// Spec-shaped overload; dt must equal the configured step.
  ForceSample step(const PropulsionParams& p, double dt_s) {
    if (std::abs(dt_s - cfg_.dt_s) > 1e-12)
      throw config_error("plant step dt differs from the configured dt");
    return step(p);
  }

  void reset(std::uint64_t seed) {
    magnitude_.reset();
    angle_.reset();
    phase_ = 0.0;
    t_ = 0.0;
    rng_.seed(seed);
    gauss_.reset();
  }

 private:
  PlantConfig cfg_;
  FopdtChannel magnitude_;
  FopdtChannel angle_;
  double phase_ = 0.0;
  double t_ = 0.0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace caudal
