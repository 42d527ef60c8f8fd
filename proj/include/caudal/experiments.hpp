#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "caudal/control.hpp"
#include "caudal/cyclestats.hpp"
#include "caudal/errors.hpp"
#include "caudal/kinematics.hpp"
#include "caudal/plant.hpp"
#include "caudal/sysid.hpp"

namespace caudal {

/// Quasi-static measurement protocol: hold the waveform on a fresh plant for
/// settle_cycles flapping cycles, then average the next avg_cycles.
struct MeasurementProtocol {
  int settle_cycles = 0;
  int avg_cycles = 5;
};

/// One identification test point and its cycle-averaged outcome. t_s is the
/// schedule clock for schedule sweeps and NaN for grid sweeps.
struct MeasuredPoint {
  int test_id = 0;
  double t_s = std::numeric_limits<double>::quiet_NaN();
  PropulsionParams params;
  double mean_forward_N = 0.0;
  double mean_side_N = 0.0;
  double magnitude_N = 0.0;
  double angle_deg = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline MeasuredPoint measure_point(const PlantConfig& cfg,
                                   const PropulsionParams& p,
                                   const MeasurementProtocol& protocol,
                                   std::uint64_t seed) {
  if (protocol.avg_cycles < 1)
    throw config_error("measurement protocol needs at least one cycle");
  if (protocol.settle_cycles < 0)
    throw config_error("settle cycle count must be nonnegative");
  PlantConfig local = cfg;
  local.sensor.rng_seed = seed;
  ThrustPlant plant(local);

  const double steps_per_cycle =
      1.0 / (std::max(p.frequency_hz, 1e-9) * local.dt_s);
  const auto n_cycle = std::max<long long>(1, std::llround(steps_per_cycle));
  const long long n_settle = n_cycle * protocol.settle_cycles;
  const long long n_avg = n_cycle * protocol.avg_cycles;

  for (long long i = 0; i < n_settle; ++i) plant.step(p);
  double sum_f = 0.0, sum_s = 0.0;
  for (long long i = 0; i < n_avg; ++i) {
    const ForceSample s = plant.step(p);
    sum_f += s.forward_N;
    sum_s += s.side_N;
  }
  MeasuredPoint out;
  out.params = p;
  out.mean_forward_N = sum_f / static_cast<double>(n_avg);
  out.mean_side_N = sum_s / static_cast<double>(n_avg);
  out.magnitude_N = std::sqrt(out.mean_forward_N * out.mean_forward_N +
                              out.mean_side_N * out.mean_side_N);
  out.angle_deg =
      rad_to_deg(std::atan2(out.mean_side_N, out.mean_forward_N));
  return out;
}

/// Measures every admissible grid point. Each point runs on an independent
/// plant instance with a seed derived from its test id, so runs are
/// reproducible point by point.
inline std::vector<MeasuredPoint> run_grid_sweep(
    const PlantConfig& cfg, const SweepGrid& grid,
    const MeasurementProtocol& protocol, std::uint64_t seed) {
  const std::vector<PropulsionParams> points = generate_sweep(grid);
  std::vector<MeasuredPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    MeasuredPoint m = measure_point(cfg, points[i], protocol, mix_seed(seed, i));
    m.test_id = static_cast<int>(i);
    out.push_back(m);
  }
  return out;
}

/// Samples a parameter schedule at a fixed period and measures each sample
/// point quasi-statically. t_s records the schedule clock so derivative
/// regressors can be formed later.
inline std::vector<MeasuredPoint> run_schedule_sweep(
    const PlantConfig& cfg, const Schedule& schedule, double duration_s,
    double sample_period_s, const MeasurementProtocol& protocol,
    std::uint64_t seed) {
  if (duration_s <= 0.0 || sample_period_s <= 0.0)
    throw config_error("schedule sweep duration and period must be positive");
  std::vector<MeasuredPoint> out;
  const auto n = static_cast<std::size_t>(duration_s / sample_period_s) + 1;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) * sample_period_s;
    const PropulsionParams p = eval_schedule(schedule, t);
    MeasuredPoint m = measure_point(cfg, p, protocol, mix_seed(seed, j));
    m.test_id = static_cast<int>(j);
    m.t_s = t;
    out.push_back(m);
  }
  return out;
}

/// Builds regressor samples from measured points, attaching finite-difference
/// derivatives when requested (requires the schedule clock).
inline std::vector<RegressorSample> to_regressors(
    std::span<const MeasuredPoint> points, bool with_derivatives) {
  if (!with_derivatives) {
    std::vector<RegressorSample> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      out[i].a_deg = points[i].params.amplitude_deg;
      out[i].b_deg = points[i].params.offset_deg;
    }
    return out;
  }
  std::vector<double> t(points.size()), a(points.size()), b(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].t_s))
      throw input_error(
          "derivative regressors need schedule timestamps, but the dataset "
          "has none (grid sweeps carry no time axis)");
    t[i] = points[i].t_s;
    a[i] = points[i].params.amplitude_deg;
    b[i] = points[i].params.offset_deg;
  }
  return samples_with_fd_derivatives(t, a, b);
}

/// Ladder fits and model selection for both identification targets:
/// forward-force magnitude against the basket, and force angle against it.
struct FitOutcome {
  std::vector<BasketFit> forward_fits;
  std::vector<BasketFit> side_fits;
  std::size_t forward_pick = 0;
  std::size_t side_pick = 0;
  StaticModel forward_model;
  StaticModel side_model;
};

inline FitOutcome fit_measurements(std::span<const MeasuredPoint> points,
                                   std::span<const Basket> ladder,
                                   double condition_threshold,
                                   double selection_margin_mae) {
  bool needs_derivatives = false;
  for (const Basket& b : ladder)
    for (const Term t : b.terms)
      if (t == Term::ADot || t == Term::BDot || t == Term::ADdot ||
          t == Term::BDdot || t == Term::ADot2 || t == Term::BDot2)
        needs_derivatives = true;
  const std::vector<RegressorSample> records =
      to_regressors(points, needs_derivatives);

  Eigen::VectorXd y_forward(static_cast<Eigen::Index>(points.size()));
  Eigen::VectorXd y_side(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    y_forward(static_cast<Eigen::Index>(i)) = points[i].magnitude_N;
    y_side(static_cast<Eigen::Index>(i)) = points[i].angle_deg;
  }

  FitOutcome out;
  out.forward_fits =
      basket_ladder(records, y_forward, ladder, condition_threshold);
  out.side_fits = basket_ladder(records, y_side, ladder, condition_threshold);
  out.forward_pick = select_basket(out.forward_fits, selection_margin_mae);
  out.side_pick = select_basket(out.side_fits, selection_margin_mae);
  out.forward_model = {out.forward_fits[out.forward_pick].basket,
                       out.forward_fits[out.forward_pick].fit.coefficients,
                       FitTarget::ForwardForce};
  out.side_model = {out.side_fits[out.side_pick].basket,
                    out.side_fits[out.side_pick].fit.coefficients,
                    FitTarget::SideForce};
  return out;
}

/// Step-identification settings mirroring the two bench experiments: an
/// amplitude step from rest for the magnitude channel, then an offset step
/// at held amplitude for the angle channel.
struct StepIdSettings {
  double amplitude_step_deg = 40.0;
  double offset_step_deg = -20.0;
  double hold_amplitude_deg = 40.0;
  double pre_step_s = 2.0;
  double post_step_s = 4.0;
};

struct StepTrace {
  std::vector<double> t_s;
  std::vector<double> y;
};

struct StepIdOutcome {
  FopdtModel magnitude_model;
  FopdtModel angle_model;
  StepTrace magnitude_trace;  // force magnitude, N
  StepTrace angle_trace;      // force angle, deg
};

inline StepIdOutcome run_step_id(const PlantConfig& cfg,
                                 const StepIdSettings& s, std::uint64_t seed) {
  if (s.pre_step_s <= 0.0 || s.post_step_s <= 0.0)
    throw config_error("step experiment phases must have positive duration");
  StepIdOutcome out;
  const double f = cfg.map.nominal_frequency_hz;

  {  // amplitude step from rest, recorded as force magnitude
    PlantConfig local = cfg;
    local.sensor.rng_seed = mix_seed(seed, 101);
    ThrustPlant plant(local);
    const auto n_pre = std::llround(s.pre_step_s / local.dt_s);
    const auto n_post = std::llround(s.post_step_s / local.dt_s);
    for (long long i = 0; i < n_pre + n_post; ++i) {
      const double a = i < n_pre ? 0.0 : s.amplitude_step_deg;
      const ForceSample smp = plant.step({a, 0.0, f});
      out.magnitude_trace.t_s.push_back(smp.t_s);
      out.magnitude_trace.y.push_back(std::hypot(smp.forward_N, smp.side_N));
    }
    out.magnitude_model =
        fit_fopdt_from_step(out.magnitude_trace.t_s, out.magnitude_trace.y,
                            s.amplitude_step_deg, s.pre_step_s);
  }

  {  // offset step at held amplitude, recorded as force angle
    PlantConfig local = cfg;
    local.sensor.rng_seed = mix_seed(seed, 202);
    ThrustPlant plant(local);
    const auto n_pre = std::llround(s.pre_step_s / local.dt_s);
    const auto n_post = std::llround(s.post_step_s / local.dt_s);
    for (long long i = 0; i < n_pre + n_post; ++i) {
      const double b = i < n_pre ? 0.0 : s.offset_step_deg;
      const ForceSample smp = plant.step({s.hold_amplitude_deg, b, f});
      out.angle_trace.t_s.push_back(smp.t_s);
      out.angle_trace.y.push_back(
          rad_to_deg(std::atan2(smp.side_N, smp.forward_N)));
    }
    out.angle_model =
        fit_fopdt_from_step(out.angle_trace.t_s, out.angle_trace.y,
                            s.offset_step_deg, s.pre_step_s);
  }
  return out;
}

}  // namespace caudal
