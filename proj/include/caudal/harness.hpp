#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "caudal/config.hpp"
#include "caudal/csv.hpp"
#include "caudal/experiments.hpp"
#include "caudal/svg.hpp"

namespace caudal {

// ---------------------------------------------------------------------------
// CSV schemas
// ---------------------------------------------------------------------------

inline void write_sweep_points_csv(const std::string& path,
                                   std::span<const PropulsionParams> points) {
  csv::Writer w(path);
  w.row("test_id", "a_deg", "b_deg", "f_hz");
  for (std::size_t i = 0; i < points.size(); ++i)
    w.row(i, points[i].amplitude_deg, points[i].offset_deg,
          points[i].frequency_hz);
  w.close();
}

inline void write_measurements_csv(const std::string& path,
                                   std::span<const MeasuredPoint> points) {
  csv::Writer w(path);
  w.row("test_id", "t_s", "a_deg", "b_deg", "f_hz", "mean_forward_N",
        "mean_side_N", "magnitude_N", "angle_deg");
  for (const auto& m : points)
    w.row(m.test_id, m.t_s, m.params.amplitude_deg, m.params.offset_deg,
          m.params.frequency_hz, m.mean_forward_N, m.mean_side_N,
          m.magnitude_N, m.angle_deg);
  w.close();
}

inline std::vector<MeasuredPoint> read_measurements_csv(
    const std::string& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_id = t.column("test_id"), c_t = t.column("t_s");
  const std::size_t c_a = t.column("a_deg"), c_b = t.column("b_deg");
  const std::size_t c_f = t.column("f_hz");
  const std::size_t c_mf = t.column("mean_forward_N");
  const std::size_t c_ms = t.column("mean_side_N");
  const std::size_t c_mag = t.column("magnitude_N");
  const std::size_t c_ang = t.column("angle_deg");
  std::vector<MeasuredPoint> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MeasuredPoint m;
    m.test_id = static_cast<int>(t.number(r, c_id));
    m.t_s = t.number(r, c_t);
    m.params = {t.number(r, c_a), t.number(r, c_b), t.number(r, c_f)};
    m.mean_forward_N = t.number(r, c_mf);
    m.mean_side_N = t.number(r, c_ms);
    m.magnitude_N = t.number(r, c_mag);
    m.angle_deg = t.number(r, c_ang);
    out.push_back(m);
  }
  return out;
}

inline void write_tracking_trace_csv(const std::string& path,
                                     const TrackingTrace& trace) {
  csv::Writer w(path);
  w.row("t_s", "reference_N", "measured_N", "ff_term_deg", "fb_term_deg",
        "commanded_a_deg");
  for (const auto& s : trace.steps)
    w.row(s.t_s, s.reference_N, s.measured_N, s.ff_term_deg, s.fb_term_deg,
          s.commanded_a_deg);
  w.close();
}

inline TrackingTrace read_tracking_trace_csv(const std::string& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_t = t.column("t_s"), c_r = t.column("reference_N");
  const std::size_t c_y = t.column("measured_N");
  const std::size_t c_ff = t.column("ff_term_deg");
  const std::size_t c_fb = t.column("fb_term_deg");
  const std::size_t c_cmd = t.column("commanded_a_deg");
  TrackingTrace out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.steps.push_back({t.number(r, c_t), t.number(r, c_r), t.number(r, c_y),
                         t.number(r, c_ff), t.number(r, c_fb),
                         t.number(r, c_cmd)});
  return out;
}

inline void write_fit_report_csv(const std::string& path,
                                 const FitOutcome& fit) {
  csv::Writer w(path);
  w.row("basket", "target", "mae_percent", "cond_number", "flagged");
  auto rows = [&w](const std::vector<BasketFit>& fits, std::string_view tgt) {
    for (const auto& f : fits)
      w.row(f.basket.to_string(), tgt, f.fit.report.mae_percent,
            f.fit.report.condition_number, f.fit.report.flagged ? 1 : 0);
  };
  rows(fit.forward_fits, "forward");
  rows(fit.side_fits, "side");
  w.close();
}

inline void write_model_csv(const std::string& path, const StaticModel& fwd,
                            const StaticModel& side) {
  csv::Writer w(path);
  w.row("target", "term", "coefficient");
  auto rows = [&w](const StaticModel& m) {
    for (std::size_t i = 0; i < m.basket.terms.size(); ++i)
      w.row(fit_target_name(m.target), term_name(m.basket.terms[i]),
            m.coefficients(static_cast<Eigen::Index>(i)));
  };
  rows(fwd);
  rows(side);
  w.close();
}

/// Reads one target's model back from a fit_selected_model.csv file.
inline StaticModel read_model_csv(const std::string& path, FitTarget target) {
  const csv::Table t = csv::read(path);
  const std::size_t c_tgt = t.column("target"), c_term = t.column("term");
  const std::size_t c_coef = t.column("coefficient");
  Basket basket;
  std::vector<double> coefs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.cell(r, c_tgt) != fit_target_name(target)) continue;
    basket.terms.push_back(parse_term(t.cell(r, c_term)));
    coefs.push_back(t.number(r, c_coef));
  }
  if (basket.terms.empty())
    throw input_error(path + ": no rows for target '" +
                      std::string(fit_target_name(target)) + "'");
  StaticModel m;
  m.basket = basket;
  m.coefficients = Eigen::Map<const Eigen::VectorXd>(
      coefs.data(), static_cast<Eigen::Index>(coefs.size()));
  m.target = target;
  return m;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct TrackSettings {
  std::string reference = "half_sine";  // half_sine | constant
  double peak_N = 0.5;
  double cycle_s = 100.0;  // one half-sine arch
  double level_N = 0.3;
  double duration_s = 300.0;
  std::string ff_model_csv;  // empty: invert the configured plant gain
};

struct FitSettings {
  std::string input_csv;
  std::string ladder = "auto";  // auto | table | polynomial | explicit rungs
  double condition_threshold = kDefaultConditionThreshold;
  double selection_margin_mae = 1.0;
};

/// Everything a batch run needs, bound from a config file plus CLI overrides.
struct ExperimentConfig {
  PlantConfig plant;
  SweepGrid grid;
  std::string sweep_mode = "grid";  // grid | schedule
  MeasurementProtocol protocol;
  Schedule schedule = coupled_amplitude_offset_schedule();
  double schedule_duration_s = 500.0;
  double schedule_sample_period_s = 1.0;
  std::string preset_name = "ff-pi-sim";
  ControllerConfig controller;
  TrackSettings track;
  FitSettings fit;
  StepIdSettings step_id;
  bool step_id_quiet = true;  // identification runs default to a quiet rig
  std::string out_dir = "out";
  std::uint64_t seed = 1;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"plant",
       {"static_map", "empirical_csv", "forward_gain_n_per_deg",
        "angle_gain_deg_per_deg", "controllable_min_amplitude_deg",
        "nominal_frequency_hz", "frequency_tolerance_hz",
        "degraded_forward_force_n", "magnitude_tau_s",
        "magnitude_dead_time_s", "angle_tau_s", "angle_dead_time_s",
        "noise_std_n", "ripple_fraction", "sample_rate_hz", "bar_length_m",
        "dt_s", "seed"}},
      {"sweep",
       {"mode", "b_min_deg", "b_max_deg", "b_step_deg", "a_min_deg",
        "a_max_deg", "a_step_deg", "f_min_hz", "f_points_per_amplitude",
        "settle_cycles", "avg_cycles"}},
      {"schedule",
       {"kind", "duration_s", "sample_period_s", "a_deg", "b_deg", "f_hz",
        "base_amplitude_deg", "amplitude_span_deg", "amplitude_mod_hz",
        "offset_span_deg", "offset_mod_hz", "flap_frequency_hz"}},
      {"fit",
       {"input", "ladder", "condition_threshold", "selection_margin_mae"}},
      {"controller",
       {"preset", "kp", "ki", "kd", "feedforward", "sample_period_s",
        "a_min_deg", "a_max_deg", "anti_windup"}},
      {"track",
       {"reference", "peak_n", "cycle_s", "level_n", "duration_s",
        "ff_model_csv"}},
      {"step_id",
       {"amplitude_step_deg", "offset_step_deg", "hold_amplitude_deg",
        "pre_step_s", "post_step_s", "quiet"}},
      {"output", {"dir"}},
  };
  return schema;
}

inline void validate_config_keys(const ConfigFile& cfg) {
  const auto& schema = config_schema();
  for (const auto& [section, keys] : cfg.sections()) {
    const auto s = schema.find(section);
    if (s == schema.end())
      throw config_error(cfg.origin() + ": unknown section [" + section + "]");
    for (const auto& [key, value] : keys)
      if (!s->second.count(key))
        throw config_error(cfg.origin() + ": unknown key '" + key +
                           "' in [" + section + "]");
  }
}

inline std::vector<EmpiricalSample> empirical_samples_from_csv(
    const std::string& path, double nominal_hz, double tolerance_hz) {
  const std::vector<MeasuredPoint> points = read_measurements_csv(path);
  std::vector<EmpiricalSample> out;
  for (const auto& m : points) {
    if (std::abs(m.params.frequency_hz - nominal_hz) > tolerance_hz) continue;
    out.push_back({m.params.amplitude_deg, m.params.offset_deg, m.magnitude_N,
                   m.angle_deg});
  }
  if (out.empty())
    throw input_error(path + ": no rows near the nominal frequency to build "
                             "an empirical force map from");
  return out;
}

}  // namespace detail

inline ExperimentConfig bind_experiment_config(const ConfigFile& cfg) {
  detail::validate_config_keys(cfg);
  ExperimentConfig e;

  // [plant]
  auto& map = e.plant.map;
  map.forward_gain_N_per_deg =
      cfg.get_double("plant", "forward_gain_n_per_deg", 0.00912);
  map.angle_gain_deg_per_deg =
      cfg.get_double("plant", "angle_gain_deg_per_deg", -0.866);
  map.controllable_min_amplitude_deg =
      cfg.get_double("plant", "controllable_min_amplitude_deg", 20.0);
  map.nominal_frequency_hz =
      cfg.get_double("plant", "nominal_frequency_hz", kNominalFrequencyHz);
  map.frequency_tolerance_hz =
      cfg.get_double("plant", "frequency_tolerance_hz", 0.05);
  map.degraded_forward_force_N =
      cfg.get_double("plant", "degraded_forward_force_n", -0.05);
  e.plant.magnitude_tau_s = cfg.get_double("plant", "magnitude_tau_s", 0.34);
  e.plant.magnitude_dead_time_s =
      cfg.get_double("plant", "magnitude_dead_time_s", 0.28);
  e.plant.angle_tau_s = cfg.get_double("plant", "angle_tau_s", 0.13);
  e.plant.angle_dead_time_s =
      cfg.get_double("plant", "angle_dead_time_s", 0.12);
  e.plant.sensor.noise_std_N = cfg.get_double("plant", "noise_std_n", 0.02);
  e.plant.sensor.ripple_fraction =
      cfg.get_double("plant", "ripple_fraction", 0.5);
  e.plant.sensor.sample_rate_hz =
      cfg.get_double("plant", "sample_rate_hz", 100.0);
  e.plant.sensor.bar_length_m = cfg.get_double("plant", "bar_length_m", 0.3);
  e.plant.dt_s = cfg.get_double("plant", "dt_s", 0.01);
  e.seed = cfg.get_uint64("plant", "seed", 1);
  const std::string map_kind = cfg.get_string("plant", "static_map", "linear");
  if (map_kind == "empirical") {
    const std::string path = cfg.get_string("plant", "empirical_csv", "");
    if (path.empty())
      throw config_error("static_map = empirical needs empirical_csv");
    const auto samples = detail::empirical_samples_from_csv(
        path, map.nominal_frequency_hz, map.frequency_tolerance_hz);
    const StaticForceMap em = empirical_force_map(samples);
    map.kind = StaticMapKind::EmpiricalGrid;
    map.grid = em.grid;
  } else if (map_kind != "linear") {
    throw config_error("static_map must be 'linear' or 'empirical'");
  }

  // [sweep]
  e.sweep_mode = cfg.get_string("sweep", "mode", "grid");
  if (e.sweep_mode != "grid" && e.sweep_mode != "schedule")
    throw config_error("sweep mode must be 'grid' or 'schedule'");
  e.grid.offset_min_deg = cfg.get_double("sweep", "b_min_deg", -15.0);
  e.grid.offset_max_deg = cfg.get_double("sweep", "b_max_deg", 15.0);
  e.grid.offset_step_deg = cfg.get_double("sweep", "b_step_deg", 5.0);
  e.grid.amplitude_min_deg = cfg.get_double("sweep", "a_min_deg", 5.0);
  e.grid.amplitude_max_deg = cfg.get_double("sweep", "a_max_deg", 60.0);
  e.grid.amplitude_step_deg = cfg.get_double("sweep", "a_step_deg", 5.0);
  e.grid.frequency_min_hz = cfg.get_double("sweep", "f_min_hz", 0.2);
  e.grid.frequencies_per_amplitude =
      static_cast<int>(cfg.get_int("sweep", "f_points_per_amplitude", 8));
  e.protocol.settle_cycles =
      static_cast<int>(cfg.get_int("sweep", "settle_cycles", 0));
  e.protocol.avg_cycles =
      static_cast<int>(cfg.get_int("sweep", "avg_cycles", 5));

  // [schedule]
  const std::string kind =
      cfg.get_string("schedule", "kind", "coupled_amplitude_offset");
  if (kind == "half_wave_amplitude")
    e.schedule = half_wave_amplitude_schedule();
  else if (kind == "coupled_amplitude_offset")
    e.schedule = coupled_amplitude_offset_schedule();
  else if (kind == "constant")
    e.schedule.kind = ScheduleKind::ConstantParams;
  else
    throw config_error("schedule kind must be constant, half_wave_amplitude "
                       "or coupled_amplitude_offset");
  e.schedule.constant = {cfg.get_double("schedule", "a_deg", 40.0),
                         cfg.get_double("schedule", "b_deg", 0.0),
                         cfg.get_double("schedule", "f_hz",
                                        kNominalFrequencyHz)};
  e.schedule.base_amplitude_deg = cfg.get_double(
      "schedule", "base_amplitude_deg", e.schedule.base_amplitude_deg);
  e.schedule.amplitude_span_deg = cfg.get_double(
      "schedule", "amplitude_span_deg", e.schedule.amplitude_span_deg);
  e.schedule.amplitude_mod_hz = cfg.get_double(
      "schedule", "amplitude_mod_hz", e.schedule.amplitude_mod_hz);
  e.schedule.offset_span_deg = cfg.get_double(
      "schedule", "offset_span_deg", e.schedule.offset_span_deg);
  e.schedule.offset_mod_hz =
      cfg.get_double("schedule", "offset_mod_hz", e.schedule.offset_mod_hz);
  e.schedule.flap_frequency_hz = cfg.get_double(
      "schedule", "flap_frequency_hz", e.schedule.flap_frequency_hz);
  e.schedule_duration_s = cfg.get_double("schedule", "duration_s", 500.0);
  e.schedule_sample_period_s =
      cfg.get_double("schedule", "sample_period_s", 1.0);

  // [fit]
  e.fit.input_csv = cfg.get_string("fit", "input", "");
  e.fit.ladder = cfg.get_string("fit", "ladder", "auto");
  e.fit.condition_threshold = cfg.get_double("fit", "condition_threshold",
                                             kDefaultConditionThreshold);
  e.fit.selection_margin_mae =
      cfg.get_double("fit", "selection_margin_mae", 1.0);

  // [controller]
  e.preset_name = cfg.get_string("controller", "preset", "ff-pi-sim");
  e.controller = controller_preset(e.preset_name);
  e.controller.kp = cfg.get_double("controller", "kp", e.controller.kp);
  e.controller.ki = cfg.get_double("controller", "ki", e.controller.ki);
  e.controller.kd = cfg.get_double("controller", "kd", e.controller.kd);
  e.controller.feedforward_enabled = cfg.get_bool(
      "controller", "feedforward", e.controller.feedforward_enabled);
  e.controller.sample_period_s = cfg.get_double(
      "controller", "sample_period_s", e.controller.sample_period_s);
  e.controller.a_min_deg =
      cfg.get_double("controller", "a_min_deg", e.controller.a_min_deg);
  e.controller.a_max_deg =
      cfg.get_double("controller", "a_max_deg", e.controller.a_max_deg);
  e.controller.anti_windup =
      cfg.get_bool("controller", "anti_windup", e.controller.anti_windup);
  e.controller.validate();

  // [track]
  e.track.reference = cfg.get_string("track", "reference", "half_sine");
  if (e.track.reference != "half_sine" && e.track.reference != "constant")
    throw config_error("track reference must be 'half_sine' or 'constant'");
  e.track.peak_N = cfg.get_double("track", "peak_n", 0.5);
  e.track.cycle_s = cfg.get_double("track", "cycle_s", 100.0);
  e.track.level_N = cfg.get_double("track", "level_n", 0.3);
  e.track.duration_s = cfg.get_double("track", "duration_s", 300.0);
  e.track.ff_model_csv = cfg.get_string("track", "ff_model_csv", "");

  // [step_id]
  e.step_id.amplitude_step_deg =
      cfg.get_double("step_id", "amplitude_step_deg", 40.0);
  e.step_id.offset_step_deg =
      cfg.get_double("step_id", "offset_step_deg", -20.0);
  e.step_id.hold_amplitude_deg =
      cfg.get_double("step_id", "hold_amplitude_deg", 40.0);
  e.step_id.pre_step_s = cfg.get_double("step_id", "pre_step_s", 2.0);
  e.step_id.post_step_s = cfg.get_double("step_id", "post_step_s", 4.0);
  e.step_id_quiet = cfg.get_bool("step_id", "quiet", true);

  // [output]
  e.out_dir = cfg.get_string("output", "dir", "out");
  return e;
}

// ---------------------------------------------------------------------------
// Batch commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw io_error("cannot create output directory " + dir + ": " +
                   ec.message());
}

/// Feedforward model used when no fitted model file is configured: exact
/// inversion of the configured plant forward gain.
inline StaticModel plant_gain_model(const PlantConfig& plant) {
  StaticModel m;
  m.basket = Basket{{Term::A}};
  m.coefficients = Eigen::VectorXd::Constant(
      1, plant.map.forward_gain_N_per_deg);
  m.target = FitTarget::ForwardForce;
  return m;
}

}  // namespace detail

/// Measures the sweep (grid or schedule mode) and writes the measurement
/// table, the admissible grid points and an overview chart.
inline void cmd_sweep(const ExperimentConfig& e, std::ostream& log) {
  detail::ensure_out_dir(e.out_dir);
  std::vector<MeasuredPoint> points;
  if (e.sweep_mode == "grid") {
    const auto grid_points = generate_sweep(e.grid);
    write_sweep_points_csv(detail::join(e.out_dir, "sweep_points.csv"),
                           grid_points);
    points = run_grid_sweep(e.plant, e.grid, e.protocol, e.seed);
  } else {
    points = run_schedule_sweep(e.plant, e.schedule, e.schedule_duration_s,
                                e.schedule_sample_period_s, e.protocol,
                                e.seed);
  }
  write_measurements_csv(detail::join(e.out_dir, "sweep_measurements.csv"),
                         points);

  std::vector<svg::Series> series(2);
  series[0].label = "mean forward force [N]";
  series[1].label = "mean side force [N]";
  for (const auto& m : points) {
    series[0].points.emplace_back(m.test_id, m.mean_forward_N);
    series[1].points.emplace_back(m.test_id, m.mean_side_N);
  }
  svg::write_line_chart(detail::join(e.out_dir, "sweep_forces.svg"),
                        "Cycle-averaged force per test", "test id", "force [N]",
                        series);
  log << "sweep: " << points.size() << " points -> " << e.out_dir << "\n";
}

/// Fits the basket ladder to a measurement table and writes the per-basket
/// report, the selected models and data-vs-model overlays.
inline void cmd_fit(const ExperimentConfig& e, std::ostream& log) {
  if (e.fit.input_csv.empty())
    throw config_error("fit needs an input measurements CSV ([fit] input or "
                       "--in)");
  detail::ensure_out_dir(e.out_dir);
  const std::vector<MeasuredPoint> points =
      read_measurements_csv(e.fit.input_csv);
  if (points.size() < 4)
    throw input_error(e.fit.input_csv + ": too few rows to fit");

  bool have_time = true;
  for (const auto& m : points)
    if (!std::isfinite(m.t_s)) have_time = false;

  std::vector<Basket> ladder;
  if (e.fit.ladder == "table" || (e.fit.ladder == "auto" && have_time))
    ladder = table_basket_ladder();
  else if (e.fit.ladder == "polynomial" || e.fit.ladder == "auto")
    ladder = polynomial_basket_ladder();
  else {
    std::size_t pos = 0;
    const std::string& text = e.fit.ladder;
    while (pos <= text.size()) {
      const std::size_t next = text.find(';', pos);
      const std::string rung = text.substr(
          pos, next == std::string::npos ? text.size() - pos : next - pos);
      if (!rung.empty()) ladder.push_back(Basket::parse(rung));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (ladder.empty())
      throw config_error("fit ladder '" + e.fit.ladder + "' names no baskets");
  }

  const FitOutcome fit = fit_measurements(
      points, ladder, e.fit.condition_threshold, e.fit.selection_margin_mae);
  write_fit_report_csv(detail::join(e.out_dir, "fit_report.csv"), fit);
  write_model_csv(detail::join(e.out_dir, "fit_selected_model.csv"),
                  fit.forward_model, fit.side_model);

  const std::vector<RegressorSample> records = to_regressors(
      points, fit.forward_model.basket.contains(Term::ADot) ||
                  fit.side_model.basket.contains(Term::ADot));
  auto overlay = [&](const StaticModel& model, auto measured,
                     const std::string& name, const std::string& y_label) {
    std::vector<svg::Series> series(2);
    series[0].label = "measured";
    series[1].label = "selected model";
    for (std::size_t i = 0; i < points.size(); ++i) {
      series[0].points.emplace_back(points[i].test_id, measured(points[i]));
      series[1].points.emplace_back(points[i].test_id,
                                    model.predict(records[i]));
    }
    svg::write_line_chart(detail::join(e.out_dir, name),
                          "Measured vs selected model", "test id", y_label,
                          series);
  };
  overlay(fit.forward_model,
          [](const MeasuredPoint& m) { return m.magnitude_N; },
          "fit_forward.svg", "force magnitude [N]");
  overlay(fit.side_model, [](const MeasuredPoint& m) { return m.angle_deg; },
          "fit_side.svg", "force angle [deg]");

  log << "fit: selected forward basket {"
      << fit.forward_model.basket.to_string() << "}, side basket {"
      << fit.side_model.basket.to_string() << "} -> " << e.out_dir << "\n";
}

/// Runs the two step experiments and writes both fitted FOPDT models plus
/// the raw traces.
inline void cmd_step_id(const ExperimentConfig& e, std::ostream& log) {
  detail::ensure_out_dir(e.out_dir);
  PlantConfig plant = e.plant;
  if (e.step_id_quiet) {
    plant.sensor.noise_std_N = 0.0;
    plant.sensor.ripple_fraction = 0.0;
  }
  const StepIdOutcome out = run_step_id(plant, e.step_id, e.seed);

  csv::Writer models(detail::join(e.out_dir, "step_id_models.csv"));
  models.row("channel", "gain", "time_constant_s", "dead_time_s");
  models.row("magnitude", out.magnitude_model.gain,
             out.magnitude_model.time_constant_s,
             out.magnitude_model.dead_time_s);
  models.row("angle", out.angle_model.gain, out.angle_model.time_constant_s,
             out.angle_model.dead_time_s);
  models.close();

  auto dump_trace = [&](const StepTrace& tr, const std::string& name,
                        const std::string& y_label) {
    csv::Writer w(detail::join(e.out_dir, name + ".csv"));
    w.row("t_s", "y");
    for (std::size_t i = 0; i < tr.t_s.size(); ++i) w.row(tr.t_s[i], tr.y[i]);
    w.close();
    std::vector<svg::Series> series(1);
    series[0].label = y_label;
    for (std::size_t i = 0; i < tr.t_s.size(); ++i)
      series[0].points.emplace_back(tr.t_s[i], tr.y[i]);
    svg::write_line_chart(detail::join(e.out_dir, name + ".svg"),
                          "Step response", "t [s]", y_label, series);
  };
  dump_trace(out.magnitude_trace, "step_id_magnitude", "force magnitude [N]");
  dump_trace(out.angle_trace, "step_id_angle", "force angle [deg]");

  log << "step-id: magnitude (K=" << out.magnitude_model.gain
      << ", tau=" << out.magnitude_model.time_constant_s
      << ", L=" << out.magnitude_model.dead_time_s << "), angle (K="
      << out.angle_model.gain << ", tau=" << out.angle_model.time_constant_s
      << ", L=" << out.angle_model.dead_time_s << ") -> " << e.out_dir << "\n";
}

/// Runs the configured controller against the reference and writes the
/// trace, a key = value summary and a chart.
inline void cmd_track(const ExperimentConfig& e, std::ostream& log) {
  detail::ensure_out_dir(e.out_dir);
  PlantConfig plant_cfg = e.plant;
  plant_cfg.sensor.rng_seed = mix_seed(e.seed, 777);
  ThrustPlant plant(plant_cfg);

  const StaticModel model =
      e.track.ff_model_csv.empty()
          ? detail::plant_gain_model(e.plant)
          : read_model_csv(e.track.ff_model_csv, FitTarget::ForwardForce);

  const ReferenceSignal reference =
      e.track.reference == "half_sine"
          ? half_sine_reference(e.track.peak_N, e.track.cycle_s)
          : constant_reference(e.track.level_N);
  const TrackingTrace trace = run_tracking(plant, e.controller, &model,
                                           reference, e.track.duration_s);
  const TrackingSummary summary = summarize_tracking(
      trace, e.track.reference == "half_sine" ? e.track.cycle_s : 0.0);

  write_tracking_trace_csv(detail::join(e.out_dir, "track_trace.csv"), trace);

  std::ofstream sm(detail::join(e.out_dir, "track_summary.txt"));
  if (!sm) throw io_error("cannot open track_summary.txt in " + e.out_dir);
  sm << "preset = " << e.preset_name << "\n";
  sm << "control_period_s = " << csv::format_double(trace.control_period_s)
     << "\n";
  sm << "ticks = " << trace.steps.size() << "\n";
  sm << "mean_abs_error_N = " << csv::format_double(summary.mean_abs_error_N)
     << "\n";
  sm << "steady_state_error_N = "
     << csv::format_double(summary.steady_state_error_N) << "\n";
  sm << "saturated_fraction = "
     << csv::format_double(summary.saturated_fraction) << "\n";
  sm << "unstable = " << (summary.unstable ? "true" : "false") << "\n";
  for (std::size_t i = 0; i < summary.per_cycle_mae_N.size(); ++i)
    sm << "cycle_" << i + 1
       << "_mae_N = " << csv::format_double(summary.per_cycle_mae_N[i])
       << "\n";
  sm.close();

  std::vector<svg::Series> series(2);
  series[0].label = "reference [N]";
  series[1].label = "measured [N]";
  for (const auto& s : trace.steps) {
    series[0].points.emplace_back(s.t_s, s.reference_N);
    series[1].points.emplace_back(s.t_s, s.measured_N);
  }
  svg::write_line_chart(detail::join(e.out_dir, "track.svg"),
                        "Force tracking (" + e.preset_name + ")",
                        "t [s]", "force [N]", series);

  log << "track: preset " << e.preset_name << ", mean |error| "
      << summary.mean_abs_error_N << " N"
      << (summary.unstable ? " [UNSTABLE: command pinned]" : "") << " -> "
      << e.out_dir << "\n";
}

/// Open-loop continuous simulation under the configured schedule; writes the
/// raw force trace, the rolling per-cycle averages and a chart.
inline void cmd_plant_sim(const ExperimentConfig& e, std::ostream& log) {
  detail::ensure_out_dir(e.out_dir);
  PlantConfig plant_cfg = e.plant;
  plant_cfg.sensor.rng_seed = mix_seed(e.seed, 555);
  ThrustPlant plant(plant_cfg);

  const double flap = e.schedule.kind == ScheduleKind::ConstantParams
                          ? e.schedule.constant.frequency_hz
                          : e.schedule.flap_frequency_hz;
  CycleAverager averager(plant_cfg.sensor.sample_rate_hz, flap);

  csv::Writer trace(detail::join(e.out_dir, "plant_trace.csv"));
  trace.row("t_s", "a_deg", "b_deg", "f_hz", "forward_N", "side_N");
  csv::Writer cycles(detail::join(e.out_dir, "plant_cycles.csv"));
  cycles.row("cycle_index", "mean_forward_N", "mean_side_N", "magnitude_N",
             "angle_deg");

  std::vector<svg::Series> series(2);
  series[0].label = "forward [N]";
  series[1].label = "side [N]";

  const auto n = static_cast<std::size_t>(e.schedule_duration_s /
                                          plant_cfg.dt_s);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * plant_cfg.dt_s;
    const PropulsionParams p = eval_schedule(e.schedule, t);
    const ForceSample s = plant.step(p);
    averager.push(s);
    trace.row(s.t_s, p.amplitude_deg, p.offset_deg, p.frequency_hz,
              s.forward_N, s.side_N);
    series[0].points.emplace_back(s.t_s, s.forward_N);
    series[1].points.emplace_back(s.t_s, s.side_N);
    if (averager.samples_seen() % averager.window_size() == 0) {
      const CycleAverage c = averager.latest();
      cycles.row(c.cycle_index, c.mean_forward_N, c.mean_side_N,
                 c.magnitude_N, c.angle_deg);
    }
  }
  trace.close();
  cycles.close();
  svg::write_line_chart(detail::join(e.out_dir, "plant_sim.svg"),
                        "Open-loop plant forces", "t [s]", "force [N]",
                        series);
  log << "plant-sim: " << n << " samples -> " << e.out_dir << "\n";
}

}  // namespace caudal
