#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "caudal/errors.hpp"
#include "caudal/plant.hpp"

namespace caudal {

/// Regressor vocabulary for the static-model design matrix.
enum class Term {
  One, A, B, ADot, BDot, ADdot, BDdot,
  A2, B2, A3, B3, A4, B4, ADot2, BDot2,
};

inline std::string_view term_name(Term t) {
  switch (t) {
    case Term::One: return "1";
    case Term::A: return "a";
    case Term::B: return "b";
    case Term::ADot: return "a_dot";
    case Term::BDot: return "b_dot";
    case Term::ADdot: return "a_ddot";
    case Term::BDdot: return "b_ddot";
    case Term::A2: return "a2";
    case Term::B2: return "b2";
    case Term::A3: return "a3";
    case Term::B3: return "b3";
    case Term::A4: return "a4";
    case Term::B4: return "b4";
    case Term::ADot2: return "a_dot2";
    case Term::BDot2: return "b_dot2";
  }
  return "?";
}

inline Term parse_term(std::string_view name) {
  static constexpr Term all[] = {
      Term::One, Term::A, Term::B, Term::ADot, Term::BDot, Term::ADdot,
      Term::BDdot, Term::A2, Term::B2, Term::A3, Term::B3, Term::A4,
      Term::B4, Term::ADot2, Term::BDot2,
  };
  for (Term t : all)
    if (term_name(t) == name) return t;
  throw input_error("unknown regressor term: " + std::string(name));
}

/// One identification record: waveform parameters plus optional time
/// derivatives of the slowly modulated amplitude and offset.
struct RegressorSample {
  double a_deg = 0.0;
  double b_deg = 0.0;
  std::optional<double> a_dot;
  std::optional<double> b_dot;
  std::optional<double> a_ddot;
  std::optional<double> b_ddot;
};

namespace detail {

inline double require(const std::optional<double>& v, const char* what) {
  if (!v) throw input_error(std::string("regressor term needs ") + what +
                            " but no derivative data was supplied");
  return *v;
}

}  // namespace detail

inline double eval_term(Term t, const RegressorSample& r) {
  switch (t) {
    case Term::One: return 1.0;
    case Term::A: return r.a_deg;
    case Term::B: return r.b_deg;
    case Term::ADot: return detail::require(r.a_dot, "a_dot");
    case Term::BDot: return detail::require(r.b_dot, "b_dot");
    case Term::ADdot: return detail::require(r.a_ddot, "a_ddot");
    case Term::BDdot: return detail::require(r.b_ddot, "b_ddot");
    case Term::A2: return r.a_deg * r.a_deg;
    case Term::B2: return r.b_deg * r.b_deg;
    case Term::A3: return r.a_deg * r.a_deg * r.a_deg;
    case Term::B3: return r.b_deg * r.b_deg * r.b_deg;
    case Term::A4: return (r.a_deg * r.a_deg) * (r.a_deg * r.a_deg);
    case Term::B4: return (r.b_deg * r.b_deg) * (r.b_deg * r.b_deg);
    case Term::ADot2: {
      const double v = detail::require(r.a_dot, "a_dot");
      return v * v;
    }
    case Term::BDot2: {
      const double v = detail::require(r.b_dot, "b_dot");
      return v * v;
    }
  }
  throw input_error("unknown regressor term");
}

/// Ordered set of regressor terms; duplicates are rejected.
struct Basket {
  std::vector<Term> terms;

  void validate() const {
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t j = i + 1; j < terms.size(); ++j)
        if (terms[i] == terms[j])
          throw input_error("basket contains duplicate term " +
                            std::string(term_name(terms[i])));
    if (terms.empty()) throw input_error("basket is empty");
  }

  bool contains(Term t) const {
    return std::find(terms.begin(), terms.end(), t) != terms.end();
  }

  std::string to_string() const {
    std::string s;
    for (const Term t : terms) {
      if (!s.empty()) s += '+';
      s += term_name(t);
    }
    return s;
  }

  /// Parses "a+b+a_dot" style basket descriptions.
  static Basket parse(std::string_view text) {
    Basket b;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t next = text.find('+', pos);
      const std::string_view tok =
          text.substr(pos, next == std::string_view::npos ? text.size() - pos
                                                          : next - pos);
      if (!tok.empty()) b.terms.push_back(parse_term(tok));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    b.validate();
    return b;
  }

  bool operator==(const Basket& other) const { return terms == other.terms; }
};

/// One row per record, one column per basket term.
inline Eigen::MatrixXd build_design_matrix(
    std::span<const RegressorSample> records, const Basket& basket) {
  basket.validate();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()),
                    static_cast<Eigen::Index>(basket.terms.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      X(i, j) = eval_term(basket.terms[static_cast<std::size_t>(j)],
                          records[static_cast<std::size_t>(i)]);
  return X;
}

/// Fit quality summary. MAE is reported as a percentage of the mean
/// absolute target value; the condition number is that of X^T X.
struct FitReport {
  double mae_percent = 0.0;
  double condition_number = 1.0;
  int n_rows = 0;
  bool flagged = false;
};

struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  FitReport report;
};

inline constexpr double kDefaultConditionThreshold = 1e12;

/// Minimizes ||Y - X c||_2 through an SVD (pseudo-inverse semantics on
/// rank-deficient input). A condition number of X^T X above the threshold
/// only flags the report; coefficients are still returned.
inline LeastSquaresFit fit_least_squares(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
    double condition_threshold = kDefaultConditionThreshold) {
  if (X.rows() < X.cols())
    throw input_error("least squares needs at least as many rows as columns");
  if (X.rows() != Y.rows())
    throw input_error("design matrix and target lengths differ");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double s_max = sigma(0);
  const double s_min = sigma(sigma.size() - 1);

  LeastSquaresFit out;
  out.coefficients = svd.solve(Y);
  const Eigen::VectorXd residual = Y - X * out.coefficients;
  const double mae = residual.cwiseAbs().mean();
  const double denom = Y.cwiseAbs().mean();
  if (denom > 1e-300)
    out.report.mae_percent = 100.0 * mae / denom;
  else
    out.report.mae_percent =
        mae > 1e-300 ? std::numeric_limits<double>::infinity() : 0.0;
  out.report.condition_number =
      s_min > 0.0 ? (s_max / s_min) * (s_max / s_min)
                  : std::numeric_limits<double>::infinity();
  out.report.n_rows = static_cast<int>(X.rows());
  out.report.flagged = !(out.report.condition_number < condition_threshold);
  return out;
}

enum class FitTarget { ForwardForce, SideForce };

inline std::string_view fit_target_name(FitTarget t) {
  return t == FitTarget::ForwardForce ? "forward" : "side";
}

/// A fitted static model: coefficients over a basket for one target channel.
struct StaticModel {
  Basket basket;
  Eigen::VectorXd coefficients;
  FitTarget target = FitTarget::ForwardForce;

  double coefficient_for(Term t) const {
    for (std::size_t i = 0; i < basket.terms.size(); ++i)
      if (basket.terms[i] == t)
        return coefficients(static_cast<Eigen::Index>(i));
    return 0.0;
  }

  double predict(const RegressorSample& r) const {
    double y = 0.0;
    for (std::size_t i = 0; i < basket.terms.size(); ++i)
      y += coefficients(static_cast<Eigen::Index>(i)) *
           eval_term(basket.terms[i], r);
    return y;
  }
};

struct BasketFit {
  Basket basket;
  LeastSquaresFit fit;
};

/// Fits every basket of a ladder against the same records and target.
/// Two identical rungs are rejected.
inline std::vector<BasketFit> basket_ladder(
    std::span<const RegressorSample> records, const Eigen::VectorXd& y,
    std::span<const Basket> baskets,
    double condition_threshold = kDefaultConditionThreshold) {
  for (std::size_t i = 0; i < baskets.size(); ++i)
    for (std::size_t j = i + 1; j < baskets.size(); ++j)
      if (baskets[i] == baskets[j])
        throw input_error("basket ladder contains duplicate rung " +
                          baskets[i].to_string());
  std::vector<BasketFit> out;
  out.reserve(baskets.size());
  for (const Basket& b : baskets) {
    b.validate();
    out.push_back({b, fit_least_squares(build_design_matrix(records, b), y,
                                        condition_threshold)});
  }
  return out;
}

/// The cumulative derivative ladder:
/// {a,b}, +{a_dot,b_dot}, +{a_ddot,b_ddot}, +{a2,b2}, +{a3,b3}, +{a4,b4},
/// plus the standalone {a,a_dot,a_dot2,b,b_dot,b_dot2} rung.
inline std::vector<Basket> table_basket_ladder() {
  using T = Term;
  std::vector<Basket> rungs;
  rungs.push_back({{T::A, T::B}});
  rungs.push_back({{T::A, T::B, T::ADot, T::BDot}});
  rungs.push_back({{T::A, T::B, T::ADot, T::BDot, T::ADdot, T::BDdot}});
  rungs.push_back(
      {{T::A, T::B, T::ADot, T::BDot, T::ADdot, T::BDdot, T::A2, T::B2}});
  rungs.push_back({{T::A, T::B, T::ADot, T::BDot, T::ADdot, T::BDdot, T::A2,
                    T::B2, T::A3, T::B3}});
  rungs.push_back({{T::A, T::B, T::ADot, T::BDot, T::ADdot, T::BDdot, T::A2,
                    T::B2, T::A3, T::B3, T::A4, T::B4}});
  rungs.push_back({{T::A, T::ADot, T::ADot2, T::B, T::BDot, T::BDot2}});
  return rungs;
}

/// Polynomial-only ladder for datasets without derivative information.
inline std::vector<Basket> polynomial_basket_ladder() {
  using T = Term;
  std::vector<Basket> rungs;
  rungs.push_back({{T::A, T::B}});
  rungs.push_back({{T::A, T::B, T::A2, T::B2}});
  rungs.push_back({{T::A, T::B, T::A2, T::B2, T::A3, T::B3}});
  rungs.push_back({{T::A, T::B, T::A2, T::B2, T::A3, T::B3, T::A4, T::B4}});
  return rungs;
}

/// Model-selection rule: drop flagged rungs, then take the lowest-complexity
/// rung whose MAE is within margin_mae_points of the best unflagged MAE.
inline std::size_t select_basket(std::span<const BasketFit> fits,
                                 double margin_mae_points = 1.0) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fits)
    if (!f.fit.report.flagged && std::isfinite(f.fit.report.mae_percent))
      best = std::min(best, f.fit.report.mae_percent);
  if (!std::isfinite(best))
    throw numeric_error("every basket in the ladder was flagged as unreliable");
  std::size_t pick = fits.size();
  std::size_t pick_terms = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    if (f.fit.report.flagged) continue;
    if (f.fit.report.mae_percent > best + margin_mae_points) continue;
    if (f.basket.terms.size() < pick_terms) {
      pick = i;
      pick_terms = f.basket.terms.size();
    }
  }
  return pick;
}

/// Central finite differences over uniformly sampled (t, a, b) series.
/// End points fall back to one-sided first differences; second derivatives
/// at the ends copy the neighbouring interior value.
inline std::vector<RegressorSample> samples_with_fd_derivatives(
    std::span<const double> t, std::span<const double> a,
    std::span<const double> b) {
  const std::size_t n = t.size();
  if (a.size() != n || b.size() != n)
    throw input_error("derivative input series have mismatched lengths");
  if (n < 3)
    throw input_error("need at least 3 samples for finite differences");
  for (std::size_t i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1]))
      throw input_error("derivative input times must be strictly increasing");

  std::vector<RegressorSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].a_deg = a[i];
    out[i].b_deg = b[i];
    if (i == 0) {
      out[i].a_dot = (a[1] - a[0]) / (t[1] - t[0]);
      out[i].b_dot = (b[1] - b[0]) / (t[1] - t[0]);
    } else if (i == n - 1) {
      out[i].a_dot = (a[n - 1] - a[n - 2]) / (t[n - 1] - t[n - 2]);
      out[i].b_dot = (b[n - 1] - b[n - 2]) / (t[n - 1] - t[n - 2]);
    } else {
      out[i].a_dot = (a[i + 1] - a[i - 1]) / (t[i + 1] - t[i - 1]);
      out[i].b_dot = (b[i + 1] - b[i - 1]) / (t[i + 1] - t[i - 1]);
      const double h = 0.5 * (t[i + 1] - t[i - 1]);
      out[i].a_ddot = (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (h * h);
      out[i].b_ddot = (b[i + 1] - 2.0 * b[i] + b[i - 1]) / (h * h);
    }
  }
  out[0].a_ddot = out[1].a_ddot;
  out[0].b_ddot = out[1].b_ddot;
  out[n - 1].a_ddot = out[n - 2].a_ddot;
  out[n - 1].b_ddot = out[n - 2].b_ddot;
  return out;
}

/// Two-point FOPDT identification from a step-response trace.
///
/// Gain from the pre/post-step plateaus, then the 28.3% and 63.2% rise
/// crossings give tau = 1.5 * (t63 - t28) and L = t63 - tau - t_step
/// (clamped at zero). The trace must be settled at both ends.
inline FopdtModel fit_fopdt_from_step(std::span<const double> t,
                                      std::span<const double> y,
                                      double step_size, double t_step) {
  const std::size_t n = t.size();
  if (y.size() != n) throw input_error("step trace t/y lengths differ");
  if (n < 8) throw input_error("step trace is too short to fit");

  double pre_sum = 0.0, pre_sq = 0.0;
  std::size_t pre_n = 0;
  for (std::size_t i = 0; i < n && t[i] < t_step; ++i) {
    pre_sum += y[i];
    pre_sq += y[i] * y[i];
    ++pre_n;
  }
  if (pre_n < 3)
    throw input_error("step trace must start well before the step");
  const double y0 = pre_sum / static_cast<double>(pre_n);
  const double pre_var =
      std::max(0.0, pre_sq / static_cast<double>(pre_n) - y0 * y0);
  const double noise_floor = 3.0 * std::sqrt(pre_var);

  const std::size_t tail_n = std::max<std::size_t>(3, n / 10);
  double tail_sum = 0.0;
  double tail_min = std::numeric_limits<double>::infinity();
  double tail_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = n - tail_n; i < n; ++i) {
    tail_sum += y[i];
    tail_min = std::min(tail_min, y[i]);
    tail_max = std::max(tail_max, y[i]);
  }
  const double y1 = tail_sum / static_cast<double>(tail_n);
  const double dy = y1 - y0;

  if (step_size == 0.0 || std::abs(dy) <= std::max(1e-12, noise_floor))
    throw numeric_error(
        "insufficient excitation: step response change is below the noise "
        "floor");
  if (tail_max - tail_min > 0.05 * std::abs(dy))
    throw numeric_error(
        "fit quality: trace is not settled over its final 10%");

  const double sign = dy > 0.0 ? 1.0 : -1.0;
  auto first_crossing = [&](double level) {
    double prev_t = t_step, prev_y = y0;
    bool primed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i] < t_step) continue;
      if (primed && sign * (y[i] - level) >= 0.0) {
        const double span = y[i] - prev_y;
        const double w = span != 0.0 ? (level - prev_y) / span : 0.0;
        return prev_t + w * (t[i] - prev_t);
      }
      prev_t = t[i];
      prev_y = y[i];
      primed = true;
    }
    throw numeric_error("fit quality: response never crosses a rise level");
  };

  const double t28 = first_crossing(y0 + 0.283 * dy);
  const double t63 = first_crossing(y0 + 0.632 * dy);
  const double tau = 1.5 * (t63 - t28);
  if (!(tau > 0.0))
    throw numeric_error("fit quality: rise crossings are out of order");
  const double dead = std::max(0.0, t63 - tau - t_step);
  return {dy / step_size, tau, dead};
}

}  // namespace caudal
