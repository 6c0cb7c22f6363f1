#include "saia/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace saia {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double hyperbola_a(double b) {
  // 6ab - 2a - b + 1/2 = 0  =>  a = (2b - 1) / (12b - 4)
  return (2.0 * b - 1.0) / (12.0 * b - 4.0);
}

SplittingScheme SplittingScheme::verlet() { return {1, 0.0, 0.0, "VV"}; }

SplittingScheme SplittingScheme::two_stage(double b, std::string label) {
  if (!(b > 0.0 && b < 0.5)) throw std::invalid_argument("two_stage: b must lie in (0, 0.5)");
  return {2, b, 0.0, label.empty() ? "2stage" : std::move(label)};
}

SplittingScheme SplittingScheme::three_stage(double b, std::string label) {
  return three_stage_ab(b, hyperbola_a(b), std::move(label));
}

SplittingScheme SplittingScheme::three_stage_ab(double b, double a, std::string label) {
  if (!(b > 0.0 && b < 0.5)) throw std::invalid_argument("three_stage: b must lie in (0, 0.5)");
  if (!(a > 0.0 && a < 0.5)) throw std::invalid_argument("three_stage: a must lie in (0, 0.5)");
  return {3, b, a, label.empty() ? "3stage" : std::move(label)};
}

SplittingScheme SplittingScheme::vv2() { return two_stage(0.25, "VV2"); }
SplittingScheme SplittingScheme::vv3() { return three_stage_ab(1.0 / 6.0, 1.0 / 3.0, "VV3"); }
SplittingScheme SplittingScheme::bcss2() { return two_stage(0.211781, "BCSS2"); }
SplittingScheme SplittingScheme::bcss3() { return three_stage(0.118880, "BCSS3"); }
SplittingScheme SplittingScheme::me2() { return two_stage(0.193183, "ME2"); }
SplittingScheme SplittingScheme::me3() { return three_stage(0.108991, "ME3"); }

std::vector<double> SplittingScheme::kick_weights() const {
  switch (stages) {
    case 1: return {0.5, 0.5};
    case 2: return {b, 1.0 - 2.0 * b, b};
    case 3: return {b, 0.5 - b, 0.5 - b, b};
    default: throw std::invalid_argument("SplittingScheme: stages must be 1, 2 or 3");
  }
}

std::vector<double> SplittingScheme::drift_weights() const {
  switch (stages) {
    case 1: return {1.0};
    case 2: return {0.5, 0.5};
    case 3: return {a, 1.0 - 2.0 * a, a};
    default: throw std::invalid_argument("SplittingScheme: stages must be 1, 2 or 3");
  }
}

double HarmonicPropagator::angle() const {
  return std::acos(std::clamp(A, -1.0, 1.0));
}

double HarmonicPropagator::rho() const {
  const double denom = 2.0 * (1.0 - A * A);
  if (denom <= 0.0) throw std::domain_error("HarmonicPropagator::rho: outside stability");
  const double s = B + C;
  return s * s / denom;
}

HarmonicPropagator harmonic_propagator_composed(const SplittingScheme& scheme, double h) {
  const auto kicks = scheme.kick_weights();
  const auto drifts = scheme.drift_weights();
  // compose right-to-left: kick, then alternating drift/kick
  double A = 1, B = 0, C = 0, D = 1;
  auto apply_kick = [&](double c) {  // p <- p - c h theta
    C -= c * h * A;
    D -= c * h * B;
  };
  auto apply_drift = [&](double d) {  // theta <- theta + d h p
    A += d * h * C;
    B += d * h * D;
  };
  apply_kick(kicks[0]);
  for (std::size_t i = 0; i < drifts.size(); ++i) {
    apply_drift(drifts[i]);
    apply_kick(kicks[i + 1]);
  }
  return {A, B, C, D};
}

HarmonicPropagator harmonic_propagator(const SplittingScheme& scheme, double h) {
  if (h <= 0) throw std::invalid_argument("harmonic_propagator: h must be positive");
  const double h2 = h * h;
  if (scheme.stages == 1) {
    return {1.0 - h2 / 2.0, h, -h + h2 * h / 4.0, 1.0 - h2 / 2.0};
  }
  if (scheme.stages == 3) {
    const double a = scheme.a, b = scheme.b;
    const double h4 = h2 * h2, h6 = h4 * h2;
    const double A = 1.0 - h2 / 2.0 + a * (0.5 - b) * (0.5 - a + b) * h4 -
                     2.0 * a * a * b * (0.5 - a) * (0.5 - b) * (0.5 - b) * h6;
    const double B = h - 2.0 * a * (1.0 - a) * (0.5 - b) * h2 * h +
                     2.0 * a * a * (0.5 - a) * (0.5 - b) * (0.5 - b) * h4 * h;
    const double C = -h + (2.0 * a * b * (1.0 - b) - a / 2.0 + 0.25) * h2 * h +
                     2.0 * a * b * (0.5 - b) * (a * (1.0 - b) - 0.5) * h4 * h +
                     2.0 * a * a * b * b * (0.5 - a) * (0.5 - b) * (0.5 - b) * h6 * h;
    return {A, B, C, A};
  }
  return harmonic_propagator_composed(scheme, h);
}

double rho_or_inf(int k, double h, double b) noexcept {
  const double h2 = h * h;
  if (k == 2) {
    const double num_core = 2.0 * b * b * (0.5 - b) * h2 + 4.0 * b * b - 6.0 * b + 1.0;
    const double denom = 8.0 * (2.0 - b * h2) * (2.0 - (0.5 - b) * h2) *
                         (1.0 - b * (0.5 - b) * h2);
    if (denom <= 0.0) return kInf;
    return h2 * h2 * num_core * num_core / denom;
  }
  if (k == 3) {
    const double b2 = b * b;
    const double q = b * b2 - 1.25 * b2 + 0.5 * b - 1.0 / 16.0;  // b^3 - 5/4 b^2 + b/2 - 1/16
    const double num_core =
        -3.0 * b2 * b2 + 8.0 * b * b2 - 19.0 / 4.0 * b2 + b + b2 * h2 * q - 1.0 / 16.0;
    const double d1 = 3.0 * b - b * h2 * (b - 0.25) - 1.0;
    const double d2 = 1.0 - 3.0 * b - b * h2 * (b - 0.5) * (b - 0.5);
    const double d3 = -9.0 * b2 + 6.0 * b - h2 * q - 1.0;
    const double denom = 2.0 * d1 * d2 * d3;
    if (denom <= 0.0) return kInf;
    return h2 * h2 * num_core * num_core / denom;
  }
  return kInf;
}

double rho(int k, double h, double b) {
  if (k != 2 && k != 3) throw std::invalid_argument("rho: k must be 2 or 3");
  if (h <= 0) throw std::invalid_argument("rho: h must be positive");
  const double value = rho_or_inf(k, h, b);
  if (!std::isfinite(value)) throw std::domain_error("rho: h at or beyond the stability limit");
  return value;
}

double stability_limit_dimensionless(const SplittingScheme& scheme) {
  // |A| is not monotone in h, so scan first and bisect on the first violation.
  const double h_cap = 2.0 * scheme.stages + 0.5;
  const double scan_step = 1e-3;
  auto unstable = [&](double h) {
    return std::abs(harmonic_propagator(scheme, h).A) > 1.0 + 1e-14;
  };
  double lo = scan_step;
  if (unstable(lo)) return 0.0;
  double hi = -1.0;
  for (double h = 2.0 * scan_step; h <= h_cap; h += scan_step) {
    if (unstable(h)) {
      hi = h;
      break;
    }
    lo = h;
  }
  if (hi < 0) return 2.0 * scheme.stages;  // stable up to the family maximum
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (unstable(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double stability_limit_dimensionless(int k, double b) {
  switch (k) {
    case 1: return stability_limit_dimensionless(SplittingScheme::verlet());
    case 2: return stability_limit_dimensionless(SplittingScheme::two_stage(b));
    case 3: return stability_limit_dimensionless(SplittingScheme::three_stage(b));
    default: throw std::invalid_argument("stability_limit_dimensionless: k must be 1, 2 or 3");
  }
}

double expected_energy_error_harmonic(const SplittingScheme& scheme, double h, int leg_steps) {
  const HarmonicPropagator prop = harmonic_propagator(scheme, h);
  const double s = std::sin(leg_steps * prop.angle());
  return s * s * prop.rho();
}

PhasePoint step(const SplittingScheme& scheme, const TargetModel& model, const PhasePoint& state,
                double h, Eigen::VectorXd* cached_gradient, long* gradient_evals) {
  if (h <= 0) throw std::invalid_argument("step: h must be positive");
  const auto kicks = scheme.kick_weights();
  const auto drifts = scheme.drift_weights();
  PhasePoint s = state;
  auto eval_gradient = [&](const Eigen::VectorXd& theta) {
    if (gradient_evals) ++(*gradient_evals);
    return model.gradient(theta);
  };
  Eigen::VectorXd grad;
  if (cached_gradient && cached_gradient->size() == s.theta.size()) {
    grad = *cached_gradient;
  } else {
    grad = eval_gradient(s.theta);
  }
  s.p -= kicks[0] * h * grad;
  for (std::size_t i = 0; i < drifts.size(); ++i) {
    s.theta += drifts[i] * h * s.p;
    grad = eval_gradient(s.theta);
    s.p -= kicks[i + 1] * h * grad;
  }
  if (cached_gradient) *cached_gradient = grad;  // gradient at the final position
  return s;
}

LegResult integrate_leg(const SplittingScheme& scheme, const TargetModel& model,
                        const PhasePoint& state, double h, int leg_steps,
                        double divergence_cap) {
  if (leg_steps < 1) throw std::invalid_argument("integrate_leg: need at least one step");
  LegResult result;
  const double h0 = model.potential(state.theta) + 0.5 * state.p.squaredNorm();
  Eigen::VectorXd cached = model.gradient(state.theta);
  result.gradient_evals = 1;
  result.state = state;
  for (int i = 0; i < leg_steps; ++i) {
    result.state = step(scheme, model, result.state, h, &cached, &result.gradient_evals);
    if (!result.state.theta.allFinite() || !result.state.p.allFinite()) {
      result.divergent = true;
      result.delta_h = kInf;
      return result;
    }
  }
  const double h1 = model.potential(result.state.theta) + 0.5 * result.state.p.squaredNorm();
  result.delta_h = h1 - h0;
  result.divergent = !std::isfinite(result.delta_h) || std::abs(result.delta_h) > divergence_cap;
  return result;
}

}  // namespace saia
