#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "saia/model.hpp"

namespace saia {

/// Palindromic k-stage splitting integrator, k in {1,2,3}.
/// k=1: Velocity Verlet. k=2: kicks (b, 1-2b, b), drifts (1/2, 1/2).
/// k=3: kicks (b, 1/2-b, 1/2-b, b), drifts (a, 1-2a, a).
struct SplittingScheme {
  int stages = 1;
  double b = 0.0;  // unused for k=1
  double a = 0.0;  // k=3 only
  std::string label = "VV";

  static SplittingScheme verlet();
  static SplittingScheme two_stage(double b, std::string label = "");
  /// a paired through the hyperbola 6ab - 2a - b + 1/2 = 0.
  static SplittingScheme three_stage(double b, std::string label = "");
  static SplittingScheme three_stage_ab(double b, double a, std::string label = "");

  static SplittingScheme vv2();
  static SplittingScheme vv3();
  static SplittingScheme bcss2();
  static SplittingScheme bcss3();
  static SplittingScheme me2();
  static SplittingScheme me3();

  std::vector<double> kick_weights() const;
  std::vector<double> drift_weights() const;
};

/// a(b) on the 3-stage hyperbola 6ab - 2a - b + 1/2 = 0.
double hyperbola_a(double b);

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd p;
};

/// One-step 2x2 propagator for the unit harmonic oscillator (theta' ; p') = (A B; C D)(theta; p).
struct HarmonicPropagator {
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;

  double det() const { return A * D - B * C; }
  /// Rotation angle Theta = arccos(A), A clipped to [-1, 1].
  double angle() const;
  /// Generic energy-error bound (B+C)^2 / (2(1-A^2)).
  double rho() const;
};

/// Closed-form coefficients for k=1 and k=3; explicit 2x2 composition for k=2.
HarmonicPropagator harmonic_propagator(const SplittingScheme& scheme, double h);

/// Brute-force composition of the kick/drift maps (oracle route, all k).
HarmonicPropagator harmonic_propagator_composed(const SplittingScheme& scheme, double h);

/// Closed-form rho_k(h, b) for k=2 or 3 (a implied by the hyperbola for k=3).
/// Throws std::domain_error if h is at/beyond the stability limit.
double rho(int k, double h, double b);

/// Same, but returns +infinity instead of throwing (for tabulation loops).
double rho_or_inf(int k, double h, double b) noexcept;

/// Largest h_max such that |A(h)| <= 1 for all h in (0, h_max), via dense scan
/// (step 1e-3) plus bisection to 1e-6.
double stability_limit_dimensionless(const SplittingScheme& scheme);
double stability_limit_dimensionless(int k, double b);

/// Expected energy error sin^2(L Theta) rho for the unit harmonic oscillator
/// with (theta, p) ~ N(0, I). Throws std::domain_error outside stability.
double expected_energy_error_harmonic(const SplittingScheme& scheme, double h, int L);

/// One integrator step. If `cached_gradient` is non-null and sized, it must hold
/// grad U at state.theta and is updated to grad U at the returned position, so a
/// leg spends exactly k gradient evaluations per step. `gradient_evals`, when
/// non-null, is incremented per evaluation.
PhasePoint step(const SplittingScheme& scheme, const TargetModel& model, const PhasePoint& state,
                double h, Eigen::VectorXd* cached_gradient = nullptr,
                long* gradient_evals = nullptr);

struct LegResult {
  PhasePoint state;
  double delta_h = 0.0;
  bool divergent = false;
  long gradient_evals = 0;
};

/// L steps plus energy bookkeeping; |Delta H| above `divergence_cap` (or a
/// non-finite state) flags the leg divergent.
LegResult integrate_leg(const SplittingScheme& scheme, const TargetModel& model,
                        const PhasePoint& state, double h, int leg_steps,
                        double divergence_cap = 1e3);

}  // namespace saia
