#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saia/adapt.hpp"
#include "saia/diagnostics.hpp"
#include "saia/integrator.hpp"
#include "saia/model.hpp"

namespace saia {

using Rng = std::mt19937_64;

/// Uniform step-size randomization around each grid step size: the interval is
/// [dt + dt_frac*SL, dt] for dt_frac < 0 and [dt, dt + dt_frac*SL] otherwise.
struct StepRandomization {
  int grid_points = 20;
  double dt_frac = -1.0 / 20.0;  // signed fraction of Delta t_SL
  bool per_iteration_L = true;   // L ~ U{1, ..., 2 Lbar - 1}
};

struct HmcConfig {
  int n_tune = 2000;
  int n_burnin = 2000;
  int n_pr = 10000;
  int n_check = 100;             // AR window during tuning
  double alpha_target = 0.92;
  double eps = 0.01;             // AR tolerance band
  double dt_tune_increment = 0;  // 0 -> dt_initial / 10
  std::uint64_t seed = 1;
  double tau = 1.0;              // trajectory-length constant: Lbar * hbar = tau * D
  int stages = 3;                // k for production
  bool i_omega = false;          // force the frequency-based fitting factor
  StepRandomization randomization;
  double divergence_cap = 1e3;
  int hessian_thin = 0;          // 0 -> every state for D <= 200, every 10th above
  double sigma_threshold = 1.0;  // sigma-corrected nondimensionalization above this
  double production_dt = 0;      // dimensional step size center; 0 -> SL/2
  int bopt_grid = 2000;

  void validate() const;  // throws std::invalid_argument
};

struct ChainRecord {
  Eigen::MatrixXd samples;       // N x D
  std::vector<char> accepted;
  std::vector<double> delta_h;
  std::vector<double> used_dt;
  std::vector<int> used_l;
  std::vector<double> used_b;
  long gradient_evals = 0;
  int stages = 1;
  double lbar = 1.0;             // theoretical average number of integration steps
  int clamped_lookups = 0;       // hbar beyond the b_opt table
  int divergences = 0;
};

struct PipelineState {
  double dt_vv = 0.0;
  double ar_burnin = 0.0;
  FrequencySummary freq;
  FittingResult fit;
  PhasePoint end_state;
};

struct IterationResult {
  bool accepted = false;
  double delta_h = 0.0;
  bool divergent = false;
  long gradient_evals = 0;
};

/// One HMC iteration: fresh momentum p ~ N(0, I), L-step leg, Metropolis test.
/// The position in `state` is updated on acceptance; momentum is discarded.
IterationResult hmc_iteration(const TargetModel& model, const SplittingScheme& scheme,
                              PhasePoint& state, double h, int leg_steps, Rng& rng,
                              double divergence_cap = 1e3);

/// Step-size tuning routine: windows of n_check Verlet L=1 iterations, the step
/// size nudged by +-dt until AR lands in [alpha_target - eps, alpha_target + eps].
/// Starts from dt = 1/D. If `state` is given it carries the chain across stages.
double tune_step_size(const TargetModel& model, const HmcConfig& config, Rng& rng,
                      PhasePoint* state = nullptr);

/// N_burnin Verlet L=1 iterations at dt_vv; computes AR, the frequency summary
/// (full Hessian eigensystems only on the branches that need them) and the
/// fitting factors, mode and stability limit for config.stages.
PipelineState burn_in(const TargetModel& model, double dt_vv, const HmcConfig& config, Rng& rng,
                      const PhasePoint* start = nullptr);

/// Integrator selection policy for the production stage.
struct ProductionPolicy {
  enum class Kind { fixed, s_aia, aia } kind = Kind::s_aia;
  SplittingScheme fixed_scheme;     // kind == fixed
  const BOptTable* table = nullptr; // kind == s_aia or aia
  static ProductionPolicy fixed(SplittingScheme s);
  static ProductionPolicy s_aia(const BOptTable& table);
  /// Original fixed-frequency AIA: hbar = sqrt(2) omega_max dt, 2-stage table.
  static ProductionPolicy aia(const BOptTable& table);
};

/// Production chain at dimensional center step size dt_center: per iteration the
/// step size is drawn from the randomization interval, L from U{1,...,2Lbar-1},
/// and the scheme resolved through the policy.
ChainRecord production(const TargetModel& model, const PipelineState& pipeline,
                       const ProductionPolicy& policy, const HmcConfig& config, Rng& rng,
                       double dt_center, int n_iterations);

struct PipelineResult {
  PipelineState state;
  ChainRecord record;
  DiagnosticsReport report;
};

/// Full tuning -> burn-in -> production pipeline with s-AIA coefficients.
/// Deterministic for a fixed seed. A pre-tabulated table may be supplied.
PipelineResult run_pipeline(const TargetModel& model, const HmcConfig& config,
                            const BOptTable* table = nullptr);

/// AR, ESS/MCSE/PSRF-free summary of a single chain record, normalized by k*Lbar.
DiagnosticsReport efficiency_summary(const ChainRecord& record);

double acceptance_rate(const ChainRecord& record);

/// Derives an independent RNG stream from a master seed (chain / repetition index).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace saia
