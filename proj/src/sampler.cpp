#include "saia/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saia {

void HmcConfig::validate() const {
  if (n_tune < 1 || n_burnin < 1 || n_pr < 1 || n_check < 1)
    throw std::invalid_argument("HmcConfig: iteration counts must be >= 1");
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw std::invalid_argument("HmcConfig: alpha_target must lie in (0,1)");
  if (eps <= 0.0) throw std::invalid_argument("HmcConfig: eps must be positive");
  if (stages < 1 || stages > 3) throw std::invalid_argument("HmcConfig: stages must be 1, 2 or 3");
  if (tau <= 0.0) throw std::invalid_argument("HmcConfig: tau must be positive");
  if (randomization.grid_points < 1)
    throw std::invalid_argument("HmcConfig: randomization.grid_points must be >= 1");
  if (std::abs(randomization.dt_frac) >= 1.0)
    throw std::invalid_argument("HmcConfig: |randomization.dt_frac| must be < 1");
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream ^ std::uint64_t{0x9e3779b97f4a7c15ULL}};
  return Rng(seq);
}

IterationResult hmc_iteration(const TargetModel& model, const SplittingScheme& scheme,
                              PhasePoint& state, double h, int leg_steps, Rng& rng,
                              double divergence_cap) {
  std::normal_distribution<double> normal(0.0, 1.0);
  state.p.resize(model.dimension);
  for (int j = 0; j < model.dimension; ++j) state.p(j) = normal(rng);

  IterationResult result;
  const LegResult leg = integrate_leg(scheme, model, state, h, leg_steps, divergence_cap);
  result.gradient_evals = leg.gradient_evals;
  result.delta_h = leg.delta_h;
  result.divergent = leg.divergent;
  if (leg.divergent) return result;  // auto-reject

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (std::log(unif(rng)) < -leg.delta_h) {
    state.theta = leg.state.theta;
    result.accepted = true;
  }
  return result;
}

double tune_step_size(const TargetModel& model, const HmcConfig& config, Rng& rng,
                      PhasePoint* state) {
  config.validate();
  const SplittingScheme vv = SplittingScheme::verlet();
  PhasePoint local{Eigen::VectorXd::Zero(model.dimension), Eigen::VectorXd::Zero(model.dimension)};
  PhasePoint& chain = state ? *state : local;
  if (chain.theta.size() != model.dimension)
    chain.theta = Eigen::VectorXd::Zero(model.dimension);

  double dt = 1.0 / model.dimension;
  double increment = config.dt_tune_increment > 0 ? config.dt_tune_increment : dt / 10.0;
  long n = 0, n_acc = 0, n_total = 0;
  int last_direction = 0;
  while (n_total + config.n_check < config.n_tune) {
    for (int i = 0; i < config.n_check; ++i) {
      if (hmc_iteration(model, vv, chain, dt, 1, rng, config.divergence_cap).accepted) ++n_acc;
    }
    n += config.n_check;
    n_total += config.n_check;
    const double ar = static_cast<double>(n_acc) / static_cast<double>(n);
    int direction = 0;
    if (ar < config.alpha_target - config.eps) direction = -1;
    else if (ar > config.alpha_target + config.eps) direction = +1;
    if (direction != 0) {
      if (last_direction != 0 && direction != last_direction) increment *= 0.5;
      last_direction = direction;
      while (direction < 0 && dt - increment <= 0.0) increment *= 0.5;
      dt += direction * increment;
      n = 0;
      n_acc = 0;
    }
  }
  return dt;
}

namespace {

FrequencySummary power_iteration_summary(const TargetModel& model,
                                         const std::vector<Eigen::VectorXd>& anchors) {
  // omega_max averaged over a handful of burn-in states
  const std::size_t use = std::min<std::size_t>(anchors.size(), 10);
  const std::size_t stride = std::max<std::size_t>(1, anchors.size() / use);
  double acc = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < anchors.size(); i += stride) {
    acc += max_frequency_power_iteration(model, anchors[i]).omega_max;
    ++count;
  }
  FrequencySummary freq;
  freq.omega_max = acc / count;
  freq.sigma = 0.0;
  freq.source = FrequencySource::power_iteration_max_only;
  return freq;
}

FrequencySummary hessian_summary(const TargetModel& model,
                                 const std::vector<Eigen::VectorXd>& anchors) {
  std::vector<Eigen::MatrixXd> hessians;
  hessians.reserve(anchors.size());
  for (const auto& theta : anchors) {
    hessians.push_back(model.has_analytic_hessian ? model.hessian(theta)
                                                  : finite_difference_hessian(model, theta));
  }
  return frequencies_from_hessians(hessians);
}

}  // namespace

PipelineState burn_in(const TargetModel& model, double dt_vv, const HmcConfig& config, Rng& rng,
                      const PhasePoint* start) {
  config.validate();
  if (dt_vv <= 0) throw std::invalid_argument("burn_in: dt_vv must be positive");
  const SplittingScheme vv = SplittingScheme::verlet();
  PhasePoint chain{Eigen::VectorXd::Zero(model.dimension),
                   Eigen::VectorXd::Zero(model.dimension)};
  if (start && start->theta.size() == model.dimension) chain.theta = start->theta;

  const int thin = config.hessian_thin > 0 ? config.hessian_thin
                                           : (model.dimension <= 200 ? 1 : 10);
  std::vector<Eigen::VectorXd> anchors;
  long n_acc = 0;
  for (int i = 0; i < config.n_burnin; ++i) {
    if (hmc_iteration(model, vv, chain, dt_vv, 1, rng, config.divergence_cap).accepted) ++n_acc;
    if (i % thin == 0) anchors.push_back(chain.theta);
  }
  const double ar = static_cast<double>(n_acc) / config.n_burnin;
  if (n_acc == 0) throw std::runtime_error("burn_in: no accepted proposals, no statistics");

  PipelineState out;
  out.dt_vv = dt_vv;
  out.ar_burnin = ar;
  out.end_state = chain;

  if (config.i_omega) {
    out.freq = hessian_summary(model, anchors);
    out.fit = fitting_factors(ar, dt_vv, model.dimension, out.freq, true);
  } else {
    out.freq = power_iteration_summary(model, anchors);
    out.fit = fitting_factors(ar, dt_vv, model.dimension, out.freq, false);
    if (out.fit.s > 2.0) {  // anharmonic: the frequency-based factor is needed
      out.freq = hessian_summary(model, anchors);
      out.fit = fitting_factors(ar, dt_vv, model.dimension, out.freq, true);
    }
  }
  out.fit.mode = select_mode(config.i_omega, out.fit.s, out.freq.sigma, config.sigma_threshold);
  estimate_stability_limit(config.stages, out.fit, out.freq);
  return out;
}

ProductionPolicy ProductionPolicy::fixed(SplittingScheme s) {
  ProductionPolicy p;
  p.kind = Kind::fixed;
  p.fixed_scheme = std::move(s);
  return p;
}

ProductionPolicy ProductionPolicy::s_aia(const BOptTable& table) {
  ProductionPolicy p;
  p.kind = Kind::s_aia;
  p.table = &table;
  return p;
}

ProductionPolicy ProductionPolicy::aia(const BOptTable& table) {
  ProductionPolicy p;
  p.kind = Kind::aia;
  p.table = &table;
  if (table.stages != 2) throw std::invalid_argument("ProductionPolicy::aia: 2-stage table required");
  return p;
}

ChainRecord production(const TargetModel& model, const PipelineState& pipeline,
                       const ProductionPolicy& policy, const HmcConfig& config, Rng& rng,
                       double dt_center, int n_iterations) {
  config.validate();
  if (dt_center <= 0) throw std::invalid_argument("production: dt_center must be positive");
  if (policy.kind != ProductionPolicy::Kind::fixed && policy.table == nullptr)
    throw std::invalid_argument("production: adaptive policy needs a b_opt table");

  const double sl = pipeline.fit.stability_limit;
  const double offset = config.randomization.dt_frac * sl;
  const double dt_lo = std::max(1e-12, std::min(dt_center, dt_center + offset));
  const double dt_hi = std::max(dt_center, dt_center + offset);
  std::uniform_real_distribution<double> dt_dist(dt_lo, dt_hi);

  const double hbar_center = nondimensionalize(dt_center, pipeline.fit, pipeline.freq);
  const double lbar_raw = config.tau * model.dimension / hbar_center;
  const int lbar = std::max(1, static_cast<int>(std::lround(lbar_raw)));
  std::uniform_int_distribution<int> l_dist(1, 2 * lbar - 1);

  ChainRecord record;
  record.stages = policy.kind == ProductionPolicy::Kind::fixed ? policy.fixed_scheme.stages
                                                               : policy.table->stages;
  record.lbar = lbar;
  record.samples.resize(n_iterations, model.dimension);
  record.accepted.resize(n_iterations);
  record.delta_h.resize(n_iterations);
  record.used_dt.resize(n_iterations);
  record.used_l.resize(n_iterations);
  record.used_b.resize(n_iterations);

  PhasePoint chain = pipeline.end_state;
  if (chain.theta.size() != model.dimension)
    chain.theta = Eigen::VectorXd::Zero(model.dimension);

  for (int i = 0; i < n_iterations; ++i) {
    const double dt = dt_hi > dt_lo ? dt_dist(rng) : dt_center;
    const int leg = config.randomization.per_iteration_L ? l_dist(rng) : lbar;

    SplittingScheme scheme;
    switch (policy.kind) {
      case ProductionPolicy::Kind::fixed:
        scheme = policy.fixed_scheme;
        break;
      case ProductionPolicy::Kind::s_aia: {
        const double hbar = nondimensionalize(dt, pipeline.fit, pipeline.freq);
        const BOptLookup look = lookup_bopt(*policy.table, hbar);
        if (look.clamped) ++record.clamped_lookups;
        scheme = policy.table->stages == 2
                     ? SplittingScheme::two_stage(look.b, "sAIA2")
                     : SplittingScheme::three_stage_ab(look.b, look.a, "sAIA3");
        break;
      }
      case ProductionPolicy::Kind::aia: {
        const double hbar = std::sqrt(2.0) * pipeline.freq.omega_max * dt;
        const BOptLookup look = lookup_bopt(*policy.table, hbar);
        if (look.clamped) ++record.clamped_lookups;
        scheme = SplittingScheme::two_stage(look.b, "AIA");
        break;
      }
    }

    const IterationResult it = hmc_iteration(model, scheme, chain, dt, leg, rng,
                                             config.divergence_cap);
    record.samples.row(i) = chain.theta;
    record.accepted[i] = it.accepted ? 1 : 0;
    record.delta_h[i] = it.delta_h;
    record.used_dt[i] = dt;
    record.used_l[i] = leg;
    record.used_b[i] = scheme.stages == 1 ? 0.0 : scheme.b;
    record.gradient_evals += it.gradient_evals;
    if (it.divergent) ++record.divergences;
  }
  return record;
}

double acceptance_rate(const ChainRecord& record) {
  if (record.accepted.empty()) throw std::invalid_argument("acceptance_rate: empty record");
  long acc = 0;
  for (const char a : record.accepted) acc += a;
  return static_cast<double>(acc) / static_cast<double>(record.accepted.size());
}

DiagnosticsReport efficiency_summary(const ChainRecord& record) {
  DiagnosticsReport report;
  report.ar = acceptance_rate(record);
  report.ess = ess(record.samples);
  report.mcse = mcse(record.samples);
  report.min_ess = report.ess.minCoeff();
  report.min_inv_mcse = 1.0 / report.mcse.maxCoeff();
  report.theoretical_grad_evals = record.stages * record.lbar;
  report.actual_grad_evals = record.gradient_evals;
  report.min_ess_normalized = report.min_ess / report.theoretical_grad_evals;
  report.min_inv_mcse_normalized = report.min_inv_mcse / report.theoretical_grad_evals;
  return report;
}

PipelineResult run_pipeline(const TargetModel& model, const HmcConfig& config,
                            const BOptTable* table) {
  config.validate();
  if (config.stages != 2 && config.stages != 3)
    throw std::invalid_argument("run_pipeline: s-AIA needs 2 or 3 stages");
  Rng rng = make_rng(config.seed, 0);
  PhasePoint chain{Eigen::VectorXd::Zero(model.dimension),
                   Eigen::VectorXd::Zero(model.dimension)};
  const double dt_vv = tune_step_size(model, config, rng, &chain);

  PipelineResult result;
  result.state = burn_in(model, dt_vv, config, rng, &chain);

  BOptTable local_table;
  if (table == nullptr) {
    local_table = tabulate_bopt(config.stages == 2 ? 2 : 3, config.bopt_grid);
    table = &local_table;
  }
  if (table->stages != config.stages)
    throw std::invalid_argument("run_pipeline: table stage count does not match config");

  const double dt_center = config.production_dt > 0 ? config.production_dt
                                                    : result.state.fit.stability_limit / 2.0;
  result.record = production(model, result.state, ProductionPolicy::s_aia(*table), config, rng,
                             dt_center, config.n_pr);
  result.report = efficiency_summary(result.record);
  return result;
}

}  // namespace saia
