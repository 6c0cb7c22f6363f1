#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace saia {

/// A differentiable log-density target. `potential` is U(theta) = -log pi(theta) + const.
/// Evaluations must be pure functions of theta (safe for concurrent chains).
struct TargetModel {
  int dimension = 0;
  std::function<double(const Eigen::VectorXd&)> potential;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;  // may be empty
  bool has_analytic_hessian = false;
};

/// Multivariate Gaussian N(mean, precision^-1) given by its precision matrix.
struct GaussianModelSpec {
  Eigen::MatrixXd precision;
  Eigen::VectorXd mean;

  TargetModel to_model() const;
};

/// Precision drawn from Wishart(D degrees of freedom, identity scale) via the
/// Bartlett decomposition. Deterministic for a fixed seed.
GaussianModelSpec make_gaussian_wishart(int dimension, std::uint64_t seed);

/// Diagonal precision with d1 entries ~ N(loc1, scale1^2) and d2 ~ N(loc2, scale2^2),
/// redrawn until strictly positive.
GaussianModelSpec make_gaussian_diag_mixture(int d1, int d2, double loc1, double scale1,
                                             double loc2, double scale2, std::uint64_t seed);

struct BlrDataset {
  Eigen::MatrixXd X;       // K x D design matrix
  Eigen::VectorXd y;       // labels in {-1, +1}
  double prior_precision = 1.0;

  int observations() const { return static_cast<int>(X.rows()); }
  int dimension() const { return static_cast<int>(X.cols()); }
};

enum class CsvLabelColumn { last, first };

/// Plain CSV, no header. Labels are mapped to {-1,+1} (0 or -1 -> -1).
/// Throws std::runtime_error with row/column location on parse failure.
BlrDataset load_dataset(const std::string& path, CsvLabelColumn label_column,
                        bool standardize, bool add_intercept, double prior_precision = 1.0);

/// Bayesian logistic regression posterior with Gaussian prior:
///   U(theta) = sum_i log(1 + exp(-y_i x_i' theta)) + (c/2) theta' theta.
TargetModel make_blr_model(const BlrDataset& data);

enum class FrequencySource { averaged_hessian_eigs, power_iteration_max_only };

struct FrequencySummary {
  Eigen::VectorXd omegas;  // sorted ascending; empty in power-iteration mode
  double omega_max = 0.0;
  double sigma = 0.0;      // standard deviation of the omega_j
  FrequencySource source = FrequencySource::averaged_hessian_eigs;

  double sum_omega6() const;
};

/// omega_j = mean over samples of sqrt(max(lambda_j, 0)) matched by sorted rank.
FrequencySummary frequencies_from_hessians(const std::vector<Eigen::MatrixXd>& hessian_samples);

struct PowerIterationResult {
  double omega_max = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// sqrt of the dominant Hessian eigenvalue magnitude at `anchor`, using
/// Hessian-vector products approximated by central differences of the gradient.
PowerIterationResult max_frequency_power_iteration(const TargetModel& model,
                                                   const Eigen::VectorXd& anchor,
                                                   double tol = 1e-6, int max_iters = 500);

// Finite-difference helpers, also used as test oracles.
Eigen::VectorXd finite_difference_gradient(const TargetModel& model, const Eigen::VectorXd& theta);
Eigen::MatrixXd finite_difference_hessian(const TargetModel& model, const Eigen::VectorXd& theta);

}  // namespace saia
