#pragma once

#include <Eigen/Dense>

#include <vector>

namespace saia {

struct DiagnosticsReport {
  double ar = 0.0;
  Eigen::VectorXd ess;            // per dimension
  double min_ess = 0.0;
  Eigen::VectorXd mcse;           // per dimension
  double min_inv_mcse = 0.0;
  double max_psrf = 1.0;
  double theoretical_grad_evals = 0.0;  // k * Lbar
  long actual_grad_evals = 0;
  double min_ess_normalized = 0.0;      // min ESS / (k Lbar)
  double min_inv_mcse_normalized = 0.0;
};

/// ESS = N / (1 + 2 sum_t acf_t) per dimension, the autocorrelations summed
/// under Geyer's initial monotone positive sequence rule, capped at N.
/// Zero-variance dimensions report ESS = N.
Eigen::VectorXd ess(const Eigen::MatrixXd& chain);

/// sqrt(sample variance / ESS) per dimension.
Eigen::VectorXd mcse(const Eigen::MatrixXd& chain);

/// Gelman-Rubin / Brooks-Gelman potential scale reduction factor per dimension
/// over M >= 2 equally long chains, floored at 1.
Eigen::VectorXd psrf(const std::vector<Eigen::MatrixXd>& chains);
double max_psrf(const std::vector<Eigen::MatrixXd>& chains);

/// Autocovariances gamma_0..gamma_{max_lag}; direct summation for N <= 1e4 and
/// an FFT above, which agree to 1e-10.
std::vector<double> autocovariances(const Eigen::VectorXd& series, int max_lag);
std::vector<double> autocovariances_direct(const Eigen::VectorXd& series, int max_lag);
std::vector<double> autocovariances_fft(const Eigen::VectorXd& series, int max_lag);

}  // namespace saia
