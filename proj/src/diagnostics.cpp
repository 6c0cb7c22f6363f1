#include "saia/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace saia {

namespace {

// In-place iterative radix-2 FFT; inverse when sign = +1.
void fft(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (sign > 0)
    for (auto& x : a) x /= static_cast<double>(n);
}

double sample_variance(const Eigen::VectorXd& x) {
  if (x.size() < 2) return 0.0;
  const double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

}  // namespace

std::vector<double> autocovariances_direct(const Eigen::VectorXd& series, int max_lag) {
  const Eigen::Index n = series.size();
  const double mean = series.mean();
  const Eigen::ArrayXd centered = series.array() - mean;
  std::vector<double> gamma(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int t = 0; t <= max_lag; ++t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + t < n; ++i) s += centered(i) * centered(i + t);
    gamma[t] = s / static_cast<double>(n);
  }
  return gamma;
}

std::vector<double> autocovariances_fft(const Eigen::VectorXd& series, int max_lag) {
  const Eigen::Index n = series.size();
  const double mean = series.mean();
  std::size_t m = 1;
  while (m < 2 * static_cast<std::size_t>(n)) m <<= 1;
  std::vector<std::complex<double>> buf(m, {0.0, 0.0});
  for (Eigen::Index i = 0; i < n; ++i) buf[i] = series(i) - mean;
  fft(buf, -1);
  for (auto& x : buf) x = x * std::conj(x);
  fft(buf, +1);
  std::vector<double> gamma(static_cast<std::size_t>(max_lag) + 1);
  for (int t = 0; t <= max_lag; ++t) gamma[t] = buf[t].real() / static_cast<double>(n);
  return gamma;
}

std::vector<double> autocovariances(const Eigen::VectorXd& series, int max_lag) {
  return series.size() <= 10000 ? autocovariances_direct(series, max_lag)
                                : autocovariances_fft(series, max_lag);
}

Eigen::VectorXd ess(const Eigen::MatrixXd& chain) {
  const Eigen::Index n = chain.rows();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 samples");
  const double nd = static_cast<double>(n);
  Eigen::VectorXd out(chain.cols());
  for (Eigen::Index d = 0; d < chain.cols(); ++d) {
    const int max_lag = static_cast<int>(n - 2);
    const std::vector<double> gamma = autocovariances(chain.col(d), max_lag);
    const double mean = chain.col(d).mean();
    if (gamma[0] <= 1e-24 * (1.0 + mean * mean)) {
      out(d) = nd;  // constant chain (variance at round-off level)
      continue;
    }
    // Geyer initial monotone positive sequence over paired autocorrelations
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (int m = 0; 2 * m + 1 <= max_lag; ++m) {
      double pair = (gamma[2 * m] + gamma[2 * m + 1]) / gamma[0];
      if (pair <= 0.0) break;
      pair = std::min(pair, prev_pair);
      tau += 2.0 * pair;
      prev_pair = pair;
    }
    tau = std::max(tau, nd > 0 ? 1.0 / nd : 1.0);
    out(d) = std::min(nd, nd / tau);
  }
  return out;
}

Eigen::VectorXd mcse(const Eigen::MatrixXd& chain) {
  const Eigen::VectorXd effective = ess(chain);
  Eigen::VectorXd out(chain.cols());
  for (Eigen::Index d = 0; d < chain.cols(); ++d) {
    out(d) = std::sqrt(sample_variance(chain.col(d)) / effective(d));
  }
  return out;
}

Eigen::VectorXd psrf(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("psrf: need at least 2 chains");
  const Eigen::Index n = chains.front().rows();
  const Eigen::Index dims = chains.front().cols();
  if (n < 10) throw std::invalid_argument("psrf: need at least 10 samples per chain");
  for (const auto& c : chains)
    if (c.rows() != n || c.cols() != dims)
      throw std::invalid_argument("psrf: chains must have equal shape");
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  Eigen::VectorXd out(dims);
  for (Eigen::Index d = 0; d < dims; ++d) {
    double w = 0.0, grand = 0.0;
    std::vector<double> means(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      means[c] = chains[c].col(d).mean();
      grand += means[c];
      w += sample_variance(chains[c].col(d));
    }
    w /= m;
    grand /= m;
    double b = 0.0;  // between-chain variance times n
    for (const double mu : means) b += (mu - grand) * (mu - grand);
    b *= nd / (m - 1.0);
    if (w <= 0.0) {
      out(d) = 1.0;  // identical constant chains
      continue;
    }
    const double v_hat = (nd - 1.0) / nd * w + (1.0 + 1.0 / m) * b / nd;
    out(d) = std::sqrt(std::max(1.0, v_hat / w));
  }
  return out;
}

double max_psrf(const std::vector<Eigen::MatrixXd>& chains) {
  return psrf(chains).maxCoeff();
}

}  // namespace saia
