#include "saia/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace saia {

namespace {

double log1p_exp(double z) {
  // log(1 + exp(z)) without overflow
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

TargetModel GaussianModelSpec::to_model() const {
  TargetModel m;
  m.dimension = static_cast<int>(precision.rows());
  const Eigen::MatrixXd prec = precision;
  const Eigen::VectorXd mu = mean;
  m.potential = [prec, mu](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd d = theta - mu;
    return 0.5 * d.dot(prec * d);
  };
  m.gradient = [prec, mu](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    return prec * (theta - mu);
  };
  m.hessian = [prec](const Eigen::VectorXd&) { return prec; };
  m.has_analytic_hessian = true;
  return m;
}

GaussianModelSpec make_gaussian_wishart(int dimension, std::uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("make_gaussian_wishart: dimension must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 5; ++attempt) {
    // Bartlett decomposition with identity scale: W = A A', A lower triangular,
    // A_ii = sqrt(chi2(D - i)), A_ij ~ N(0,1) below the diagonal.
    Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(dimension, dimension);
    for (int i = 0; i < dimension; ++i) {
      double chi2 = 0.0;
      for (int m = 0; m < dimension - i; ++m) {
        const double g = normal(rng);
        chi2 += g * g;
      }
      bart(i, i) = std::sqrt(chi2);
      for (int j = 0; j < i; ++j) bart(i, j) = normal(rng);
    }
    GaussianModelSpec spec;
    spec.precision = bart * bart.transpose();
    spec.precision = 0.5 * (spec.precision + spec.precision.transpose()).eval();
    spec.mean = Eigen::VectorXd::Zero(dimension);
    Eigen::LLT<Eigen::MatrixXd> llt(spec.precision);
    if (llt.info() == Eigen::Success) return spec;
  }
  throw std::runtime_error("make_gaussian_wishart: sampled matrix not positive-definite");
}

GaussianModelSpec make_gaussian_diag_mixture(int d1, int d2, double loc1, double scale1,
                                             double loc2, double scale2, std::uint64_t seed) {
  if (d1 < 0 || d2 < 0 || d1 + d2 < 1)
    throw std::invalid_argument("make_gaussian_diag_mixture: need d1 + d2 >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_positive = [&](double loc, double scale) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double v = loc + scale * normal(rng);
      if (v > 0) return v;
    }
    throw std::runtime_error("make_gaussian_diag_mixture: non-positive draw persisted");
  };
  const int dimension = d1 + d2;
  Eigen::VectorXd diag(dimension);
  for (int i = 0; i < d1; ++i) diag(i) = draw_positive(loc1, scale1);
  for (int i = d1; i < dimension; ++i) diag(i) = draw_positive(loc2, scale2);
  GaussianModelSpec spec;
  spec.precision = diag.asDiagonal();
  spec.mean = Eigen::VectorXd::Zero(dimension);
  return spec;
}

BlrDataset load_dataset(const std::string& path, CsvLabelColumn label_column,
                        bool standardize, bool add_intercept, double prior_precision) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
        fields.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error("load_dataset: parse error at row " + std::to_string(line_no) +
                                 ", column " + std::to_string(col));
      }
    }
    if (!rows.empty() && fields.size() != rows.front().size())
      throw std::runtime_error("load_dataset: inconsistent row width at row " +
                               std::to_string(line_no));
    rows.push_back(std::move(fields));
  }
  if (rows.empty() || rows.front().size() < 2)
    throw std::runtime_error("load_dataset: need at least one row with a feature and a label");

  const int n_rows = static_cast<int>(rows.size());
  const int n_feat = static_cast<int>(rows.front().size()) - 1;
  const int label_idx = (label_column == CsvLabelColumn::last) ? n_feat : 0;
  const int feat_off = (label_column == CsvLabelColumn::last) ? 0 : 1;

  Eigen::MatrixXd features(n_rows, n_feat);
  Eigen::VectorXd labels(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    labels(i) = rows[i][label_idx] > 0 ? 1.0 : -1.0;
    for (int j = 0; j < n_feat; ++j) features(i, j) = rows[i][feat_off + j];
  }

  if (standardize && n_rows > 1) {
    for (int j = 0; j < n_feat; ++j) {
      const double mean = features.col(j).mean();
      features.col(j).array() -= mean;
      const double var = features.col(j).squaredNorm() / (n_rows - 1);
      if (var > 0) features.col(j) /= std::sqrt(var);
    }
  }

  BlrDataset data;
  if (add_intercept) {
    data.X.resize(n_rows, n_feat + 1);
    data.X.col(0).setOnes();
    data.X.rightCols(n_feat) = features;
  } else {
    data.X = std::move(features);
  }
  data.y = std::move(labels);
  data.prior_precision = prior_precision;
  return data;
}

TargetModel make_blr_model(const BlrDataset& data) {
  const Eigen::MatrixXd X = data.X;
  const Eigen::VectorXd y = data.y;
  const double c = data.prior_precision;
  TargetModel m;
  m.dimension = data.dimension();
  m.potential = [X, y, c](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd t = y.cwiseProduct(X * theta);
    double u = 0.5 * c * theta.squaredNorm();
    for (Eigen::Index i = 0; i < t.size(); ++i) u += log1p_exp(-t(i));
    return u;
  };
  m.gradient = [X, y, c](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    const Eigen::VectorXd t = y.cwiseProduct(X * theta);
    Eigen::VectorXd w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) w(i) = -y(i) * logistic(-t(i));
    return X.transpose() * w + c * theta;
  };
  m.hessian = [X, y, c](const Eigen::VectorXd& theta) -> Eigen::MatrixXd {
    const Eigen::VectorXd t = y.cwiseProduct(X * theta);
    Eigen::VectorXd w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double s = logistic(t(i));
      w(i) = s * (1.0 - s);
    }
    Eigen::MatrixXd h = X.transpose() * w.asDiagonal() * X;
    h.diagonal().array() += c;
    return h;
  };
  m.has_analytic_hessian = true;
  return m;
}

double FrequencySummary::sum_omega6() const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < omegas.size(); ++j) s += std::pow(omegas(j), 6);
  return s;
}

FrequencySummary frequencies_from_hessians(const std::vector<Eigen::MatrixXd>& hessian_samples) {
  if (hessian_samples.empty())
    throw std::invalid_argument("frequencies_from_hessians: no samples");
  const Eigen::Index dim = hessian_samples.front().rows();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& h : hessian_samples) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("frequencies_from_hessians: eigendecomposition failed");
    // eigenvalues come out ascending; rank-matched averaging
    acc += solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  }
  FrequencySummary f;
  f.omegas = acc / static_cast<double>(hessian_samples.size());
  f.omega_max = f.omegas(dim - 1);
  const double mean = f.omegas.mean();
  f.sigma = std::sqrt((f.omegas.array() - mean).square().mean());
  f.source = FrequencySource::averaged_hessian_eigs;
  return f;
}

PowerIterationResult max_frequency_power_iteration(const TargetModel& model,
                                                   const Eigen::VectorXd& anchor,
                                                   double tol, int max_iters) {
  const int dim = model.dimension;
  const double fd_step = 1e-5 * (1.0 + anchor.norm());
  auto hessian_vector = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return (model.gradient(anchor + fd_step * v) - model.gradient(anchor - fd_step * v)) /
           (2.0 * fd_step);
  };
  Eigen::VectorXd v = Eigen::VectorXd::Ones(dim).normalized();
  // deterministic perturbation so v is not orthogonal to the dominant eigenvector
  for (int j = 0; j < dim; ++j) v(j) += 1e-3 * std::sin(static_cast<double>(j + 1));
  v.normalize();
  PowerIterationResult result;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = hessian_vector(v);
    const double norm = w.norm();
    if (norm == 0.0) {
      result.omega_max = 0.0;
      result.converged = true;
      result.iterations = it + 1;
      return result;
    }
    const double lambda_new = v.dot(w);
    v = w / norm;
    result.iterations = it + 1;
    if (it > 0 && std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new)) {
      result.converged = true;
      lambda = lambda_new;
      break;
    }
    lambda = lambda_new;
  }
  result.omega_max = std::sqrt(std::abs(lambda));
  return result;
}

Eigen::VectorXd finite_difference_gradient(const TargetModel& model, const Eigen::VectorXd& theta) {
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double step = 1e-6 * (1.0 + std::abs(theta(j)));
    Eigen::VectorXd up = theta, dn = theta;
    up(j) += step;
    dn(j) -= step;
    g(j) = (model.potential(up) - model.potential(dn)) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd finite_difference_hessian(const TargetModel& model, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd h(theta.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double step = 1e-5 * (1.0 + std::abs(theta(j)));
    Eigen::VectorXd up = theta, dn = theta;
    up(j) += step;
    dn(j) -= step;
    h.col(j) = (model.gradient(up) - model.gradient(dn)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose()).eval();
}

}  // namespace saia
