#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "saia/model.hpp"

using namespace saia;

namespace {

// Synthetic binary-classification CSV, label in the requested column.
std::string write_csv(int rows, int cols, CsvLabelColumn where, unsigned seed) {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / ("saia_model_" + std::to_string(seed) + ".csv");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::ofstream out(path);
  for (int i = 0; i < rows; ++i) {
    const int label = (normal(rng) > 0.0) ? 1 : 0;
    std::vector<double> fields(cols);
    for (auto& f : fields) f = normal(rng);
    std::string line;
    if (where == CsvLabelColumn::first) line = std::to_string(label);
    for (int j = 0; j < cols; ++j) {
      if (!line.empty()) line += ',';
      line += std::to_string(fields[j]);
    }
    if (where == CsvLabelColumn::last) line += ',' + std::to_string(label);
    out << line << '\n';
  }
  return path.string();
}

}  // namespace

TEST_CASE("gaussian model: potential, gradient, hessian are the quadratic form") {
  Eigen::MatrixXd prec(2, 2);
  prec << 3.0, 1.0, 1.0, 2.0;
  GaussianModelSpec spec{prec, Eigen::Vector2d(1.0, -2.0)};
  const auto m = spec.to_model();
  CHECK(m.dimension == 2);
  CHECK(m.has_analytic_hessian);
  const Eigen::Vector2d t(0.5, 0.5);
  const Eigen::Vector2d c = t - spec.mean;
  CHECK(m.potential(t) == doctest::Approx(0.5 * c.dot(prec * c)).epsilon(1e-14));
  CHECK((m.gradient(t) - prec * c).norm() < 1e-14);
  CHECK((m.hessian(t) - prec).norm() < 1e-14);
  CHECK(m.potential(spec.mean) == doctest::Approx(0.0));
  // gradient matches finite differences
  CHECK((m.gradient(t) - finite_difference_gradient(m, t)).norm() < 1e-6);
}

TEST_CASE("wishart precision: symmetric positive definite and deterministic") {
  for (int d : {1, 5, 100}) {
    const auto spec = make_gaussian_wishart(d, 123);
    CHECK(spec.precision.rows() == d);
    CHECK((spec.precision - spec.precision.transpose()).norm() < 1e-12);
    Eigen::LLT<Eigen::MatrixXd> llt(spec.precision);
    CHECK(llt.info() == Eigen::Success);
    const auto again = make_gaussian_wishart(d, 123);
    CHECK((spec.precision - again.precision).norm() == 0.0);
    const auto other = make_gaussian_wishart(d, 124);
    CHECK((spec.precision - other.precision).norm() > 0.0);
  }
}

TEST_CASE("wishart D=1: precision is a squared standard normal") {
  // Bartlett with identity scale and 1 dof: W = g^2, g ~ N(0,1).
  // Check the first two moments over many seeds: E[W]=1, E[W^2]=3.
  double m1 = 0.0, m2 = 0.0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    const double w = make_gaussian_wishart(1, 1000 + s).precision(0, 0);
    CHECK(w > 0.0);
    m1 += w;
    m2 += w * w;
  }
  CHECK(m1 / n == doctest::Approx(1.0).epsilon(0.08));
  CHECK(m2 / n == doctest::Approx(3.0).epsilon(0.25));
}

TEST_CASE("wishart trace oracle: E[trace] = D^2") {
  // trace(W) with identity scale and D dof has mean D*D.
  const int d = 6;
  double acc = 0.0;
  const int n = 800;
  for (int s = 0; s < n; ++s) acc += make_gaussian_wishart(d, 50000 + s).precision.trace();
  CHECK(acc / n == doctest::Approx(double(d) * d).epsilon(0.05));
}

TEST_CASE("diagonal mixture: block structure and positivity") {
  const auto spec = make_gaussian_diag_mixture(600, 400, 1000.0, 10.0, 1.0, 0.1, 7);
  CHECK(spec.precision.rows() == 1000);
  // off-diagonal must vanish
  CHECK((spec.precision - spec.precision.diagonal().asDiagonal().toDenseMatrix()).norm() == 0.0);
  const auto diag = spec.precision.diagonal();
  CHECK(diag.minCoeff() > 0.0);
  double mean1 = diag.head(600).mean();
  double mean2 = diag.tail(400).mean();
  CHECK(mean1 == doctest::Approx(1000.0).epsilon(0.01));
  CHECK(mean2 == doctest::Approx(1.0).epsilon(0.05));
  // frequencies of a diagonal Gaussian are sqrt of the diagonal
  const auto freq = frequencies_from_hessians({spec.precision});
  CHECK(freq.omega_max == doctest::Approx(std::sqrt(diag.maxCoeff())).epsilon(1e-10));
}

TEST_CASE("csv loading: both label columns, standardization, intercept") {
  for (auto where : {CsvLabelColumn::last, CsvLabelColumn::first}) {
    const auto path = write_csv(200, 4, where, where == CsvLabelColumn::last ? 1 : 2);
    const auto data = load_dataset(path, where, true, true, 2.5);
    CHECK(data.observations() == 200);
    CHECK(data.dimension() == 5);  // 4 features + intercept
    CHECK(data.prior_precision == doctest::Approx(2.5));
    for (int i = 0; i < 200; ++i) CHECK(std::abs(std::abs(data.y(i)) - 1.0) < 1e-15);
    // intercept first, all ones
    CHECK((data.X.col(0).array() - 1.0).abs().maxCoeff() == 0.0);
    for (int j = 1; j < 5; ++j) {
      CHECK(data.X.col(j).mean() == doctest::Approx(0.0).epsilon(1e-10));
      const double var = data.X.col(j).squaredNorm() / (200 - 1);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
    }
    std::filesystem::remove(path);
  }
}

TEST_CASE("csv loading: musk-like shape and raw mode") {
  const auto path = write_csv(476, 166, CsvLabelColumn::last, 3);
  const auto data = load_dataset(path, CsvLabelColumn::last, true, true);
  CHECK(data.observations() == 476);
  CHECK(data.dimension() == 167);
  const auto raw = load_dataset(path, CsvLabelColumn::last, false, false);
  CHECK(raw.dimension() == 166);
  std::filesystem::remove(path);
}

TEST_CASE("csv loading: parse errors carry the location") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "saia_bad.csv";
  {
    std::ofstream out(path);
    out << "1.0,2.0,1\n1.0,oops,0\n";
  }
  try {
    load_dataset(path.string(), CsvLabelColumn::last, false, false);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("2") != std::string::npos);  // row 2
  }
  fs::remove(path);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", CsvLabelColumn::last, false, false),
                  std::runtime_error);
}

TEST_CASE("blr model: gradient and hessian match finite differences") {
  const auto path = write_csv(60, 3, CsvLabelColumn::last, 5);
  const auto data = load_dataset(path, CsvLabelColumn::last, true, true, 1.0);
  std::filesystem::remove(path);
  const auto m = make_blr_model(data);
  CHECK(m.dimension == 4);
  CHECK(m.has_analytic_hessian);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::VectorXd t(4);
    for (int j = 0; j < 4; ++j) t(j) = normal(rng);
    CHECK((m.gradient(t) - finite_difference_gradient(m, t)).norm() < 1e-5);
    CHECK((m.hessian(t) - finite_difference_hessian(m, t)).norm() < 1e-4);
  }
  // potential is finite even for extreme linear predictors (overflow safety)
  Eigen::VectorXd extreme = Eigen::VectorXd::Constant(4, 400.0);
  CHECK(std::isfinite(m.potential(extreme)));
  CHECK(std::isfinite(m.potential(-extreme)));
  CHECK(m.gradient(extreme).allFinite());
}

TEST_CASE("blr potential: hand-computed single observation") {
  BlrDataset data;
  data.X = Eigen::MatrixXd::Ones(1, 1);
  data.y = Eigen::VectorXd::Constant(1, 1.0);
  data.prior_precision = 2.0;
  const auto m = make_blr_model(data);
  Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 0.7);
  CHECK(m.potential(t) ==
        doctest::Approx(std::log1p(std::exp(-0.7)) + 0.5 * 2.0 * 0.49).epsilon(1e-14));
}

TEST_CASE("frequencies: exact diagonal case and rank matching") {
  Eigen::MatrixXd h1 = Eigen::Vector3d(1.0, 4.0, 9.0).asDiagonal();
  Eigen::MatrixXd h2 = Eigen::Vector3d(9.0, 1.0, 4.0).asDiagonal();
  const auto freq = frequencies_from_hessians({h1, h2});
  // rank-matched: both samples sort to sqrt({1,4,9}) = {1,2,3}
  CHECK(freq.omegas.size() == 3);
  CHECK(freq.omegas(0) == doctest::Approx(1.0));
  CHECK(freq.omegas(1) == doctest::Approx(2.0));
  CHECK(freq.omegas(2) == doctest::Approx(3.0));
  CHECK(freq.omega_max == doctest::Approx(3.0));
  // population std of {1,2,3}
  CHECK(freq.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(freq.sum_omega6() == doctest::Approx(1.0 + 64.0 + 729.0).epsilon(1e-12));
  // negative curvature clips to zero
  Eigen::MatrixXd neg = Eigen::Vector3d(-4.0, 1.0, 16.0).asDiagonal();
  const auto clipped = frequencies_from_hessians({neg});
  CHECK(clipped.omegas(0) == doctest::Approx(0.0));
  CHECK(clipped.omega_max == doctest::Approx(4.0));
}

TEST_CASE("power iteration agrees with the dense eigensolver") {
  const auto spec = make_gaussian_wishart(20, 99);
  const auto m = spec.to_model();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.precision);
  const double expected = std::sqrt(eig.eigenvalues().maxCoeff());
  const auto r = max_frequency_power_iteration(m, Eigen::VectorXd::Zero(20));
  CHECK(r.converged);
  CHECK(r.omega_max == doctest::Approx(expected).epsilon(1e-3));
}
