#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfa/mixture.hpp"
#include "msfa/rng.hpp"

#include <cmath>
#include <numbers>

using namespace msfa;

namespace {

// Log density through an explicit inverse and determinant.
double direct_log_density(const GaussianComponent& c, const RowVector& x) {
  const auto J = static_cast<double>(c.mean.size());
  const Vector d = x.transpose() - c.mean;
  const double quad = d.dot(c.covariance.inverse() * d);
  return std::log(c.weight) - 0.5 * (J * std::log(2.0 * std::numbers::pi) +
                                     std::log(c.covariance.determinant()) + quad);
}

Matrix two_clusters(std::uint64_t seed, std::size_t per_side = 5000) {
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(2 * per_side), 1);
  for (std::size_t k = 0; k < per_side; ++k) {
    x(static_cast<Eigen::Index>(k), 0) = -5.0 + rng.normal();
    x(static_cast<Eigen::Index>(per_side + k), 0) = 5.0 + rng.normal();
  }
  return x;
}

Matrix random_mixture_sample(Rng& rng, std::size_t K, std::size_t J, std::size_t G) {
  std::vector<Vector> centers;
  std::vector<Matrix> mixing;
  for (std::size_t g = 0; g < G; ++g) {
    Vector c(static_cast<Eigen::Index>(J));
    for (auto& v : c) v = 6.0 * rng.normal();
    centers.push_back(c);
    Matrix a(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = 0.6 * rng.normal();
    a.diagonal().array() += 1.0;
    mixing.push_back(a);
  }
  Matrix x(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(J));
  for (std::size_t k = 0; k < K; ++k) {
    const auto g = rng.below(G);
    Vector z(static_cast<Eigen::Index>(J));
    for (auto& v : z) v = rng.normal();
    x.row(static_cast<Eigen::Index>(k)) = (centers[g] + mixing[g] * z).transpose();
  }
  return x;
}

}  // namespace

TEST_CASE("one component reaches the moment fixed point") {
  Rng rng(4);
  Matrix x(300, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  x.col(2) = 2.0 * x.col(0) + 0.1 * x.col(2);
  const auto m = em_fit(x, 1);
  REQUIRE(m.size() == 1);
  const Vector mean = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - mean.transpose();
  Matrix cov = c.transpose() * c / 300.0;
  const double eps = 1e-6 * cov.trace() / 3.0;
  cov.diagonal().array() += eps;
  CHECK(m.components[0].weight == 1.0);
  CHECK((m.components[0].mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.components[0].covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(assign(m, x) == std::vector<int>(300, 0));
  const auto r = responsibilities(m, x);
  CHECK(r.gamma.isOnes(0.0));
}

TEST_CASE("two 1-D Gaussians are recovered") {
  const Matrix x = two_clusters(99);
  const auto m = em_fit(x, 2);
  REQUIRE(m.size() == 2);
  const int left = m.components[0].mean[0] < m.components[1].mean[0] ? 0 : 1;
  const auto& l = m.components[static_cast<std::size_t>(left)];
  const auto& r = m.components[static_cast<std::size_t>(1 - left)];
  CHECK(std::abs(l.mean[0] + 5.0) < 0.1);
  CHECK(std::abs(r.mean[0] - 5.0) < 0.1);
  CHECK(std::abs(l.weight - 0.5) < 0.02);
  CHECK(std::abs(r.weight - 0.5) < 0.02);
  for (std::size_t i = 1; i < m.fit_log.size(); ++i) CHECK(m.fit_log[i] >= m.fit_log[i - 1] - 1e-10);
  CHECK(m.converged);

  // A sample at -5 belongs to the left component by a direct density ratio.
  RowVector s(1);
  s << -5.0;
  Vector post;
  REQUIRE(posterior(m, s, post));
  CHECK(post[left] > 0.999);
  const double a = direct_log_density(l, s), b = direct_log_density(r, s);
  CHECK(post[left] == doctest::Approx(1.0 / (1.0 + std::exp(b - a))).epsilon(1e-12));
}

TEST_CASE("EM monotonicity over random seeds and shapes") {
  struct Shape {
    std::size_t K, J, G;
  };
  for (const Shape s : {Shape{400, 1, 2}, Shape{600, 3, 3}, Shape{900, 6, 4}}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Rng rng(seed * 7919 + s.J);
      const Matrix x = random_mixture_sample(rng, s.K, s.J, s.G);
      EmConfig cfg;
      cfg.seed = seed;
      const auto m = em_fit(x, s.G, cfg);
      double total = 0.0;
      for (const auto& c : m.components) total += c.weight;
      CHECK(std::abs(total - 1.0) < 1e-12);
      for (std::size_t i = 1; i < m.fit_log.size(); ++i) CHECK(m.fit_log[i] >= m.fit_log[i - 1] - 1e-10);
      CHECK(m.fit_log.back() == doctest::Approx(log_likelihood(m, x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("responsibility rows sum to one and lie in [0, 1]") {
  Rng rng(12);
  const Matrix x = random_mixture_sample(rng, 500, 4, 3);
  const auto m = em_fit(x, 3);
  const auto r = responsibilities(m, x);
  CHECK((r.gamma.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(r.gamma.minCoeff() >= 0.0);
  CHECK(r.gamma.maxCoeff() <= 1.0);
  CHECK(r.outliers.empty());
}

TEST_CASE("weighted log densities match the explicit formula") {
  Rng rng(21);
  const Matrix x = random_mixture_sample(rng, 400, 3, 2);
  const auto m = em_fit(x, 2);
  const Matrix w = weighted_log_densities(m, x);
  for (Eigen::Index k = 0; k < 400; k += 37)
    for (std::size_t g = 0; g < 2; ++g)
      CHECK(w(k, static_cast<Eigen::Index>(g)) ==
            doctest::Approx(direct_log_density(m.components[g], x.row(k))).epsilon(1e-10));
}

TEST_CASE("symmetric sample gets an even split and the lower label") {
  MixtureModel m;
  m.dimension = 1;
  for (double mu : {-1.0, 1.0}) {
    GaussianComponent c;
    c.weight = 0.5;
    c.mean = Vector::Constant(1, mu);
    c.covariance = Matrix::Identity(1, 1);
    m.components.push_back(c);
  }
  Matrix x(1, 1);
  x << 0.0;
  const auto r = responsibilities(m, x);
  CHECK(r.gamma(0, 0) == doctest::Approx(0.5));
  CHECK(r.gamma(0, 1) == doctest::Approx(0.5));
  CHECK(assign(m, x) == std::vector<int>{0});
}

TEST_CASE("underflowing densities give a uniform flagged row") {
  MixtureModel m;
  m.dimension = 1;
  for (double mu : {0.0, 1.0, 2.0}) {
    GaussianComponent c;
    c.weight = 1.0 / 3.0;
    c.mean = Vector::Constant(1, mu);
    c.covariance = Matrix::Constant(1, 1, 1e-6);
    m.components.push_back(c);
  }
  Matrix x(2, 1);
  x << 1e200, 1.0;
  const auto r = responsibilities(m, x);
  CHECK(r.outliers == std::vector<std::size_t>{0});
  CHECK(r.gamma.row(0).isConstant(1.0 / 3.0, 1e-15));
  CHECK(r.gamma(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("log likelihood at the mean of a unit Gaussian") {
  MixtureModel m;
  m.dimension = 1;
  GaussianComponent c;
  c.mean = Vector::Zero(1);
  c.covariance = Matrix::Identity(1, 1);
  m.components.push_back(c);
  CHECK(log_likelihood(m, Matrix::Zero(1, 1)) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(log_likelihood(m, Matrix::Zero(1, 1)) == doctest::Approx(-0.9189385332).epsilon(1e-10));
}

TEST_CASE("affine change of variables shifts log density by -log|det A|") {
  Rng rng(31);
  const Matrix x = random_mixture_sample(rng, 300, 3, 2);
  const auto m = em_fit(x, 2);
  Matrix A(3, 3);
  A << 2.0, 0.3, 0.0, -0.5, 1.5, 0.2, 0.1, 0.0, 0.7;
  Vector b(3);
  b << 1.0, -2.0, 3.0;
  MixtureModel t = m;
  for (auto& c : t.components) {
    c.mean = A * c.mean + b;
    c.covariance = A * c.covariance * A.transpose();
  }
  const Matrix y = (x * A.transpose()).rowwise() + b.transpose();
  const double shift = -std::log(std::abs(A.determinant()));
  for (Eigen::Index k = 0; k < 300; k += 29) {
    const double lx = log_likelihood(m, x.row(k));
    const double ly = log_likelihood(t, y.row(k));
    CHECK(ly - lx == doctest::Approx(shift).epsilon(1e-9));
  }
}

TEST_CASE("assign is invariant under a uniform monotone transform of log densities") {
  Rng rng(41);
  const Matrix x = random_mixture_sample(rng, 300, 2, 3);
  const auto m = em_fit(x, 3);
  const Matrix w = weighted_log_densities(m, x);
  const Matrix transformed = w.unaryExpr([](double v) { return std::tanh(v / 100.0) * 7.0 + 3.0; });
  CHECK(argmax_rows(transformed) == assign(m, x));
}

TEST_CASE("argmax ties go to the lower index") {
  Matrix s(2, 3);
  s << 1, 1, 0, 0, 2, 2;
  CHECK(argmax_rows(s) == std::vector<int>{0, 1});
}

TEST_CASE("median smoothing removes isolated label flips") {
  const std::vector<int> labels{0, 0, 0, 1, 0, 0, 0, 2, 2, 2, 2, 0, 2, 2, 2};
  const auto s = median_smooth(labels, 5);
  CHECK(s == std::vector<int>{0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 2, 2, 2, 2, 2});
  CHECK(median_smooth(labels, 1) == labels);
  CHECK_THROWS_AS(median_smooth(labels, 4), InputError);
}

TEST_CASE("fits are deterministic for a fixed seed") {
  Rng rng(51);
  const Matrix x = random_mixture_sample(rng, 500, 3, 3);
  const auto a = em_fit(x, 3), b = em_fit(x, 3);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(bit_equal(a.components[g].mean, b.components[g].mean));
    CHECK(bit_equal(a.components[g].covariance, b.components[g].covariance));
  }
}

TEST_CASE("covariances stay symmetric and above the floor on rank-deficient data") {
  Rng rng(61);
  Matrix base(800, 2);
  for (Eigen::Index i = 0; i < base.size(); ++i) base.data()[i] = rng.normal();
  Matrix x(800, 6);
  x << base, base, base.col(0) - base.col(1), Matrix::Zero(800, 1);
  const auto m = em_fit(x, 2);
  const Matrix c = x.rowwise() - x.colwise().mean();
  const double floor = 1e-6 * (c.squaredNorm() / 800.0) / 6.0;
  for (const auto& comp : m.components) {
    CHECK((comp.covariance - comp.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(comp.covariance);
    CHECK(es.eigenvalues().minCoeff() >= floor * (1.0 - 1e-6));
  }
}

TEST_CASE("em_fit input errors") {
  CHECK_THROWS_AS(em_fit(Matrix::Random(10, 2), 0), InputError);
  CHECK_THROWS_AS(em_fit(Matrix::Random(2, 2), 3), InputError);
  Matrix bad = Matrix::Random(10, 2);
  bad(3, 1) = NAN;
  CHECK_THROWS_AS(em_fit(bad, 2), InputError);
}

TEST_CASE("more components than distinct points collapse repeatedly") {
  Matrix x(1000, 1);
  for (Eigen::Index k = 0; k < 1000; ++k) x(k, 0) = k < 500 ? 0.0 : 10.0;
  CHECK_THROWS_AS(em_fit(x, 3), NumericError);
  EmConfig lenient;
  lenient.max_collapses = 0;
  CHECK_THROWS_WITH(em_fit(x, 3, lenient), doctest::Contains("collapsed"));
}
