#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfa/embedding.hpp"
#include "msfa/rng.hpp"

#include <cmath>

using namespace msfa;

namespace {

TimeSeriesFrame make_frame(const Matrix& values, Timestamp step = 60) {
  TimeSeriesFrame f;
  f.values = values;
  for (Eigen::Index k = 0; k < values.rows(); ++k) f.timestamps.push_back(1000 + step * k);
  return f;
}

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Textbook biased autocorrelation, computed with plain loops.
double brute_rss(const Matrix& x, std::size_t h) {
  double sum_sq = 0.0;
  const auto K = static_cast<std::size_t>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) mean += x(static_cast<Eigen::Index>(k), j);
    mean /= static_cast<double>(K);
    double c0 = 0.0, ch = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double a = x(static_cast<Eigen::Index>(k), j) - mean;
      c0 += a * a;
      if (k + h < K) ch += a * (x(static_cast<Eigen::Index>(k + h), j) - mean);
    }
    sum_sq += (ch / c0) * (ch / c0);
  }
  return std::sqrt(sum_sq);
}

std::size_t brute_lag(const Matrix& x, double band, std::size_t max_lag) {
  for (std::size_t h = 1; h <= max_lag; ++h)
    if (brute_rss(x, h) < band) return h;
  return max_lag;
}

}  // namespace

TEST_CASE("build_lagged unrolls one channel") {
  const Matrix out = build_lagged(column({1, 2, 3, 4}), 2);
  Matrix expect(3, 2);
  expect << 2, 1, 3, 2, 4, 3;
  CHECK(out == expect);
}

TEST_CASE("build_lagged with lag 1 is the identity") {
  Matrix x = Matrix::Random(7, 3);
  CHECK(build_lagged(x, 1) == x);
}

TEST_CASE("build_lagged flattens channel-major") {
  Matrix x(3, 2);
  x << 1, 10, 2, 20, 3, 30;
  const Matrix out = build_lagged(x, 2);
  REQUIRE(out.rows() == 2);
  RowVector first(4);
  first << 2, 20, 1, 10;
  CHECK(out.row(0) == first);
}

TEST_CASE("two channels with lag 43 give widths 86 and 172") {
  Rng rng(3);
  Matrix x(200, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  CHECK(build_lagged(x, 43).cols() == 86);
  CHECK(augment(make_frame(x), 43).width() == 172);
}

TEST_CASE("build_lagged rejects lag >= K and lag 0") {
  CHECK_THROWS_AS(build_lagged(column({1, 2, 3}), 3), InputError);
  CHECK_THROWS_AS(build_lagged(column({1, 2, 3}), 0), InputError);
}

TEST_CASE("first block of the lagged matrix recovers rows h..K") {
  Rng rng(5);
  Matrix x(40, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const std::size_t h = 6;
  const Matrix lagged = build_lagged(x, h);
  CHECK(lagged.leftCols(3) == x.bottomRows(40 - static_cast<Eigen::Index>(h) + 1));
}

TEST_CASE("difference examples") {
  CHECK(difference(column({1, 3, 6})) == column({2, 3}));
  CHECK(difference(Matrix::Constant(5, 3, 4.2)).isZero(0.0));
  Matrix ramp(10, 2);
  for (Eigen::Index k = 0; k < 10; ++k) ramp.row(k) << 0.5 * k, -2.0 + 0.5 * k;
  const Matrix d = difference(ramp);
  CHECK(d.isConstant(0.5, 0.0));
  const RowVector var = (d.rowwise() - d.colwise().mean()).colwise().squaredNorm();
  CHECK(var.isZero(0.0));
  CHECK_THROWS_AS(difference(column({1})), InputError);
}

TEST_CASE("augment hand-unrolled example") {
  const auto a = augment(make_frame(column({1, 2, 3, 4, 5})), 2);
  REQUIRE(a.row_count() == 3);
  REQUIRE(a.width() == 4);
  RowVector first(4);
  first << 2, 1, 1, 1;
  CHECK(a.rows.row(0) == first);
  CHECK(a.source_rows == std::vector<std::size_t>{1, 2, 3});
  CHECK(a.row_timestamps[0] == 1060);
}

TEST_CASE("augment width and row count over random shapes") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto J = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto h = 1 + rng.below(8);
    const auto K = static_cast<Eigen::Index>(h + 2 + rng.below(40));
    Matrix x(K, J);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const auto a = augment(make_frame(x), h);
    CHECK(a.width() == 2 * static_cast<std::size_t>(J) * h);
    CHECK(a.row_count() == static_cast<std::size_t>(K) - h);
    CHECK(a.rows.allFinite());
  }
}

TEST_CASE("augment of constant input has a zero difference half") {
  const auto a = augment(make_frame(Matrix::Constant(20, 2, 3.0)), 4);
  CHECK(a.diff_block().isZero(0.0));
}

TEST_CASE("augment never spans a timestamp gap") {
  Matrix x(30, 1);
  for (Eigen::Index k = 0; k < 30; ++k) x(k, 0) = static_cast<double>(k);
  auto f = make_frame(x);
  for (std::size_t k = 15; k < 30; ++k) f.timestamps[k] += 600;
  const auto a = augment(f, 3);
  CHECK(a.segment_starts == std::vector<std::size_t>{0, 12});
  CHECK(a.row_count() == 24);
  // Difference rows are 1 everywhere on a ramp unless they straddle the gap.
  CHECK(a.diff_block().isConstant(1.0, 0.0));
}

TEST_CASE("augment drops segments shorter than lag + 1") {
  Matrix x = Matrix::Random(40, 1);
  auto f = make_frame(x);
  for (std::size_t k = 3; k < 40; ++k) f.timestamps[k] += 600;
  const auto a = augment(f, 4);
  CHECK(a.segment_starts.size() == 1);
  CHECK(a.source_rows.front() == 3 + 3);
}

TEST_CASE("frame validation") {
  auto f = make_frame(column({1, 2, 3}));
  f.timestamps[2] = f.timestamps[1];
  CHECK_THROWS_AS(f.validate(), InputError);
  auto g = make_frame(column({1, NAN, 3}));
  CHECK_THROWS_AS(g.validate(), InputError);
  CHECK_THROWS_AS(make_frame(column({1})).validate(), InputError);
}

TEST_CASE("white noise needs lag 1") {
  Rng rng(2024);
  Matrix x(10000, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  // The band must exceed the noise floor of the estimator, about sqrt(J/K).
  CHECK(select_lag(make_frame(x), 0.05, 60).lag == 1);
}

TEST_CASE("AR(1) lag matches a brute-force autocorrelation") {
  Rng rng(77);
  Matrix x(20000, 1);
  double v = 0.0;
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    v = 0.9 * v + rng.normal();
    x(k, 0) = v;
  }
  const auto sel = select_lag(make_frame(x), 0.05, 200);
  CHECK(sel.lag == brute_lag(x, 0.05, 200));
  CHECK_FALSE(sel.band_never_reached);
  for (std::size_t h = 1; h <= sel.lag; ++h)
    CHECK(sel.rss_autocorrelation[h - 1] == doctest::Approx(brute_rss(x, h)).epsilon(1e-10));
  // Theory: 0.9^h falls below 0.05 at h = 29; sampling noise moves it a little.
  CHECK(sel.lag >= 20);
  CHECK(sel.lag <= 45);
}

TEST_CASE("a wider band never yields a larger lag") {
  Rng rng(8);
  Matrix x(5000, 2);
  double a = 0.0, b = 0.0;
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    a = 0.95 * a + rng.normal();
    b = 0.7 * b + rng.normal();
    x.row(k) << a, b;
  }
  const auto f = make_frame(x);
  std::size_t previous = 1000;
  for (double band : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    const auto h = select_lag(f, band, 1000).lag;
    CHECK(h <= previous);
    previous = h;
  }
}

TEST_CASE("select_lag errors") {
  Matrix x(100, 2);
  x.col(0).setRandom();
  x.col(1).setConstant(1.0);
  auto f = make_frame(x);
  f.channel_names = {"inlet", "outlet"};
  CHECK_THROWS_WITH_AS(select_lag(f, 0.01, 10), doctest::Contains("outlet"), InputError);
  x.col(1).setRandom();
  CHECK_THROWS_AS(select_lag(make_frame(x), 0.01, 50), InputError);
  CHECK_THROWS_AS(select_lag(make_frame(x), 1.5, 10), InputError);
}

TEST_CASE("select_lag flags a band never reached") {
  Matrix x(200, 1);
  for (Eigen::Index k = 0; k < 200; ++k) x(k, 0) = static_cast<double>(k);
  const auto sel = select_lag(make_frame(x), 0.01, 20);
  CHECK(sel.band_never_reached);
  CHECK(sel.lag == 20);
}
