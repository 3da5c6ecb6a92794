#include "sweep/linalg.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace sweep;
using Catch::Matchers::WithinAbs;

namespace {

// Brute force over supports: the best feasible unconstrained fit on any subset.
Vec nnls_oracle(const Mat& A, const Vec& b) {
  const int n = static_cast<int>(A.cols());
  Vec best = Vec::Zero(n);
  double best_r = b.norm();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> cols;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) cols.push_back(i);
    Mat As(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) As.col(static_cast<Eigen::Index>(c)) = A.col(cols[c]);
    Vec xs = As.colPivHouseholderQr().solve(b);
    if (xs.minCoeff() < 0.0) continue;
    Vec x = Vec::Zero(n);
    for (std::size_t c = 0; c < cols.size(); ++c) x[cols[c]] = xs[static_cast<Eigen::Index>(c)];
    double r = (A * x - b).norm();
    if (r < best_r - 1e-14) {
      best_r = r;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("nnls recovers a nonnegative exact solution") {
  Mat A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  Vec x(2);
  x << 2, 3;
  NnlsResult r = nnls(A, A * x);
  REQUIRE(r.converged);
  CHECK((r.x - x).norm() < 1e-12);
  CHECK(r.residual < 1e-12);
}

TEST_CASE("nnls clips a negative least squares component") {
  Mat A = Mat::Identity(2, 2);
  Vec b(2);
  b << -1, 4;
  NnlsResult r = nnls(A, b);
  CHECK_THAT(r.x[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(r.x[1], WithinAbs(4.0, 1e-15));
  CHECK_THAT(r.residual, WithinAbs(1.0, 1e-15));
}

TEST_CASE("nnls matches support enumeration on random problems") {
  std::mt19937 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 3 + trial % 4, n = 1 + trial % 5;
    Mat A(m, n);
    Vec b(m);
    for (int i = 0; i < m; ++i) {
      b[i] = N(rng);
      for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    }
    NnlsResult r = nnls(A, b);
    Vec o = nnls_oracle(A, b);
    CHECK(r.x.minCoeff() >= 0.0);
    CHECK(r.residual <= (A * o - b).norm() + 1e-10);
  }
}

TEST_CASE("bounded least squares leaves free components unsigned") {
  Mat A = Mat::Identity(3, 3);
  Vec b(3);
  b << -1, -2, 3;
  NnlsResult r = bounded_least_squares(A, b, {true, false, false});
  CHECK_THAT(r.x[0], WithinAbs(-1.0, 1e-14));
  CHECK_THAT(r.x[1], WithinAbs(0.0, 1e-14));
  CHECK_THAT(r.x[2], WithinAbs(3.0, 1e-14));
}

TEST_CASE("nonneg_qp agrees with nnls on normal equations") {
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat A(6, 4);
    Vec b(6);
    for (int i = 0; i < 6; ++i) {
      b[i] = N(rng);
      for (int j = 0; j < 4; ++j) A(i, j) = N(rng);
    }
    NonnegQpResult q = nonneg_qp(A.transpose() * A, -A.transpose() * b);
    NnlsResult r = nnls(A, b);
    CHECK((q.x - r.x).norm() < 1e-8);
  }
}

TEST_CASE("lstsq returns the minimum-norm solution") {
  Mat A(1, 2);
  A << 1, 1;
  Vec b(1);
  b << 2;
  Vec x = lstsq(A, b);
  CHECK_THAT(x[0], WithinAbs(1.0, 1e-14));
  CHECK_THAT(x[1], WithinAbs(1.0, 1e-14));
  CHECK(numerical_rank(A) == 1);
  CHECK(numerical_rank(Mat::Identity(3, 3)) == 3);
}

TEST_CASE("simpson is exact on cubics") {
  auto f = [](double t) { return 4 * t * t * t - 3 * t * t + 2 * t - 1; };
  // Antiderivative t^4 - t^3 + t^2 - t over [0, 2]: 16 - 8 + 4 - 2.
  CHECK_THAT(simpson(f, 0.0, 2.0, 2), WithinAbs(10.0, 1e-13));
  Vec w = simpson_weights(4, 0.5);
  CHECK_THAT(w.sum(), WithinAbs(2.0, 1e-15));
  CHECK_THROWS_AS(simpson_weights(3, 0.1), DomainError);
}

TEST_CASE("tail integrals of the exponential are fourth order") {
  for (int N : {10, 11}) {
    const double h = 1.0 / N;
    std::vector<double> f(N + 1);
    for (int i = 0; i <= N; ++i) f[i] = std::exp(i * h);
    auto tail = tail_integrals(f, h);
    for (int i = 0; i <= N; ++i) CHECK_THAT(tail[i], WithinAbs(std::exp(1.0) - std::exp(i * h), 2e-5));
    CHECK(tail[N] == 0.0);
  }
}
