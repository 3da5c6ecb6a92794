#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sweep {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, int index) : Error(what), index(index) {}
  int index;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidConstants : public Error {
 public:
  using Error::Error;
};

struct NnlsResult {
  Vec x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
  bool converged = true;
};

// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const Mat& A, const Vec& b, int max_iterations = -1);

// Same algorithm with a mask: variables with free[i] == true are unconstrained in sign.
NnlsResult bounded_least_squares(const Mat& A, const Vec& b, const std::vector<bool>& free);

struct NonnegQpResult {
  Vec x;
  int iterations = 0;
  bool converged = true;
};

// min 0.5 x'Qx + c'x subject to x >= 0, Q symmetric positive semidefinite.
NonnegQpResult nonneg_qp(const Mat& Q, const Vec& c, int max_iterations = -1);

// Minimum-norm least squares solution.
Vec lstsq(const Mat& A, const Vec& b);

int numerical_rank(const Mat& A, double rel_tol = 1e-10);

// Composite Simpson rule with n (even) subintervals.
double simpson(const std::function<double(double)>& f, double a, double b, int n);

// Simpson weights for N+1 equispaced samples with spacing h; N even.
Vec simpson_weights(int N, double h);

// tail[i] = integral from t_i to t_N of the sampled function, fourth order on a uniform grid.
std::vector<double> tail_integrals(const std::vector<double>& values, double h);

}  // namespace sweep
