#pragma once

#include "sweep/linalg.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace sweep {

// Bounds assumed on the constraint functions: M1 <= |grad g_i| <= M2, |hess g_i| <= M3.
struct RegularityConstants {
  double M1 = 1.0;
  double M2 = 1.0;
  double M3 = 0.0;
  double beta = 1.0;
  double rho = 0.0;
};

struct Constraint {
  std::function<double(const Vec&)> g;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

// C = {x : g_i(x) >= 0}; the moving set is C + u.
class MovingSet {
 public:
  MovingSet() = default;

  static MovingSet orthant(int n);
  // g(x) = A x + c
  static MovingSet affine(const Mat& A, const Vec& c);
  static MovingSet custom(int n, std::vector<Constraint> constraints,
                          RegularityConstants constants = {});
  // {x : radius^2 - |x - center|^2 >= 0}
  static MovingSet ball(const Vec& center, double radius);
  // {x : |x - center|^2 - radius^2 >= 0}
  static MovingSet ball_exterior(const Vec& center, double radius);

  int dim() const { return n_; }
  int size() const { return s_; }
  bool is_affine() const { return affine_; }
  bool is_orthant() const { return orthant_; }
  const Mat& A() const { return A_; }
  const Vec& c() const { return c_; }

  double value(int i, const Vec& x) const;
  Vec values(const Vec& x) const;
  Vec gradient(int i, const Vec& x) const;
  // s x n matrix whose rows are the gradients.
  Mat jacobian(const Vec& x) const;
  Mat hessian(int i, const Vec& x) const;

  RegularityConstants constants;

 private:
  int n_ = 0;
  int s_ = 0;
  bool affine_ = false;
  bool orthant_ = false;
  Mat A_;
  Vec c_;
  std::vector<Constraint> custom_;
};

struct ConstantSampleReport {
  double min_gradient = std::numeric_limits<double>::infinity();
  double max_gradient = 0.0;
  double max_hessian = 0.0;
  int violations = 0;
};

// Samples the box [lo, hi] and checks the declared regularity bounds near the boundary of C.
ConstantSampleReport sample_constants(const MovingSet& set, const Vec& lo, const Vec& hi,
                                      int samples, unsigned seed, double band = 0.1);

struct ActiveIndexSet {
  std::vector<int> indices;
  double threshold = 0.0;
  bool contains(int i) const;
  bool empty() const { return indices.empty(); }
};

double default_active_tol(const Vec& point);

ActiveIndexSet active_set(const MovingSet& set, const Vec& y, double tol);

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, Vec last, double residual)
      : Error(what), last_iterate(std::move(last)), residual(residual) {}
  Vec last_iterate;
  double residual;
};

struct ProjectOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
};

struct ProjectionResult {
  Vec point;
  Vec multipliers;  // KKT multipliers of g_i(z - u) >= 0
  int iterations = 0;
  double residual = 0.0;
  bool domain_warning = false;  // nonconvex set and p farther than the prox radius
};

// Nearest point of C + shift to p.
ProjectionResult project(const MovingSet& set, const Vec& shift, const Vec& p,
                         const ProjectOptions& options = {});

class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& what, std::vector<int> active)
      : Error(what), active(std::move(active)) {}
  std::vector<int> active;
};

struct ConeDecomposition {
  Vec lambda;
  double residual = 0.0;  // |grad g' lambda + w|
  bool feasible = true;
  ActiveIndexSet active;
};

// Finds lambda >= 0 supported on the active set with -grad g(x - u)' lambda = w.
// A negative active_tol selects default_active_tol(x - u).
ConeDecomposition normal_cone_decompose(const MovingSet& set, const Vec& x, const Vec& u,
                                        const Vec& w, double tol, double active_tol = -1.0);

struct PlicqVerdict {
  bool holds = true;
  double margin = 0.0;
  ActiveIndexSet active;
};

PlicqVerdict check_plicq(const MovingSet& set, const Vec& x, double tol = 1e-10,
                         double active_tol = -1.0);

double prox_radius(const RegularityConstants& constants);

// Minimizes 0.5 d'Hd + q'd subject to J d + g >= 0 through the dual; H positive definite.
struct QpSolution {
  Vec d;
  Vec mu;
};
QpSolution solve_inequality_qp(const Mat& H, const Vec& q, const Mat& J, const Vec& g);

}  // namespace sweep
