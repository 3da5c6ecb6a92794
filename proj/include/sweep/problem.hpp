#pragma once

#include "sweep/geometry.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sweep {

struct Dims {
  int n = 0;  // state x, memory y and shift u
  int m = 0;  // control a
  int d = 0;  // control b
};

// Vector field f(c, x) where c is the control argument (a for f1, b for f2).
class Drift {
 public:
  using Eval = std::function<Vec(const Vec& c, const Vec& x)>;
  using Jac = std::function<Mat(const Vec& c, const Vec& x)>;

  Drift() = default;
  // f = Ax x + Ac c + offset
  static Drift linear(const Mat& Ax, const Mat& Ac, const Vec& offset);
  static Drift zero(int n, int cdim);
  static Drift custom(int n, int cdim, Eval f, Jac jac_x, Jac jac_c);

  Vec operator()(const Vec& c, const Vec& x) const;
  // out = f(c, x) without temporaries for the linear kind.
  void eval_into(const Vec& c, const Vec& x, Vec& out) const;
  Mat jac_x(const Vec& c, const Vec& x) const;
  Mat jac_c(const Vec& c, const Vec& x) const;

  bool is_linear() const { return linear_; }
  int dim() const { return n_; }
  int control_dim() const { return cdim_; }
  const Mat& Ax() const { return Ax_; }
  const Mat& Ac() const { return Ac_; }
  const Vec& offset() const { return off_; }

 private:
  int n_ = 0;
  int cdim_ = 0;
  bool linear_ = true;
  Mat Ax_, Ac_;
  Vec off_;
  Eval f_;
  Jac jx_, jc_;
};

// Smooth scalar function of a vector, optionally time dependent.
class ScalarFn {
 public:
  using Value = std::function<double(double t, const Vec& v)>;
  using Grad = std::function<Vec(double t, const Vec& v)>;

  ScalarFn() = default;
  static ScalarFn zero(int dim);
  // 0.5 v'Qv + q'v + c
  static ScalarFn quadratic(const Mat& Q, const Vec& q, double c);
  static ScalarFn custom(int dim, Value f, Grad grad, bool time_dependent = false);

  double operator()(const Vec& v) const { return value(0.0, v); }
  double value(double t, const Vec& v) const;
  Vec grad(const Vec& v) const { return gradient(0.0, v); }
  Vec gradient(double t, const Vec& v) const;

  int dim() const { return dim_; }
  bool is_zero() const { return zero_; }
  bool is_quadratic() const { return quadratic_; }
  bool time_dependent() const { return time_dependent_; }
  const Mat& Q() const { return Q_; }
  const Vec& q() const { return q_; }
  double c() const { return c_; }

 private:
  int dim_ = 0;
  bool zero_ = true;
  bool quadratic_ = true;
  bool time_dependent_ = false;
  Mat Q_;
  Vec q_;
  double c_ = 0.0;
  Value f_;
  Grad g_;
};

// The quintuple z = (x, y, u, a, b) at one instant, or a rate of it.
struct Node {
  Vec x, y, u, a, b;

  static Node zeros(const Dims& dims);
  Dims dims() const;
  Vec stacked() const;
  static Node unstack(const Vec& v, const Dims& dims);
  double norm() const { return stacked().norm(); }
  double squared_norm() const;
  Node operator+(const Node& o) const;
  Node operator-(const Node& o) const;
  Node operator*(double s) const;
};

struct Lipschitz {
  double L = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// Linear parametrization of the free controls: (u, a, b) = base(t) + E c(t), c in R^r.
struct ControlParam {
  Mat Eu, Ea, Eb;
  static ControlParam identity(const Dims& dims);
  static ControlParam only_a(const Dims& dims);
  int r() const { return static_cast<int>(Eu.cols()); }
};

struct ProblemSpec {
  std::string name;
  MovingSet set;
  Dims dims;
  Drift f1;  // f1(a, x)
  Drift f2;  // f2(b, x)
  Lipschitz lipschitz;
  ScalarFn phi;  // terminal cost of x(T)
  ScalarFn l1;   // of (x, y, u, a, b, xdot)
  ScalarFn l2;   // of udot
  ScalarFn l3;   // of adot
  ScalarFn l4;   // of bdot
  double T = 1.0;
  Vec x0;
  ControlParam controls;
  // Controls used when the caller supplies none; returns (u, a, b) with x, y unused.
  std::function<Node(double)> nominal;
  // Convexity of the running cost in velocities; diagnostic flag only.
  bool convex_in_velocity = true;

  void validate() const;
  Node nominal_controls(double t) const;
  // l1 + l2 + l3 + l4 at node z with slopes dz
  double running_cost(double t, const Node& z, const Node& dz) const;
  Vec l1_argument(const Node& z, const Vec& xdot) const;
  bool time_dependent_costs() const;
};

struct Mesh {
  std::vector<double> t;

  static Mesh uniform(double T, int k);
  int k() const { return static_cast<int>(t.size()) - 1; }
  double h(int j) const { return t[j + 1] - t[j]; }
  double T() const { return t.back(); }
  double max_step() const;
  // Index j with t in [t_j, t_{j+1}); k - 1 at the right end.
  int interval(double time) const;
  void validate() const;
};

// Node values on a mesh with piecewise linear interpolation.
struct Trajectory {
  Mesh mesh;
  std::vector<Node> nodes;

  Dims dims() const { return nodes.front().dims(); }
  int k() const { return mesh.k(); }
  Node at(double t) const;
  Node slope(int j) const;
  // Slope of the interval containing t (right derivative; left at T).
  Node derivative(double t) const;
};

// Continuous arc given by callables: value z(t) and rate zdot(t).
struct Reference {
  std::function<Node(double)> value;
  std::function<Node(double)> rate;
  double T = 1.0;
  // When nonempty, rate is constant between consecutive knots.
  std::vector<double> knots;

  static Reference from_trajectory(const Trajectory& traj);
};

}  // namespace sweep
