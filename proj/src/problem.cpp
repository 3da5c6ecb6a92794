#include "sweep/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sweep {

Drift Drift::linear(const Mat& Ax, const Mat& Ac, const Vec& offset) {
  if (Ax.rows() != Ax.cols() || Ac.rows() != Ax.rows() || offset.size() != Ax.rows())
    throw DomainError("linear drift: inconsistent matrix sizes");
  Drift f;
  f.n_ = static_cast<int>(Ax.rows());
  f.cdim_ = static_cast<int>(Ac.cols());
  f.linear_ = true;
  f.Ax_ = Ax;
  f.Ac_ = Ac;
  f.off_ = offset;
  return f;
}

Drift Drift::zero(int n, int cdim) { return linear(Mat::Zero(n, n), Mat::Zero(n, cdim), Vec::Zero(n)); }

Drift Drift::custom(int n, int cdim, Eval f, Jac jac_x, Jac jac_c) {
  Drift d;
  d.n_ = n;
  d.cdim_ = cdim;
  d.linear_ = false;
  d.f_ = std::move(f);
  d.jx_ = std::move(jac_x);
  d.jc_ = std::move(jac_c);
  return d;
}

Vec Drift::operator()(const Vec& c, const Vec& x) const {
  Vec out(n_);
  eval_into(c, x, out);
  return out;
}

void Drift::eval_into(const Vec& c, const Vec& x, Vec& out) const {
  if (linear_) {
    out.noalias() = Ax_ * x;
    if (cdim_ > 0) out.noalias() += Ac_ * c;
    out += off_;
  } else {
    out = f_(c, x);
  }
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (!std::isfinite(out[i])) throw EvaluationError("drift evaluation produced a non-finite value", static_cast<int>(i));
}

Mat Drift::jac_x(const Vec& c, const Vec& x) const { return linear_ ? Ax_ : jx_(c, x); }

Mat Drift::jac_c(const Vec& c, const Vec& x) const { return linear_ ? Ac_ : jc_(c, x); }

ScalarFn ScalarFn::zero(int dim) {
  ScalarFn f;
  f.dim_ = dim;
  f.zero_ = true;
  f.quadratic_ = true;
  f.Q_ = Mat::Zero(dim, dim);
  f.q_ = Vec::Zero(dim);
  return f;
}

ScalarFn ScalarFn::quadratic(const Mat& Q, const Vec& q, double c) {
  if (Q.rows() != Q.cols() || q.size() != Q.rows()) throw DomainError("quadratic cost: inconsistent sizes");
  ScalarFn f;
  f.dim_ = static_cast<int>(q.size());
  f.zero_ = Q.isZero(0.0) && q.isZero(0.0) && c == 0.0;
  f.quadratic_ = true;
  f.Q_ = 0.5 * (Q + Q.transpose());
  f.q_ = q;
  f.c_ = c;
  return f;
}

ScalarFn ScalarFn::custom(int dim, Value fn, Grad grad, bool time_dependent) {
  ScalarFn f;
  f.dim_ = dim;
  f.zero_ = false;
  f.quadratic_ = false;
  f.time_dependent_ = time_dependent;
  f.f_ = std::move(fn);
  f.g_ = std::move(grad);
  return f;
}

double ScalarFn::value(double t, const Vec& v) const {
  if (zero_) return 0.0;
  if (quadratic_) return 0.5 * v.dot(Q_ * v) + q_.dot(v) + c_;
  return f_(t, v);
}

Vec ScalarFn::gradient(double t, const Vec& v) const {
  if (zero_) return Vec::Zero(v.size());
  if (quadratic_) return Q_ * v + q_;
  return g_(t, v);
}

Node Node::zeros(const Dims& d) {
  return Node{Vec::Zero(d.n), Vec::Zero(d.n), Vec::Zero(d.n), Vec::Zero(d.m), Vec::Zero(d.d)};
}

Dims Node::dims() const {
  return Dims{static_cast<int>(x.size()), static_cast<int>(a.size()), static_cast<int>(b.size())};
}

Vec Node::stacked() const {
  Vec v(3 * x.size() + a.size() + b.size());
  v << x, y, u, a, b;
  return v;
}

Node Node::unstack(const Vec& v, const Dims& d) {
  Node z;
  z.x = v.segment(0, d.n);
  z.y = v.segment(d.n, d.n);
  z.u = v.segment(2 * d.n, d.n);
  z.a = v.segment(3 * d.n, d.m);
  z.b = v.segment(3 * d.n + d.m, d.d);
  return z;
}

double Node::squared_norm() const {
  return x.squaredNorm() + y.squaredNorm() + u.squaredNorm() + a.squaredNorm() + b.squaredNorm();
}

Node Node::operator+(const Node& o) const { return Node{x + o.x, y + o.y, u + o.u, a + o.a, b + o.b}; }

Node Node::operator-(const Node& o) const { return Node{x - o.x, y - o.y, u - o.u, a - o.a, b - o.b}; }

Node Node::operator*(double s) const { return Node{x * s, y * s, u * s, a * s, b * s}; }

ControlParam ControlParam::identity(const Dims& d) {
  const int r = d.n + d.m + d.d;
  ControlParam p;
  p.Eu = Mat::Zero(d.n, r);
  p.Ea = Mat::Zero(d.m, r);
  p.Eb = Mat::Zero(d.d, r);
  p.Eu.leftCols(d.n).setIdentity();
  p.Ea.middleCols(d.n, d.m).setIdentity();
  p.Eb.rightCols(d.d).setIdentity();
  return p;
}

ControlParam ControlParam::only_a(const Dims& d) {
  ControlParam p;
  p.Eu = Mat::Zero(d.n, d.m);
  p.Ea = Mat::Identity(d.m, d.m);
  p.Eb = Mat::Zero(d.d, d.m);
  return p;
}

void ProblemSpec::validate() const {
  std::ostringstream os;
  if (set.dim() != dims.n) os << "set dimension " << set.dim() << " differs from n=" << dims.n << "; ";
  if (f1.dim() != dims.n || f1.control_dim() != dims.m) os << "f1 must map (R^m, R^n) to R^n; ";
  if (f2.dim() != dims.n || f2.control_dim() != dims.d) os << "f2 must map (R^d, R^n) to R^n; ";
  if (phi.dim() != dims.n) os << "phi must act on R^n; ";
  if (l1.dim() != 4 * dims.n + dims.m + dims.d) os << "l1 must act on (x,y,u,a,b,xdot); ";
  if (l2.dim() != dims.n) os << "l2 must act on udot; ";
  if (l3.dim() != dims.m) os << "l3 must act on adot; ";
  if (l4.dim() != dims.d) os << "l4 must act on bdot; ";
  if (!(T > 0.0)) os << "horizon T must be positive; ";
  if (x0.size() != dims.n) os << "x0 must have n entries; ";
  if (controls.Eu.rows() != dims.n || controls.Ea.rows() != dims.m || controls.Eb.rows() != dims.d ||
      controls.Ea.cols() != controls.Eu.cols() || controls.Eb.cols() != controls.Eu.cols())
    os << "control parametrization has inconsistent sizes; ";
  std::string msg = os.str();
  if (!msg.empty()) throw DomainError("invalid problem spec: " + msg);
  Node z0 = nominal_controls(0.0);
  Vec g0 = set.values(x0 - z0.u);
  if (g0.size() && g0.minCoeff() < -default_active_tol(x0 - z0.u))
    throw DomainError("invalid problem spec: x0 - u(0) is not in C");
}

Node ProblemSpec::nominal_controls(double t) const {
  if (nominal) return nominal(t);
  return Node::zeros(dims);
}

Vec ProblemSpec::l1_argument(const Node& z, const Vec& xdot) const {
  Vec v(4 * dims.n + dims.m + dims.d);
  v << z.x, z.y, z.u, z.a, z.b, xdot;
  return v;
}

double ProblemSpec::running_cost(double t, const Node& z, const Node& dz) const {
  double s = 0.0;
  if (!l1.is_zero()) s += l1.value(t, l1_argument(z, dz.x));
  if (!l2.is_zero()) s += l2.value(t, dz.u);
  if (!l3.is_zero()) s += l3.value(t, dz.a);
  if (!l4.is_zero()) s += l4.value(t, dz.b);
  return s;
}

bool ProblemSpec::time_dependent_costs() const {
  return l1.time_dependent() || l2.time_dependent() || l3.time_dependent() || l4.time_dependent();
}

Mesh Mesh::uniform(double T, int k) {
  if (k < 1) throw DomainError("mesh needs k >= 1");
  if (!(T > 0.0)) throw DomainError("mesh needs T > 0");
  Mesh m;
  m.t.resize(k + 1);
  for (int j = 0; j <= k; ++j) m.t[j] = T * static_cast<double>(j) / k;
  m.t[k] = T;
  return m;
}

double Mesh::max_step() const {
  double h = 0.0;
  for (int j = 0; j < k(); ++j) h = std::max(h, this->h(j));
  return h;
}

int Mesh::interval(double time) const {
  auto it = std::upper_bound(t.begin(), t.end(), time);
  int j = static_cast<int>(it - t.begin()) - 1;
  return std::clamp(j, 0, k() - 1);
}

void Mesh::validate() const {
  if (t.size() < 2) throw DomainError("mesh needs at least two nodes");
  for (int j = 0; j < k(); ++j)
    if (!(t[j + 1] > t[j])) throw DomainError("mesh nodes must be strictly increasing");
}

Node Trajectory::at(double time) const {
  int j = mesh.interval(time);
  double s = (time - mesh.t[j]) / mesh.h(j);
  return nodes[j] * (1.0 - s) + nodes[j + 1] * s;
}

Node Trajectory::slope(int j) const { return (nodes[j + 1] - nodes[j]) * (1.0 / mesh.h(j)); }

Node Trajectory::derivative(double time) const { return slope(mesh.interval(time)); }

Reference Reference::from_trajectory(const Trajectory& traj) {
  Reference r;
  r.T = traj.mesh.T();
  r.value = [traj](double t) { return traj.at(t); };
  r.rate = [traj](double t) { return traj.derivative(t); };
  r.knots = traj.mesh.t;
  return r;
}

}  // namespace sweep
