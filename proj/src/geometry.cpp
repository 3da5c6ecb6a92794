#include "sweep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace sweep {

MovingSet MovingSet::orthant(int n) {
  MovingSet s = affine(Mat::Identity(n, n), Vec::Zero(n));
  s.orthant_ = true;
  return s;
}

MovingSet MovingSet::affine(const Mat& A, const Vec& c) {
  if (A.rows() != c.size()) throw DomainError("affine set: row count of A differs from size of c");
  MovingSet s;
  s.n_ = static_cast<int>(A.cols());
  s.s_ = static_cast<int>(A.rows());
  s.affine_ = true;
  s.A_ = A;
  s.c_ = c;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < s.s_; ++i) {
    double nrm = A.row(i).norm();
    lo = std::min(lo, nrm);
    hi = std::max(hi, nrm);
  }
  s.constants.M1 = s.s_ ? lo : 1.0;
  s.constants.M2 = s.s_ ? hi : 1.0;
  s.constants.M3 = 0.0;
  return s;
}

MovingSet MovingSet::custom(int n, std::vector<Constraint> constraints,
                            RegularityConstants constants) {
  MovingSet s;
  s.n_ = n;
  s.s_ = static_cast<int>(constraints.size());
  s.custom_ = std::move(constraints);
  s.constants = constants;
  return s;
}

MovingSet MovingSet::ball(const Vec& center, double radius) {
  Constraint c;
  c.g = [center, radius](const Vec& x) { return radius * radius - (x - center).squaredNorm(); };
  c.grad = [center](const Vec& x) -> Vec { return -2.0 * (x - center); };
  c.hess = [n = center.size()](const Vec&) -> Mat { return -2.0 * Mat::Identity(n, n); };
  RegularityConstants k;
  k.M1 = 2.0 * radius;
  k.M2 = 2.0 * radius;
  k.M3 = 2.0;
  k.beta = 1.0;
  return custom(static_cast<int>(center.size()), {c}, k);
}

MovingSet MovingSet::ball_exterior(const Vec& center, double radius) {
  Constraint c;
  c.g = [center, radius](const Vec& x) { return (x - center).squaredNorm() - radius * radius; };
  c.grad = [center](const Vec& x) -> Vec { return 2.0 * (x - center); };
  c.hess = [n = center.size()](const Vec&) -> Mat { return 2.0 * Mat::Identity(n, n); };
  RegularityConstants k;
  k.M1 = 2.0 * radius;
  k.M2 = 2.0 * radius;
  k.M3 = 2.0;
  k.beta = 1.0;
  return custom(static_cast<int>(center.size()), {c}, k);
}

double MovingSet::value(int i, const Vec& x) const {
  double v = affine_ ? A_.row(i).dot(x) + c_[i] : custom_[i].g(x);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "constraint g_" << i << " is not finite at the evaluation point";
    throw EvaluationError(os.str(), i);
  }
  return v;
}

Vec MovingSet::values(const Vec& x) const {
  Vec v(s_);
  for (int i = 0; i < s_; ++i) v[i] = value(i, x);
  return v;
}

Vec MovingSet::gradient(int i, const Vec& x) const {
  if (affine_) return A_.row(i).transpose();
  return custom_[i].grad(x);
}

Mat MovingSet::jacobian(const Vec& x) const {
  if (affine_) return A_;
  Mat J(s_, n_);
  for (int i = 0; i < s_; ++i) J.row(i) = custom_[i].grad(x).transpose();
  return J;
}

Mat MovingSet::hessian(int i, const Vec& x) const {
  if (affine_) return Mat::Zero(n_, n_);
  return custom_[i].hess(x);
}

ConstantSampleReport sample_constants(const MovingSet& set, const Vec& lo, const Vec& hi,
                                      int samples, unsigned seed, double band) {
  ConstantSampleReport rep;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& k = set.constants;
  for (int sidx = 0; sidx < samples; ++sidx) {
    Vec x(lo.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = lo[j] + (hi[j] - lo[j]) * U(rng);
    for (int i = 0; i < set.size(); ++i) {
      if (std::abs(set.value(i, x)) > band) continue;
      double gn = set.gradient(i, x).norm();
      Eigen::SelfAdjointEigenSolver<Mat> es(set.hessian(i, x));
      double hn = es.eigenvalues().cwiseAbs().maxCoeff();
      rep.min_gradient = std::min(rep.min_gradient, gn);
      rep.max_gradient = std::max(rep.max_gradient, gn);
      rep.max_hessian = std::max(rep.max_hessian, hn);
      if (gn < k.M1 * (1 - 1e-12) || gn > k.M2 * (1 + 1e-12) || hn > k.M3 * (1 + 1e-12) + 1e-15)
        ++rep.violations;
    }
  }
  return rep;
}

bool ActiveIndexSet::contains(int i) const {
  return std::find(indices.begin(), indices.end(), i) != indices.end();
}

double default_active_tol(const Vec& point) { return 1e-8 * (1.0 + point.norm()); }

ActiveIndexSet active_set(const MovingSet& set, const Vec& y, double tol) {
  if (tol < 0) throw DomainError("active_set: tolerance must be nonnegative");
  ActiveIndexSet out;
  out.threshold = tol;
  for (int i = 0; i < set.size(); ++i)
    if (set.value(i, y) <= tol) out.indices.push_back(i);
  return out;
}

QpSolution solve_inequality_qp(const Mat& H, const Vec& q, const Mat& J, const Vec& g) {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw DomainError("inequality QP: Hessian is not positive definite");
  Mat HiJt = llt.solve(J.transpose());
  Vec Hiq = llt.solve(q);
  Mat G = J * HiJt;
  Vec r = g - J * Hiq;
  QpSolution out;
  out.mu = nonneg_qp(G, r).x;
  out.d = HiJt * out.mu - Hiq;
  return out;
}

namespace {

double violation(const Vec& gv) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < gv.size(); ++i) v = std::max(v, -gv[i]);
  return v;
}

}  // namespace

ProjectionResult project(const MovingSet& set, const Vec& shift, const Vec& p,
                         const ProjectOptions& options) {
  ProjectionResult out;
  const int n = set.dim();
  if (p.size() != n || shift.size() != n) throw DomainError("project: dimension mismatch");
  if (set.is_orthant()) {
    out.point = p.cwiseMax(shift);
    out.multipliers = out.point - p;
    return out;
  }
  if (set.is_affine()) {
    const Mat& A = set.A();
    Vec c = set.c() - A * shift;
    Vec gp = A * p + c;
    if (gp.minCoeff() >= 0.0) {
      out.point = p;
      out.multipliers = Vec::Zero(set.size());
      return out;
    }
    Vec mu = nonneg_qp(A * A.transpose(), gp).x;
    out.point = p + A.transpose() * mu;
    out.multipliers = mu;
    out.residual = violation(A * out.point + c);
    out.iterations = 1;
    return out;
  }

  // Damped projected Newton (SQP on the Lagrangian) for curved boundaries.
  Vec z = p;
  Vec gv = set.values(z - shift);
  Vec mu = Vec::Zero(set.size());
  if (gv.size() == 0 || gv.minCoeff() >= 0.0) {
    out.point = p;
    out.multipliers = mu;
    return out;
  }
  double res = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Mat J = set.jacobian(z - shift);
    Mat H = Mat::Identity(n, n);
    for (int i = 0; i < set.size(); ++i)
      if (mu[i] != 0.0) H -= mu[i] * set.hessian(i, z - shift);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0.1) H += (0.1 - lmin) * Mat::Identity(n, n);
    QpSolution qp = solve_inequality_qp(H, z - p, J, gv);
    // Backtrack on an exact-penalty merit function.
    double nu = 2.0 * qp.mu.cwiseAbs().maxCoeff() + 1.0;
    auto merit = [&](const Vec& zz, const Vec& g) {
      return 0.5 * (zz - p).squaredNorm() + nu * violation(g);
    };
    double m0 = merit(z, gv);
    double t = 1.0;
    Vec znew = z + qp.d;
    Vec gnew = set.values(znew - shift);
    while (t > 1e-4 && merit(znew, gnew) > m0 + 1e-14 * (1.0 + m0)) {
      t *= 0.5;
      znew = z + t * qp.d;
      gnew = set.values(znew - shift);
    }
    double step = (znew - z).norm();
    z = znew;
    gv = gnew;
    mu = qp.mu;
    res = std::max(step, violation(gv));
    if (res <= options.tolerance * (1.0 + z.norm())) {
      ++it;
      break;
    }
  }
  out.point = z;
  out.multipliers = mu;
  out.iterations = it;
  out.residual = res;
  if (!(res <= options.tolerance * (1.0 + z.norm()))) {
    std::ostringstream os;
    os << "projection did not converge after " << it << " iterations (residual " << res << ")";
    throw ProjectionError(os.str(), z, res);
  }
  double eta = set.constants.M3 > 0.0 && set.constants.M1 > 0.0 && set.constants.beta > 0.0
                   ? prox_radius(set.constants)
                   : std::numeric_limits<double>::infinity();
  out.domain_warning = (z - p).norm() > eta;
  return out;
}

ConeDecomposition normal_cone_decompose(const MovingSet& set, const Vec& x, const Vec& u,
                                        const Vec& w, double tol, double active_tol) {
  Vec y = x - u;
  if (active_tol < 0) active_tol = default_active_tol(y);
  ConeDecomposition out;
  out.active = active_set(set, y, active_tol);
  out.lambda = Vec::Zero(set.size());
  const auto& I = out.active.indices;
  if (I.empty()) {
    out.residual = w.norm();
    out.feasible = out.residual <= tol;
    return out;
  }
  Mat Ja(static_cast<Eigen::Index>(I.size()), set.dim());
  for (std::size_t r = 0; r < I.size(); ++r)
    Ja.row(static_cast<Eigen::Index>(r)) = set.gradient(I[r], y).transpose();
  NnlsResult sol = nnls(Ja.transpose(), -w);
  for (std::size_t r = 0; r < I.size(); ++r) out.lambda[I[r]] = sol.x[static_cast<Eigen::Index>(r)];
  out.residual = sol.residual;
  out.feasible = out.residual <= tol;
  if (out.feasible && numerical_rank(Ja) < static_cast<int>(I.size()) && sol.x.norm() > 0.0) {
    std::ostringstream os;
    os << "normal cone multipliers are not unique: active gradients are rank deficient at {";
    for (std::size_t r = 0; r < I.size(); ++r) os << (r ? "," : "") << I[r];
    os << "}";
    throw AmbiguityError(os.str(), I);
  }
  return out;
}

PlicqVerdict check_plicq(const MovingSet& set, const Vec& x, double tol, double active_tol) {
  if (active_tol < 0) active_tol = default_active_tol(x);
  PlicqVerdict out;
  out.active = active_set(set, x, active_tol);
  const auto& I = out.active.indices;
  const int m = static_cast<int>(I.size());
  if (m == 0) {
    out.holds = true;
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  Mat Ja(m, set.dim());
  for (int r = 0; r < m; ++r) Ja.row(r) = set.gradient(I[r], x).transpose();
  double best = std::numeric_limits<double>::infinity();
  if (m <= 16) {
    // Exact minimum-norm point of the convex hull: enumerate supports.
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      std::vector<int> S;
      for (int r = 0; r < m; ++r)
        if (mask & (1u << r)) S.push_back(r);
      const int k = static_cast<int>(S.size());
      Mat Js(k, set.dim());
      for (int r = 0; r < k; ++r) Js.row(r) = Ja.row(S[r]);
      Mat K = Mat::Zero(k + 1, k + 1);
      K.topLeftCorner(k, k) = Js * Js.transpose();
      K.block(0, k, k, 1).setOnes();
      K.block(k, 0, 1, k).setOnes();
      Vec rhs = Vec::Zero(k + 1);
      rhs[k] = 1.0;
      Vec sol = lstsq(K, rhs);
      Vec lam = sol.head(k);
      if (lam.minCoeff() < -1e-12 || std::abs(lam.sum() - 1.0) > 1e-9) continue;
      best = std::min(best, (Js.transpose() * lam).norm());
    }
  } else {
    const double W = 1e8;
    Mat Q = Ja * Ja.transpose() + W * Mat::Ones(m, m);
    Vec c = -W * Vec::Ones(m);
    Vec lam = nonneg_qp(Q, c).x;
    lam /= lam.sum();
    best = (Ja.transpose() * lam).norm();
  }
  out.margin = best;
  out.holds = best > tol;
  return out;
}

double prox_radius(const RegularityConstants& k) {
  if (!(k.M1 > 0.0) || !(k.beta > 0.0) || !(k.M3 >= 0.0))
    throw InvalidConstants("prox_radius requires M1 > 0, beta > 0 and M3 >= 0");
  if (k.M3 == 0.0) return std::numeric_limits<double>::infinity();
  return k.M1 / (k.M3 * k.beta);
}

}  // namespace sweep
