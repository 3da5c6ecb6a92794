#include "sweep/transcribe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sweep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat stacked_param(const ControlParam& p) {
  Mat E(p.Eu.rows() + p.Ea.rows() + p.Eb.rows(), p.r());
  E << p.Eu, p.Ea, p.Eb;
  return E;
}

Vec stacked_controls(const Node& z) {
  Vec w(z.u.size() + z.a.size() + z.b.size());
  w << z.u, z.a, z.b;
  return w;
}

// Derivative of the projection onto C + u with respect to the projected point p.
Mat projection_jacobian(const MovingSet& set, const Vec& u, const Vec& p, const ProjectionResult& pr) {
  const int n = set.dim();
  if (set.is_orthant()) {
    Mat D = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = p[i] >= u[i] ? 1.0 : 0.0;
    return D;
  }
  if (set.is_affine()) {
    std::vector<int> act;
    for (int i = 0; i < set.size(); ++i)
      if (pr.multipliers.size() && pr.multipliers[i] > 0.0) act.push_back(i);
    Mat D = Mat::Identity(n, n);
    if (act.empty()) return D;
    Mat AI(static_cast<Eigen::Index>(act.size()), n);
    for (std::size_t r = 0; r < act.size(); ++r) AI.row(static_cast<Eigen::Index>(r)) = set.A().row(act[r]);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(AI * AI.transpose());
    D -= AI.transpose() * cod.pseudoInverse() * AI;
    return D;
  }
  Mat D(n, n);
  for (int i = 0; i < n; ++i) {
    double d = 1e-7 * (1.0 + std::abs(p[i]));
    Vec pp = p, pm = p;
    pp[i] += d;
    pm[i] -= d;
    D.col(i) = (project(set, u, pp).point - project(set, u, pm).point) / (2.0 * d);
  }
  return D;
}

struct Multipliers {
  const std::vector<double>* node = nullptr;
  double energy = 0.0;
  const Vec* endpoint = nullptr;
  double weight = 1.0;
};

double phr(double mu, double c, double rho, double& slope) {
  double m = std::max(0.0, mu + rho * c);
  slope = m;
  return (m * m - mu * mu) / (2.0 * rho);
}

// Augmented Lagrangian of (P_k) at a node sequence; fills explicit partials when grads is given.
double augmented(const DiscreteProblem& P, const Trajectory& z, const Multipliers& mult,
                 std::vector<Node>* grads) {
  const ProblemSpec& spec = P.spec;
  const int k = P.k();
  const Dims& d = spec.dims;
  const bool loc = P.localized();
  if (grads) grads->assign(k + 1, Node::zeros(d));
  double L = spec.phi.value(P.mesh.T(), z.nodes[k].x);
  if (grads) (*grads)[k].x += spec.phi.gradient(P.mesh.T(), z.nodes[k].x);

  double energy = 0.0;
  std::vector<Node> theta(k);
  for (int j = 0; j < k; ++j) {
    const double h = P.mesh.h(j), t = P.mesh.t[j];
    const Node& zj = z.nodes[j];
    Node dz = z.slope(j);
    L += h * spec.running_cost(t, zj, dz);
    if (grads) {
      Node& gj = (*grads)[j];
      Node& gn = (*grads)[j + 1];
      if (!spec.l1.is_zero()) {
        Vec g = spec.l1.gradient(t, spec.l1_argument(zj, dz.x));
        gj.x += h * g.segment(0, d.n) - g.segment(3 * d.n + d.m + d.d, d.n);
        gn.x += g.segment(3 * d.n + d.m + d.d, d.n);
        gj.y += h * g.segment(d.n, d.n);
        gj.u += h * g.segment(2 * d.n, d.n);
        gj.a += h * g.segment(3 * d.n, d.m);
        gj.b += h * g.segment(3 * d.n + d.m, d.d);
      }
      if (!spec.l2.is_zero()) {
        Vec g = spec.l2.gradient(t, dz.u);
        gn.u += g;
        gj.u -= g;
      }
      if (!spec.l3.is_zero()) {
        Vec g = spec.l3.gradient(t, dz.a);
        gn.a += g;
        gj.a -= g;
      }
      if (!spec.l4.is_zero()) {
        Vec g = spec.l4.gradient(t, dz.b);
        gn.b += g;
        gj.b -= g;
      }
    }
    theta[j] = (z.nodes[j + 1] - zj) - P.reference_increments[j];
    energy += theta[j].squared_norm() / h + P.variance[j];
  }
  L += 0.5 * energy;
  double energy_slope = 0.0;
  if (loc) {
    const double r2 = 0.25 * P.epsilon * P.epsilon;
    for (int j = 0; j < k; ++j) {
      Node e = z.nodes[j] - P.reference_nodes[j];
      double s = 0.0;
      L += phr((*mult.node)[j], e.squared_norm() - r2, mult.weight, s);
      if (grads && s != 0.0) (*grads)[j] = (*grads)[j] + e * (2.0 * s);
    }
    L += phr(mult.energy, energy - 0.5 * P.epsilon, mult.weight, energy_slope);
  }
  if (grads) {
    for (int j = 0; j < k; ++j) {
      Node w = theta[j] * ((1.0 + 2.0 * energy_slope) / P.mesh.h(j));
      (*grads)[j + 1] = (*grads)[j + 1] + w;
      (*grads)[j] = (*grads)[j] - w;
    }
  }
  const Vec yk = z.nodes[k].x - z.nodes[k].u;
  Vec gk = spec.set.values(yk);
  for (int i = 0; i < gk.size(); ++i) {
    double s = 0.0;
    L += phr((*mult.endpoint)[i], -gk[i], mult.weight, s);
    if (grads && s != 0.0) {
      Vec gr = spec.set.gradient(i, yk);
      (*grads)[k].x -= s * gr;
      (*grads)[k].u += s * gr;
    }
  }
  return L;
}

struct ForwardPass {
  Trajectory traj;
  std::vector<Mat> D;  // projection Jacobian of step j -> j + 1
};

ForwardPass forward(const DiscreteProblem& P, const std::vector<Vec>& c, bool jacobians) {
  const ProblemSpec& spec = P.spec;
  const int k = P.k();
  ControlSequence ctl = P.controls(c);
  ForwardPass fp;
  Trajectory& tr = fp.traj;
  tr.mesh = P.mesh;
  tr.nodes.resize(k + 1);
  tr.nodes[0] = Node{spec.x0, Vec::Zero(spec.dims.n), ctl.u[0], ctl.a[0], ctl.b[0]};
  if (jacobians) fp.D.resize(k);
  for (int j = 0; j < k; ++j) {
    const Node& zj = tr.nodes[j];
    const double h = P.mesh.h(j);
    Vec y = zj.y + h * spec.f2(zj.b, zj.x);
    Vec p = zj.x - h * (spec.f1(zj.a, zj.x) + y);
    ProjectionResult pr = project(spec.set, ctl.u[j + 1], p);
    if (jacobians) fp.D[j] = projection_jacobian(spec.set, ctl.u[j + 1], p, pr);
    tr.nodes[j + 1] = Node{pr.point, y, ctl.u[j + 1], ctl.a[j + 1], ctl.b[j + 1]};
  }
  return fp;
}

}  // namespace

bool DiscreteProblem::localized() const { return std::isfinite(epsilon); }

DiscreteEvaluation DiscreteProblem::evaluate(const Trajectory& z) const {
  if (z.k() != k()) throw DomainError("evaluate: node count differs from the problem mesh");
  DiscreteEvaluation ev;
  ev.terminal = spec.phi.value(mesh.T(), z.nodes[k()].x);
  for (int j = 0; j < k(); ++j) {
    const double h = mesh.h(j);
    ev.running += h * spec.running_cost(mesh.t[j], z.nodes[j], z.slope(j));
    Node th = (z.nodes[j + 1] - z.nodes[j]) - reference_increments[j];
    ev.energy += th.squared_norm() / h + variance[j];
    ev.node_distance.push_back((z.nodes[j] - reference_nodes[j]).norm());
  }
  ev.penalty = 0.5 * ev.energy;
  ev.cost = ev.terminal + ev.running + ev.penalty;
  ev.endpoint = spec.set.values(z.nodes[k()].x - z.nodes[k()].u);
  if (ev.endpoint.size()) ev.violation = std::max(0.0, -ev.endpoint.minCoeff());
  if (localized()) {
    const double r = 0.5 * epsilon;
    double dmax = 0.0;
    for (double v : ev.node_distance) dmax = std::max(dmax, v);
    ev.violation = std::max({ev.violation, dmax - r, ev.energy - r});
    ev.node_localization_active = dmax >= r * (1.0 - 1e-3);
    ev.energy_localization_active = ev.energy >= r * (1.0 - 1e-3);
  }
  return ev;
}

std::vector<Vec> DiscreteProblem::coordinates(const Trajectory& z) const {
  Mat E = stacked_param(spec.controls);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(E);
  std::vector<Vec> c(k() + 1);
  for (int j = 0; j <= k(); ++j) {
    if (j == 0) {
      c[j] = Vec::Zero(spec.controls.r());
      continue;
    }
    c[j] = cod.solve(stacked_controls(z.nodes[j]) - stacked_controls(reference_nodes[j]));
  }
  return c;
}

ControlSequence DiscreteProblem::controls(const std::vector<Vec>& c) const {
  if (static_cast<int>(c.size()) != k() + 1) throw DomainError("controls: need k + 1 coordinate vectors");
  ControlSequence out;
  const ControlParam& E = spec.controls;
  for (int j = 0; j <= k(); ++j) {
    const Node& base = reference_nodes[j];
    out.u.push_back(base.u + E.Eu * c[j]);
    out.a.push_back(base.a + E.Ea * c[j]);
    out.b.push_back(base.b + E.Eb * c[j]);
  }
  return out;
}

Trajectory DiscreteProblem::trajectory(const std::vector<Vec>& c) const { return forward(*this, c, false).traj; }

double default_epsilon(const Reference& reference, const Mesh& mesh) {
  double sup = 0.0;
  for (double t : mesh.t) sup = std::max(sup, reference.value(t).norm());
  return sup > 0.0 ? 0.1 * sup : 0.1;
}

DiscreteProblem build(const ProblemSpec& spec, const Reference& reference, int k, double epsilon) {
  spec.validate();
  if (!(reference.T > 0.0) || std::abs(reference.T - spec.T) > 1e-12 * std::max(1.0, spec.T))
    throw BuildError("build: reference horizon differs from the problem horizon");
  if (!reference.value || !reference.rate) throw BuildError("build: reference needs value and rate");
  DiscreteProblem P;
  P.spec = spec;
  P.mesh = Mesh::uniform(spec.T, k);
  P.reference = reference;
  P.epsilon = epsilon > 0.0 ? epsilon : default_epsilon(reference, P.mesh);
  for (int j = 0; j <= k; ++j) P.reference_nodes.push_back(reference.value(P.mesh.t[j]));
  for (int j = 0; j < k; ++j) {
    const double a = P.mesh.t[j], b = P.mesh.t[j + 1], h = b - a;
    Node inc = P.reference_nodes[j + 1] - P.reference_nodes[j];
    Node mean = inc * (1.0 / h);
    double v = 0.0;
    if (!reference.knots.empty()) {
      std::vector<double> cuts{a};
      for (double s : reference.knots)
        if (s > a + 1e-14 * h && s < b - 1e-14 * h) cuts.push_back(s);
      cuts.push_back(b);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        v += (cuts[i + 1] - cuts[i]) * (reference.rate(0.5 * (cuts[i] + cuts[i + 1])) - mean).squared_norm();
    } else {
      v = simpson([&](double t) { return (reference.rate(t) - mean).squared_norm(); }, a, b, 16);
    }
    P.reference_increments.push_back(inc);
    P.variance.push_back(std::max(0.0, v));
  }
  Reconstruction rec = reconstruct_discrete_feasible(spec, reference, k);
  for (int j = 0; j <= k; ++j) {
    const Vec yc = rec.trajectory.nodes[j].x - rec.trajectory.nodes[j].u;
    Vec g = spec.set.values(yc);
    if (!rec.trajectory.nodes[j].stacked().allFinite() ||
        (g.size() && g.minCoeff() < -1e-6 * (1.0 + yc.norm()))) {
      std::ostringstream os;
      os << "build: reconstructed initial guess is infeasible at node " << j;
      throw BuildError(os.str());
    }
  }
  P.initial_guess = rec.trajectory;
  return P;
}

int ReducedObjective::size() const { return problem->k() * problem->spec.controls.r(); }

Vec ReducedObjective::encode(const std::vector<Vec>& c) const {
  const int r = problem->spec.controls.r(), k = problem->k();
  Vec v(k * r);
  for (int j = 0; j < k; ++j)
    v.segment(j * r, r) = (c[j + 1] - c[j]) / std::sqrt(problem->mesh.h(j));
  return v;
}

std::vector<Vec> ReducedObjective::decode(const Vec& v) const {
  const int r = problem->spec.controls.r(), k = problem->k();
  std::vector<Vec> c(k + 1);
  c[0] = Vec::Zero(r);
  for (int j = 0; j < k; ++j) c[j + 1] = c[j] + std::sqrt(problem->mesh.h(j)) * v.segment(j * r, r);
  return c;
}

double ReducedObjective::value(const Vec& v) const {
  Multipliers m{&node_multiplier, energy_multiplier, &endpoint_multiplier, weight};
  return augmented(*problem, problem->trajectory(decode(v)), m, nullptr);
}

double ReducedObjective::value_gradient(const Vec& v, Vec& grad, GradientMode mode) const {
  const int N = size();
  grad.resize(N);
  if (mode != GradientMode::adjoint) {
    const double f0 = value(v);
    for (int i = 0; i < N; ++i) {
      const double s = 1e-6 * (1.0 + std::abs(v[i]));
      Vec vp = v;
      vp[i] += s;
      if (mode == GradientMode::forward) {
        grad[i] = (value(vp) - f0) / s;
      } else {
        Vec vm = v;
        vm[i] -= s;
        grad[i] = (value(vp) - value(vm)) / (2.0 * s);
      }
    }
    return f0;
  }

  const DiscreteProblem& P = *problem;
  const ProblemSpec& spec = P.spec;
  const int k = P.k(), r = spec.controls.r();
  std::vector<Vec> c = decode(v);
  ForwardPass fp = forward(P, c, true);
  Multipliers m{&node_multiplier, energy_multiplier, &endpoint_multiplier, weight};
  std::vector<Node> G;
  const double L = augmented(P, fp.traj, m, &G);

  // Reverse sweep through y_{j+1} = y_j + h f2(b_j, x_j), x_{j+1} = proj(x_j - h (f1(a_j, x_j) + y_{j+1})).
  Vec X = G[k].x;
  Vec Ynext = Vec::Zero(spec.dims.n);  // total adjoint of y_{j+2}
  std::vector<Vec> dc(k + 1, Vec::Zero(r));
  auto control_adjoint = [&](int j, const Vec& U, const Vec& A, const Vec& B) {
    dc[j] = spec.controls.Eu.transpose() * U + spec.controls.Ea.transpose() * A +
            spec.controls.Eb.transpose() * B;
  };
  Vec Uk = G[k].u, Ak = G[k].a, Bk = G[k].b;
  for (int j = k - 1; j >= 0; --j) {
    const Node& zj = fp.traj.nodes[j];
    const double h = P.mesh.h(j);
    Vec g = fp.D[j].transpose() * X;
    Uk += X - g;
    Vec Y = G[j + 1].y + Ynext - h * g;
    control_adjoint(j + 1, Uk, Ak, Bk);
    Vec A = G[j].a - h * spec.f1.jac_c(zj.a, zj.x).transpose() * g;
    Vec B = G[j].b + h * spec.f2.jac_c(zj.b, zj.x).transpose() * Y;
    X = G[j].x + g - h * spec.f1.jac_x(zj.a, zj.x).transpose() * g +
        h * spec.f2.jac_x(zj.b, zj.x).transpose() * Y;
    Ynext = Y;
    Uk = G[j].u;
    Ak = A;
    Bk = B;
  }
  Vec acc = Vec::Zero(r);
  for (int j = k - 1; j >= 0; --j) {
    acc += dc[j + 1];
    grad.segment(j * r, r) = std::sqrt(P.mesh.h(j)) * acc;
  }
  return L;
}

namespace {

struct LbfgsResult {
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  bool line_search_failure = false;
};

LbfgsResult lbfgs(const ReducedObjective& obj, Vec& v, const SolveOptions& opt) {
  LbfgsResult res;
  Vec g;
  double f = obj.value_gradient(v, g, opt.gradient);
  std::vector<Vec> S, Yv;
  std::vector<double> rho;
  int stall = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.gradient_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    if (res.gradient_norm <= opt.tolerance) {
      res.converged = true;
      return res;
    }
    Vec q = g;
    const int m = static_cast<int>(S.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Yv[i];
    }
    double gamma = m ? S.back().dot(Yv.back()) / Yv.back().squaredNorm() : 1.0 / std::max(1.0, g.norm());
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      double beta = rho[i] * Yv[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    Vec dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      S.clear();
      Yv.clear();
      rho.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }
    double step = 1.0, fn = 0.0;
    Vec vn, gn;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      vn = v + step * dir;
      fn = obj.value_gradient(vn, gn, opt.gradient);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    ++res.iterations;
    if (!ok) {
      if (!S.empty()) {
        S.clear();
        Yv.clear();
        rho.clear();
        continue;
      }
      res.line_search_failure = true;
      return res;
    }
    Vec s = vn - v, y = gn - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(S.size()) == opt.memory) {
        S.erase(S.begin());
        Yv.erase(Yv.begin());
        rho.erase(rho.begin());
      }
      S.push_back(s);
      Yv.push_back(y);
      rho.push_back(1.0 / sy);
    }
    stall = (f - fn <= 1e-15 * std::max(1.0, std::abs(f))) ? stall + 1 : 0;
    v = vn;
    g = gn;
    f = fn;
    if (stall >= 10) break;
  }
  res.gradient_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  res.converged = res.gradient_norm <= opt.tolerance;
  return res;
}

}  // namespace

SolveReport solve(const DiscreteProblem& P, const SolveOptions& opt) {
  SolveReport rep;
  const int k = P.k();
  ReducedObjective obj;
  obj.problem = &P;
  obj.node_multiplier.assign(k, 0.0);
  obj.endpoint_multiplier = Vec::Zero(P.spec.set.size());
  obj.weight = opt.penalty_start;
  const Trajectory& start = opt.start ? *opt.start : P.initial_guess;
  if (start.k() != k) throw DomainError("solve: starting point has the wrong node count");
  Vec v = obj.encode(P.coordinates(start));
  LbfgsResult last;
  double best_violation = kInf;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    last = lbfgs(obj, v, opt);
    rep.iterations += last.iterations;
    rep.outer_iterations = outer + 1;
    Trajectory z = P.trajectory(obj.decode(v));
    DiscreteEvaluation ev = P.evaluate(z);
    rep.outer_violation.push_back(ev.violation);
    best_violation = std::min(best_violation, ev.violation);
    if (ev.violation <= opt.constraint_tolerance) break;
    if (P.localized()) {
      const double r2 = 0.25 * P.epsilon * P.epsilon;
      for (int j = 0; j < k; ++j) {
        double c = (z.nodes[j] - P.reference_nodes[j]).squared_norm() - r2;
        obj.node_multiplier[j] = std::max(0.0, obj.node_multiplier[j] + obj.weight * c);
      }
      obj.energy_multiplier = std::max(0.0, obj.energy_multiplier + obj.weight * (ev.energy - 0.5 * P.epsilon));
    }
    for (int i = 0; i < ev.endpoint.size(); ++i)
      obj.endpoint_multiplier[i] = std::max(0.0, obj.endpoint_multiplier[i] - obj.weight * ev.endpoint[i]);
    obj.weight = std::min(obj.weight * opt.penalty_factor, opt.penalty_cap);
  }
  rep.solution = P.trajectory(obj.decode(v));
  rep.evaluation = P.evaluate(rep.solution);
  rep.cost = rep.evaluation.cost;
  rep.gradient_norm = last.gradient_norm;
  rep.constraint_violation = rep.evaluation.violation;
  rep.localization_active_nodes = rep.evaluation.node_localization_active;
  rep.localization_active_energy = rep.evaluation.energy_localization_active;
  rep.line_search_failure = last.line_search_failure;
  rep.converged = last.converged && rep.constraint_violation <= opt.constraint_tolerance;
  std::ostringstream os;
  if (last.line_search_failure) os << "line search failed; ";
  if (!last.converged) os << "gradient norm " << last.gradient_norm << " above tolerance; ";
  if (rep.constraint_violation > opt.constraint_tolerance)
    os << "constraint violation " << rep.constraint_violation << " above tolerance; ";
  if (rep.localization_active_nodes || rep.localization_active_energy)
    os << "localization boundary reached (epsilon too small or reference not locally optimal); ";
  rep.diagnostic = os.str();
  if (!rep.diagnostic.empty()) rep.diagnostic.resize(rep.diagnostic.size() - 2);
  return rep;
}

std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, const Reference& reference,
                                              const std::vector<int>& ks, double epsilon,
                                              const SolveOptions& options) {
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw DomainError("convergence_study: ks must be increasing");
  std::vector<ConvergenceRow> rows;
  for (int k : ks) {
    ConvergenceRow row;
    row.k = k;
    try {
      DiscreteProblem P = build(spec, reference, k, epsilon);
      SolveReport rep = solve(P, options);
      W12Distance dist = w12_distance(rep.solution, reference);
      row.cost = rep.cost;
      row.sup_norm = dist.sup_norm;
      row.l2_derivative = dist.l2_derivative;
      row.iterations = rep.iterations;
      row.constraint_violation = rep.constraint_violation;
      row.localization_active = rep.localization_active_nodes || rep.localization_active_energy;
      row.ok = rep.converged;
      row.error = rep.diagnostic;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream os;
  os << "k,cost,sup_norm,l2_derivative,iterations,constraint_violation,localization_active,ok,error\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.k << ',' << num(r.cost) << ',' << num(r.sup_norm) << ',' << num(r.l2_derivative) << ','
       << r.iterations << ',' << num(r.constraint_violation) << ',' << (r.localization_active ? 1 : 0)
       << ',' << (r.ok ? 1 : 0) << ',' << err << '\n';
  }
  return os.str();
}

}  // namespace sweep
