#include "sweep/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sweep {

StepResult step(const ProblemSpec& spec, const Vec& x_j, const Vec& y_j, const Vec& u_next,
                const Vec& a_j, const Vec& b_j, double h) {
  if (!(h > 0.0)) throw DomainError("step: h must be positive");
  StepResult out;
  out.y_next = y_j + h * spec.f2(b_j, x_j);
  Vec drift = spec.f1(a_j, x_j) + out.y_next;
  Vec p = x_j - h * drift;
  ProjectionResult pr = project(spec.set, u_next, p);
  out.x_next = pr.point;
  out.domain_warning = pr.domain_warning;
  Vec w = (out.x_next - x_j) / h + drift;
  ConeDecomposition cd = normal_cone_decompose(spec.set, out.x_next, u_next, -w,
                                               std::numeric_limits<double>::infinity());
  out.eta = cd.lambda;
  out.residual = cd.residual;
  return out;
}

ControlSequence ControlSequence::sample(const std::function<Node(double)>& f, const Mesh& mesh) {
  ControlSequence c;
  for (double t : mesh.t) {
    Node z = f(t);
    c.u.push_back(z.u);
    c.a.push_back(z.a);
    c.b.push_back(z.b);
  }
  return c;
}

Simulation simulate(const ProblemSpec& spec, const Mesh& mesh, const ControlSequence& controls) {
  mesh.validate();
  const int k = mesh.k();
  if (static_cast<int>(controls.u.size()) != k + 1 || static_cast<int>(controls.a.size()) != k + 1 ||
      static_cast<int>(controls.b.size()) != k + 1)
    throw DomainError("simulate: controls must be given at all k + 1 nodes");
  const Dims& d = spec.dims;
  Vec g0 = spec.set.values(spec.x0 - controls.u[0]);
  if (g0.size() && g0.minCoeff() < -default_active_tol(spec.x0 - controls.u[0]))
    throw DomainError("simulate: x0 - u_0 is not in C");
  Simulation sim;
  Trajectory& tr = sim.trajectory;
  tr.mesh = mesh;
  tr.nodes.resize(k + 1);
  tr.nodes[0] = Node{spec.x0, Vec::Zero(d.n), controls.u[0], controls.a[0], controls.b[0]};
  for (int j = 0; j < k; ++j) {
    const Node& zj = tr.nodes[j];
    double h = mesh.h(j);
    StepResult s = step(spec, zj.x, zj.y, controls.u[j + 1], zj.a, zj.b, h);
    sim.max_step_residual =
        std::max(sim.max_step_residual, s.residual / (1.0 + zj.x.norm() / h));
    sim.domain_warning = sim.domain_warning || s.domain_warning;
    tr.nodes[j + 1] = Node{s.x_next, s.y_next, controls.u[j + 1], controls.a[j + 1], controls.b[j + 1]};
  }
  sim.bounds = bound_report(spec, tr);
  return sim;
}

BoundReport bound_report(const ProblemSpec& spec, const Trajectory& traj) {
  const int k = traj.k();
  const auto& lip = spec.lipschitz;
  const double T = traj.mesh.T();
  BoundReport r;
  std::vector<double> beta1(k), btil(k), bnorm(k + 1), B(k + 1, 0.0), Btil(k + 1, 0.0);
  for (int j = 0; j <= k; ++j) bnorm[j] = traj.nodes[j].b.norm();
  for (int j = 0; j < k; ++j) {
    beta1[j] = std::max(traj.nodes[j].a.norm(), lip.alpha1);
    btil[j] = 2.0 * std::max(beta1[j], lip.alpha2);
  }
  double expo = 0.0;
  for (int j = 0; j < k; ++j) {
    double h = traj.mesh.h(j);
    expo += h * (btil[j] + 1.0);
    B[j + 1] = B[j] + 0.5 * h * (bnorm[j] + bnorm[j + 1]);
    Btil[j + 1] = Btil[j] + h * btil[j];
  }
  const double E = std::exp(expo);
  const double BT = B[k];
  double lit = 0.0, run = 0.0;
  for (int j = 0; j < k; ++j) {
    double h = traj.mesh.h(j);
    double ud = traj.slope(j).u.norm();
    lit += h * (ud + 2.0 * beta1[j] + 2.0 * BT);
    run += h * (ud + 2.0 * beta1[j] + 2.0 * B[j]);
  }
  const double x0n = traj.nodes[0].x.norm();
  r.l_tilde = x0n * E + E * lit;
  r.l_tilde_running = x0n * E + E * run;
  for (int j = 0; j < k; ++j) {
    const Node& z = traj.nodes[j];
    Node dz = traj.slope(j);
    double ud = dz.u.norm();
    Vec res = dz.x + spec.f1(z.a, z.x) + traj.nodes[j + 1].y;
    r.velocity_residual.push_back(res.norm());
    r.velocity.push_back(dz.x.norm());
    r.memory_rate.push_back(dz.y.norm());
    auto bounds = [&](double lt, std::vector<double>& b3, std::vector<double>& b4,
                      std::vector<double>& b5) {
      b3.push_back(ud + (1.0 + lt) * beta1[j] + B[j] + T * lip.alpha2 * lt);
      b4.push_back(ud + 2.0 * (1.0 + lt) * beta1[j] + 2.0 * Btil[j] + 2.0 * T * lip.alpha2 * lt);
      b5.push_back(bnorm[j] + lip.alpha2 * lt);
    };
    bounds(r.l_tilde, r.bound3, r.bound4, r.bound5);
    bounds(r.l_tilde_running, r.bound3_running, r.bound4_running, r.bound5_running);
    auto over = [&](const std::vector<double>& b3, const std::vector<double>& b4,
                    const std::vector<double>& b5) {
      return r.velocity_residual[j] > 1.05 * b3[j] || r.velocity[j] > 1.05 * b4[j] ||
             r.memory_rate[j] > 1.05 * b5[j];
    };
    if (over(r.bound3, r.bound4, r.bound5)) r.flagged.push_back(j);
    if (over(r.bound3_running, r.bound4_running, r.bound5_running)) r.flagged_running.push_back(j);
  }
  return r;
}

W12Distance w12_distance(const Trajectory& t1, const Trajectory& t2) {
  const double T1 = t1.mesh.T(), T2 = t2.mesh.T();
  if (std::abs(T1 - T2) > 1e-12 * std::max(1.0, std::abs(T1)) ||
      std::abs(t1.mesh.t.front() - t2.mesh.t.front()) > 1e-12)
    throw DomainError("w12_distance: mismatched horizons");
  std::vector<double> s(t1.mesh.t);
  s.insert(s.end(), t2.mesh.t.begin(), t2.mesh.t.end());
  std::sort(s.begin(), s.end());
  std::vector<double> u;
  for (double v : s)
    if (u.empty() || v - u.back() > 1e-14 * std::max(1.0, std::abs(T1))) u.push_back(v);
  u.back() = T1;
  W12Distance out;
  for (double t : u) out.sup_norm = std::max(out.sup_norm, (t1.at(t) - t2.at(t)).norm());
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    double mid = 0.5 * (u[i] + u[i + 1]);
    Node dd = t1.derivative(mid) - t2.derivative(mid);
    out.l2_derivative += (u[i + 1] - u[i]) * dd.squared_norm();
  }
  return out;
}

W12Distance w12_distance(const Trajectory& t1, const Reference& ref, int subsamples) {
  if (std::abs(t1.mesh.T() - ref.T) > 1e-12 * std::max(1.0, std::abs(ref.T)))
    throw DomainError("w12_distance: mismatched horizons");
  if (subsamples < 2) subsamples = 2;
  if (subsamples % 2) ++subsamples;
  W12Distance out;
  for (int j = 0; j < t1.k(); ++j) {
    double a = t1.mesh.t[j], h = t1.mesh.h(j);
    Node sl = t1.slope(j);
    double integral = 0.0;
    for (int i = 0; i <= subsamples; ++i) {
      double t = a + h * i / subsamples;
      out.sup_norm = std::max(out.sup_norm, (t1.at(t) - ref.value(t)).norm());
      double w = (i == 0 || i == subsamples) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double tq = std::clamp(t, a + 1e-14 * h, a + h - 1e-14 * h);
      integral += w * (sl - ref.rate(tq)).squared_norm();
    }
    out.l2_derivative += integral * h / (3.0 * subsamples);
  }
  return out;
}

Reconstruction reconstruct_discrete_feasible(const ProblemSpec& spec, const Reference& ref, int k) {
  Mesh mesh = Mesh::uniform(ref.T, k);
  const Dims& d = spec.dims;
  const bool u_fixed = spec.controls.Eu.isZero(0.0);
  Reconstruction out;
  Trajectory& tr = out.trajectory;
  tr.mesh = mesh;
  tr.nodes.resize(k + 1);
  Vec x = spec.x0;
  Vec y = Vec::Zero(d.n);
  for (int j = 0; j <= k; ++j) {
    double t = mesh.t[j];
    Node zb = ref.value(t);
    Vec u = u_fixed ? Vec(zb.u) : Vec(x - zb.x + zb.u);
    tr.nodes[j] = Node{x, y, u, zb.a, zb.b};
    if (j == k) break;
    double h = mesh.h(j);
    Vec xdot_ref = ref.rate(t).x;
    Vec y_next = y + h * spec.f2(zb.b, x);
    Vec c = spec.f1(zb.a, x) + y_next;
    // -v = projection of -xdot_ref onto N_{C(u)}(x) + c; N is the cone of -grad g_i, i active.
    Vec target = -xdot_ref - c;
    Vec yc = x - u;
    ActiveIndexSet I = active_set(spec.set, yc, default_active_tol(yc));
    Vec eta = Vec::Zero(spec.set.size());
    Vec nvec = Vec::Zero(d.n);
    if (!I.empty()) {
      Mat Jt(d.n, static_cast<Eigen::Index>(I.indices.size()));
      for (std::size_t r = 0; r < I.indices.size(); ++r)
        Jt.col(static_cast<Eigen::Index>(r)) = spec.set.gradient(I.indices[r], yc);
      NnlsResult nn = nnls(Jt, -target);
      for (std::size_t r = 0; r < I.indices.size(); ++r)
        eta[I.indices[r]] = nn.x[static_cast<Eigen::Index>(r)];
      nvec = -Jt * nn.x;
    }
    Vec v = -nvec - c;
    Vec x_next = x + h * v;
    if (u_fixed) {
      Node zn = ref.value(mesh.t[j + 1]);
      x_next = project(spec.set, zn.u, x_next).point;
    }
    out.eta.push_back(eta);
    x = x_next;
    y = y_next;
  }
  out.distance = w12_distance(tr, ref);
  return out;
}

double discrete_gronwall(double e0, const std::vector<double>& sigmas,
                         const std::vector<double>& rhos, const std::vector<double>& gammas, int i) {
  if (i < 0 || i > static_cast<int>(sigmas.size()) || i > static_cast<int>(rhos.size()) ||
      i > static_cast<int>(gammas.size()))
    throw DomainError("discrete_gronwall: index exceeds the sequence length");
  if (e0 < 0.0) throw DomainError("discrete_gronwall: e0 must be nonnegative");
  double sum = e0, expo = 0.0;
  for (int k = 0; k < i; ++k) {
    if (sigmas[k] < 0.0 || rhos[k] < 0.0 || gammas[k] < 0.0)
      throw DomainError("discrete_gronwall: inputs must be nonnegative");
    sum += sigmas[k];
    expo += k * rhos[k] + gammas[k];
  }
  return sum * std::exp(expo);
}

}  // namespace sweep
