#include "sweep/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sweep {

void ResidualReport::add(const std::string& tag, double residual, const std::string& note) {
  ResidualEntry e;
  e.tag = tag;
  e.residual = residual;
  e.pass = std::isfinite(residual) && residual <= tol;
  e.note = note;
  entries.push_back(e);
}

void ResidualReport::add_positive(const std::string& tag, double value, const std::string& note) {
  ResidualEntry e;
  e.tag = tag;
  e.residual = value;
  e.pass = std::isfinite(value) && value > tol;
  e.note = note.empty() ? "value of the nontriviality sum" : note;
  entries.push_back(e);
}

void ResidualReport::add_na(const std::string& tag, const std::string& note) {
  ResidualEntry e;
  e.tag = tag;
  e.applicable = false;
  e.pass = true;
  e.note = note;
  entries.push_back(e);
}

const ResidualEntry* ResidualReport::find(const std::string& tag) const {
  for (const auto& e : entries)
    if (e.tag == tag) return &e;
  return nullptr;
}

bool ResidualReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const ResidualEntry& e) { return e.pass; });
}

double ResidualReport::max_residual(const std::vector<std::string>& tags) const {
  double m = 0.0;
  for (const auto& e : entries) {
    if (!e.applicable) continue;
    if (std::find(tags.begin(), tags.end(), e.tag) != tags.end()) m = std::max(m, e.residual);
  }
  return m;
}

namespace {

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Gradient selections (w, v) of the running cost at node z with slopes dz; w^y from l1, v^y = 0.
void gradient_selection(const ProblemSpec& spec, double t, const Node& z, const Node& dz, Node& w,
                        Node& v) {
  const Dims& d = spec.dims;
  w = Node::zeros(d);
  v = Node::zeros(d);
  if (!spec.l1.is_zero()) {
    Vec g = spec.l1.gradient(t, spec.l1_argument(z, dz.x));
    int o = 0;
    w.x = g.segment(o, d.n);
    o += d.n;
    w.y = g.segment(o, d.n);
    o += d.n;
    w.u = g.segment(o, d.n);
    o += d.n;
    w.a = g.segment(o, d.m);
    o += d.m;
    w.b = g.segment(o, d.d);
    o += d.d;
    v.x = g.segment(o, d.n);
  }
  if (!spec.l2.is_zero()) v.u = spec.l2.gradient(t, dz.u);
  if (!spec.l3.is_zero()) v.a = spec.l3.gradient(t, dz.a);
  if (!spec.l4.is_zero()) v.b = spec.l4.gradient(t, dz.b);
}

Mat hessian_sum(const MovingSet& set, const Vec& weights, const Vec& y) {
  Mat H = Mat::Zero(set.dim(), set.dim());
  for (int i = 0; i < set.size(); ++i)
    if (weights[i] != 0.0) H += weights[i] * set.hessian(i, y);
  return H;
}

bool nonzero(const Mat& E) { return E.size() > 0 && E.cwiseAbs().maxCoeff() > 0.0; }

std::vector<bool> column_support(const Mat& E, int r) {
  std::vector<bool> s(r, false);
  for (int c = 0; c < E.cols(); ++c) s[c] = E.col(c).cwiseAbs().maxCoeff() > 0.0;
  return s;
}

// Decision channels and whether the free coordinates split between them.
struct Channels {
  bool u = false, a = false, b = false;
  bool separable = true;
};

Channels channels(const ControlParam& E) {
  Channels c;
  c.u = nonzero(E.Eu);
  c.a = nonzero(E.Ea);
  c.b = nonzero(E.Eb);
  const int r = E.r();
  auto su = c.u ? column_support(E.Eu, r) : std::vector<bool>(r, false);
  auto sa = c.a ? column_support(E.Ea, r) : std::vector<bool>(r, false);
  auto sb = c.b ? column_support(E.Eb, r) : std::vector<bool>(r, false);
  for (int i = 0; i < r; ++i)
    if (int(su[i]) + int(sa[i]) + int(sb[i]) > 1) c.separable = false;
  return c;
}

NnlsResult active_nnls(const MovingSet& set, const Vec& y, const Vec& lhs, double active_tol,
                       Vec& eta) {
  ActiveIndexSet act = active_set(set, y, active_tol);
  eta = Vec::Zero(set.size());
  Mat G(set.dim(), static_cast<Eigen::Index>(act.indices.size()));
  for (std::size_t r = 0; r < act.indices.size(); ++r)
    G.col(static_cast<Eigen::Index>(r)) = set.gradient(act.indices[r], y);
  NnlsResult sol = nnls(G, lhs);
  for (std::size_t r = 0; r < act.indices.size(); ++r)
    eta[act.indices[r]] = sol.x[static_cast<Eigen::Index>(r)];
  return sol;
}

}  // namespace

EtaResult compute_eta(const ProblemSpec& spec, const Trajectory& traj, double tol) {
  EtaResult out;
  const int k = traj.k();
  Vec f1(spec.dims.n), f2(spec.dims.n);
  for (int j = 0; j < k; ++j) {
    const Node& z = traj.nodes[j];
    const double h = traj.mesh.h(j);
    spec.f1.eval_into(z.a, z.x, f1);
    spec.f2.eval_into(z.b, z.x, f2);
    Vec lhs = (traj.nodes[j + 1].x - z.x) / h + f1 + z.y + h * f2;
    Vec y = z.x - z.u;
    Vec eta;
    NnlsResult sol = active_nnls(spec.set, y, lhs, default_active_tol(y), eta);
    out.eta.push_back(eta);
    out.residual.push_back(sol.residual);
    out.max_residual = std::max(out.max_residual, sol.residual);
    if (sol.residual > tol * (1.0 + lhs.norm())) out.violations.push_back(j);
  }
  return out;
}

Node coderivative_value(const ProblemSpec& spec, const Node& point, const Vec& z, double h,
                        const Vec& lambda, const Vec& sigma) {
  const Vec y = point.x - point.u;
  const Mat H = hessian_sum(spec.set, lambda, y);
  const Mat J = spec.set.jacobian(y);
  Node out;
  out.x = spec.f1.jac_x(point.a, point.x).transpose() * z +
          h * spec.f2.jac_x(point.b, point.x).transpose() * z - H * z - J.transpose() * sigma;
  out.y = z;
  out.u = H * z - J.transpose() * sigma;
  out.a = spec.f1.jac_c(point.a, point.x).transpose() * z;
  out.b = h * spec.f2.jac_c(point.b, point.x).transpose() * z;
  return out;
}

CoderivativeVerdict coderivative_check(const ProblemSpec& spec, const Node& point, const Vec& w,
                                       const Vec& z, double h, const Node& candidate, double tol) {
  const MovingSet& set = spec.set;
  const Vec rhs = w - spec.f1(point.a, point.x) - point.y - h * spec.f2(point.b, point.x);
  ConeDecomposition dec = normal_cone_decompose(set, point.x, point.u, rhs, tol * (1.0 + rhs.norm()));
  if (!dec.feasible) {
    std::ostringstream os;
    os << "w is not a value of F_h at the point (cone residual " << dec.residual << ")";
    throw DomainError(os.str());
  }
  CoderivativeVerdict out;
  out.lambda = dec.lambda;
  const Vec y = point.x - point.u;
  const double ztol = tol * (1.0 + z.norm());
  int worst = -1;
  for (int i = 0; i < set.size(); ++i) {
    double v = std::abs(dec.lambda[i] * set.gradient(i, y).dot(z));
    if (v > out.domain_residual) {
      out.domain_residual = v;
      worst = i;
    }
  }
  if (out.domain_residual > ztol) {
    out.in_domain = false;
    std::ostringstream os;
    os << "z outside the coderivative domain: lambda_" << worst << " <grad g_" << worst
       << ", z> = " << out.domain_residual;
    out.witness = os.str();
    out.sigma = Vec::Zero(set.size());
    return out;
  }

  // Admissible sigma components and their sign rules.
  std::vector<int> cols;
  std::vector<bool> free;
  for (int i : dec.active.indices) {
    const double ip = set.gradient(i, y).dot(z);
    if (dec.lambda[i] > 0.0) {
      cols.push_back(i);
      free.push_back(true);
    } else if (ip < -ztol) {
      cols.push_back(i);
      free.push_back(false);
    } else if (ip <= ztol) {
      cols.push_back(i);
      free.push_back(true);
    }
  }
  const Node base = coderivative_value(spec, point, z, h, dec.lambda, Vec::Zero(set.size()));
  const int n = spec.dims.n;
  Mat A(2 * n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Vec g = set.gradient(cols[c], y);
    A.col(static_cast<Eigen::Index>(c)) << -g, -g;
  }
  Vec b(2 * n);
  b << candidate.x - base.x, candidate.u - base.u;
  NnlsResult sol = bounded_least_squares(A, b, free);
  out.sigma = Vec::Zero(set.size());
  for (std::size_t c = 0; c < cols.size(); ++c) out.sigma[cols[c]] = sol.x[static_cast<Eigen::Index>(c)];

  const Node fit = coderivative_value(spec, point, z, h, dec.lambda, out.sigma);
  const Node diff = candidate - fit;
  out.residual = diff.norm();
  out.member = out.residual <= tol * (1.0 + candidate.norm());
  if (!out.member) {
    const char* names[] = {"x", "y", "u", "a", "b"};
    const double norms[] = {diff.x.norm(), diff.y.norm(), diff.u.norm(), diff.a.norm(), diff.b.norm()};
    int m = static_cast<int>(std::max_element(norms, norms + 5) - norms);
    std::ostringstream os;
    os << "candidate differs from the coderivative formula by " << out.residual << " (largest in the "
       << names[m] << " block, " << norms[m] << ")";
    out.witness = os.str();
  }
  return out;
}

double DiscreteCertificate::primal_dual_residual() const {
  return report.max_residual({"6.33", "6.34", "6.35", "6.36", "6.37", "6.35-6.37", "6.38", "6.39"});
}

namespace {

// Per-node data of the discrete certificate that does not depend on the free multipliers.
struct NodeData {
  double h = 0.0;
  Node theta, w, v;
  Vec eta;
  Mat H, J, F1x, F1a, F2x, F2b;
  std::vector<int> active;
};

struct Assembly {
  const DiscreteProblem* problem = nullptr;
  double lambda = 1.0;
  std::vector<NodeData> nodes;
  std::vector<int> active_k;
  Mat Jk;
  Vec grad_phi;
  Channels ch;
  bool local_sigma = false;  // sigma_j, j >= 1, from the u equation
  // Free multipliers: eta_k on active_k, then sigma_j on active(j) for listed nodes.
  std::vector<std::pair<int, int>> omega_sigma;  // (node, constraint)
  int omega_size() const { return static_cast<int>(active_k.size() + omega_sigma.size()); }
};

struct SweepResult {
  std::vector<Node> p;
  std::vector<Vec> pd, sigma, zeta;
  Vec eta_k;
  std::vector<Vec> Ru, Ra, Rb;  // j = 1..k-1, stored at index j
  Vec Tu, Ta, Tb;
  Vec residual;  // stacked projected residuals used by the least squares fit
};

Vec stack(const std::vector<Vec>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec out(n);
  Eigen::Index o = 0;
  for (const auto& p : parts) {
    out.segment(o, p.size()) = p;
    o += p.size();
  }
  return out;
}

SweepResult run_sweep(const Assembly& as, const Vec& omega) {
  const DiscreteProblem& P = *as.problem;
  const ProblemSpec& spec = P.spec;
  const MovingSet& set = spec.set;
  const Dims& d = spec.dims;
  const int k = P.k();
  const double lam = as.lambda;
  const ControlParam& E = spec.controls;
  SweepResult out;
  out.p.assign(k + 1, Node::zeros(d));
  out.pd.assign(k + 1, Vec::Zero(d.n));
  out.sigma.assign(k, Vec::Zero(set.size()));
  out.zeta.assign(k, Vec::Zero(d.n));
  out.Ru.assign(k, Vec::Zero(d.n));
  out.Ra.assign(k, Vec::Zero(d.m));
  out.Rb.assign(k, Vec::Zero(d.d));

  out.eta_k = Vec::Zero(set.size());
  int o = 0;
  for (int i : as.active_k) out.eta_k[i] = omega[o++];
  for (const auto& [j, i] : as.omega_sigma) out.sigma[j][i] = omega[o++];

  // Velocity momenta p_{j+1} = lambda (v_j + theta_j / h) for the control channels.
  for (int j = 0; j < k; ++j) {
    const NodeData& nd = as.nodes[j];
    out.p[j + 1].u = lam * (nd.v.u + nd.theta.u / nd.h);
    out.p[j + 1].a = lam * (nd.v.a + nd.theta.a / nd.h);
    out.p[j + 1].b = lam * (nd.v.b + nd.theta.b / nd.h);
  }
  const Vec endpoint_normal = as.Jk.transpose() * out.eta_k;
  out.p[k].x = -lam * as.grad_phi + endpoint_normal;
  out.p[k].y = Vec::Zero(d.n);

  for (int j = k - 1; j >= 0; --j) {
    const NodeData& nd = as.nodes[j];
    const double h = nd.h;
    const Node& pn = out.p[j + 1];
    const Vec zeta = pn.x - lam * (nd.v.x + nd.theta.x / h);
    out.zeta[j] = zeta;
    out.pd[j + 1] = h * pn.y - lam * nd.theta.y;
    const Vec Hz = nd.H * zeta;
    const Vec fixed_u = (j >= 1 ? (pn.u - out.p[j].u) / h : Vec(Vec::Zero(d.n))) - lam * nd.w.u - Hz;
    if (as.local_sigma && j >= 1 && !nd.active.empty()) {
      Mat Ja(d.n, static_cast<Eigen::Index>(nd.active.size()));
      for (std::size_t r = 0; r < nd.active.size(); ++r)
        Ja.col(static_cast<Eigen::Index>(r)) = nd.J.row(nd.active[r]).transpose();
      Vec s = lstsq(Ja, -fixed_u);
      for (std::size_t r = 0; r < nd.active.size(); ++r)
        out.sigma[j][nd.active[r]] = s[static_cast<Eigen::Index>(r)];
    }
    const Vec Js = nd.J.transpose() * out.sigma[j];
    Node& pc = out.p[j];
    pc.y = pn.y - h * (lam * nd.w.y + zeta);
    pc.x = pn.x - h * (lam * nd.w.x - nd.F2x.transpose() * out.pd[j + 1] / h + nd.F1x.transpose() * zeta +
                       h * nd.F2x.transpose() * zeta - Hz - Js);
    if (j == 0) {
      pc.u = pn.u - h * (lam * nd.w.u + Hz - Js);
      pc.a = pn.a - h * (lam * nd.w.a + nd.F1a.transpose() * zeta);
      pc.b = pn.b - h * (lam * nd.w.b - nd.F2b.transpose() * out.pd[1] / h + h * nd.F2b.transpose() * zeta);
    } else {
      out.Ru[j] = fixed_u + Js;
      out.Ra[j] = (pn.a - pc.a) / h - lam * nd.w.a - nd.F1a.transpose() * zeta;
      out.Rb[j] = (pn.b - pc.b) / h - lam * nd.w.b + nd.F2b.transpose() * out.pd[j + 1] / h -
                  h * nd.F2b.transpose() * zeta;
    }
  }
  out.Tu = out.p[k].u + endpoint_normal;
  out.Ta = out.p[k].a;
  out.Tb = out.p[k].b;

  std::vector<Vec> parts;
  for (int j = 1; j < k; ++j) {
    if (as.ch.separable) {
      if (as.ch.u) parts.push_back(E.Eu.transpose() * out.Ru[j]);
      if (as.ch.a) parts.push_back(E.Ea.transpose() * out.Ra[j]);
      if (as.ch.b) parts.push_back(E.Eb.transpose() * out.Rb[j]);
    } else {
      parts.push_back(E.Eu.transpose() * out.Ru[j] + E.Ea.transpose() * out.Ra[j] +
                      E.Eb.transpose() * out.Rb[j]);
    }
  }
  parts.push_back(E.Eu.transpose() * out.Tu);
  parts.push_back(E.Ea.transpose() * out.Ta);
  parts.push_back(E.Eb.transpose() * out.Tb);
  out.residual = stack(parts);
  return out;
}

}  // namespace

DiscreteCertificate assemble_discrete_certificate(const DiscreteProblem& problem, const Trajectory& zk,
                                                  double lambda, double tol) {
  if (lambda < 0.0) throw DomainError("lambda must be nonnegative");
  const ProblemSpec& spec = problem.spec;
  const MovingSet& set = spec.set;
  const Dims& d = spec.dims;
  const int k = problem.k();
  if (zk.k() != k) throw DomainError("trajectory and problem meshes differ");

  DiscreteCertificate cert;
  cert.lambda = lambda;
  cert.report.tol = tol;

  EtaResult etas = compute_eta(spec, zk, tol);

  Assembly as;
  as.problem = &problem;
  as.lambda = lambda;
  as.ch = channels(spec.controls);
  as.local_sigma = as.ch.separable && as.ch.u && numerical_rank(spec.controls.Eu) == d.n;
  as.nodes.resize(k);
  for (int j = 0; j < k; ++j) {
    NodeData& nd = as.nodes[j];
    const Node& z = zk.nodes[j];
    nd.h = zk.mesh.h(j);
    const Node slope = zk.slope(j);
    nd.theta = (zk.nodes[j + 1] - z) - problem.reference_increments[j];
    gradient_selection(spec, zk.mesh.t[j], z, slope, nd.w, nd.v);
    nd.eta = etas.eta[j];
    const Vec y = z.x - z.u;
    nd.H = hessian_sum(set, nd.eta, y);
    nd.J = set.jacobian(y);
    nd.F1x = spec.f1.jac_x(z.a, z.x);
    nd.F1a = spec.f1.jac_c(z.a, z.x);
    nd.F2x = spec.f2.jac_x(z.b, z.x);
    nd.F2b = spec.f2.jac_c(z.b, z.x);
    nd.active = active_set(set, y, default_active_tol(y)).indices;
    if (!as.local_sigma && j >= 1)
      for (int i : nd.active) as.omega_sigma.emplace_back(j, i);
  }
  const Node& zT = zk.nodes[k];
  const Vec yT = zT.x - zT.u;
  as.active_k = active_set(set, yT, default_active_tol(yT)).indices;
  as.Jk = set.jacobian(yT);
  as.grad_phi = spec.phi.is_zero() ? Vec(Vec::Zero(d.n)) : spec.phi.gradient(spec.T, zT.x);
  const Vec gT = set.values(yT);
  cert.endpoint_feasible = set.size() == 0 || gT.minCoeff() >= -default_active_tol(yT);

  // The residual is affine in the free multipliers: fit them by bounded least squares.
  const int nw = as.omega_size();
  Vec omega = Vec::Zero(nw);
  if (nw > 0) {
    SweepResult r0 = run_sweep(as, omega);
    Mat A(r0.residual.size(), nw);
    for (int c = 0; c < nw; ++c) {
      Vec e = Vec::Zero(nw);
      e[c] = 1.0;
      A.col(c) = run_sweep(as, e).residual - r0.residual;
    }
    std::vector<bool> free(nw, true);
    for (std::size_t c = 0; c < as.active_k.size(); ++c) free[c] = false;
    NnlsResult sol = bounded_least_squares(A, -r0.residual, free);
    if (!sol.converged) cert.endpoint_feasible = false;
    omega = sol.x;
  }
  SweepResult s = run_sweep(as, omega);

  cert.p = s.p;
  cert.pd = s.pd;
  cert.pd[0] = zk.mesh.h(0) * s.p[0].y;
  cert.sigma = s.sigma;
  cert.zeta = s.zeta;
  cert.eta = etas.eta;
  cert.eta.push_back(s.eta_k);
  for (const auto& nd : as.nodes) {
    cert.w.push_back(nd.w);
    cert.v.push_back(nd.v);
    cert.theta.push_back(nd.theta);
  }

  ResidualReport& rep = cert.report;
  const ControlParam& E = spec.controls;
  rep.add("6.32", etas.max_residual);
  rep.add("6.33", 0.0, "defines p^x_j by backward recursion");
  rep.add("6.34", 0.0, "defines p^y_j by backward recursion");
  auto channel_sup = [&](const Mat& Et, const std::vector<Vec>& R) {
    double m = 0.0;
    for (int j = 1; j < k; ++j) m = std::max(m, sup(Et * R[j]));
    return m;
  };
  if (as.ch.separable) {
    auto tag = [&](const char* t, bool on, const Mat& Ech, const std::vector<Vec>& R) {
      if (on)
        rep.add(t, channel_sup(Ech.transpose(), R));
      else
        rep.add_na(t, "channel is not a decision variable");
    };
    tag("6.35", as.ch.u, E.Eu, s.Ru);
    tag("6.36", as.ch.a, E.Ea, s.Ra);
    tag("6.37", as.ch.b, E.Eb, s.Rb);
  } else {
    double m = 0.0;
    for (int j = 1; j < k; ++j)
      m = std::max(m, sup(E.Eu.transpose() * s.Ru[j] + E.Ea.transpose() * s.Ra[j] +
                          E.Eb.transpose() * s.Rb[j]));
    rep.add("6.35-6.37", m, "free coordinates mix channels; projected jointly");
  }
  rep.add("6.38", 0.0, "defines p^x_k from eta_k");
  double t39 = sup(stack({E.Eu.transpose() * s.Tu, E.Ea.transpose() * s.Ta, E.Eb.transpose() * s.Tb}));
  rep.add("6.39", t39);

  // Slackness.
  double s41 = 0.0, s42 = 0.0, s43 = 0.0, s45 = 0.0, s44 = 0.0;
  for (int j = 0; j < k; ++j) {
    const Node& z = zk.nodes[j];
    const Vec y = z.x - z.u;
    const double atol = default_active_tol(y);
    const Vec& zeta = s.zeta[j];
    const double ztol = tol * (1.0 + zeta.norm());
    for (int i = 0; i < set.size(); ++i) {
      const double gi = set.value(i, y);
      const double eta = cert.eta[j][i];
      const double sig = s.sigma[j][i];
      const double ip = set.gradient(i, y).dot(zeta);
      if (gi > atol) s41 = std::max(s41, std::abs(eta));
      if (gi > atol || (eta <= tol && ip > ztol)) s42 = std::max(s42, std::abs(sig));
      if (gi <= atol && eta <= tol && ip < -ztol) s43 = std::max(s43, std::max(0.0, -sig));
      if (eta > tol) s45 = std::max(s45, std::abs(ip));
    }
  }
  for (int i = 0; i < set.size(); ++i) {
    s44 = std::max(s44, std::max(0.0, -s.eta_k[i]));
    if (gT[i] > default_active_tol(yT)) s44 = std::max(s44, std::abs(s.eta_k[i]));
  }
  rep.add("6.41", s41);
  rep.add("6.42", s42);
  rep.add("6.43", s43);
  rep.add("6.44", s44);
  rep.add("6.45", s45);
  if (!cert.endpoint_feasible) rep.add("endpoint", -sup(-gT.cwiseMin(0.0)), "terminal constraint violated");

  double nt = lambda + s.p[0].u.norm();
  for (int j = 1; j <= k; ++j) nt += s.pd[j].norm();
  cert.nontriviality = nt;
  rep.add_positive("6.31", nt);
  return cert;
}

ContinuousCertificate verify_continuous_certificate(const ProblemSpec& spec, const Reference& candidate,
                                                    const ContinuousCertificateData& data,
                                                    int grid_points, double tol) {
  if (spec.time_dependent_costs())
    throw DomainError("continuous certificate requires time-independent running costs");
  if (grid_points < 3) throw DomainError("grid needs at least 3 points");
  const MovingSet& set = spec.set;
  const Dims& d = spec.dims;
  const double lam = data.lambda;
  const double T = spec.T;
  const int N = grid_points - 1;
  const double dt = T / N;
  const Channels ch = channels(spec.controls);

  ContinuousCertificate out;
  out.data = data;
  out.report.tol = tol;
  out.grid.resize(N + 1);
  for (int i = 0; i <= N; ++i) out.grid[i] = i == N ? T : i * dt;

  std::vector<Node> Z(N + 1), DZ(N + 1), P(N + 1), PD(N + 1), Q(N + 1), W(N + 1), V(N + 1);
  std::vector<Vec> QYD(N + 1), Fx(N + 1), Fb(N + 1), Gd(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double t = out.grid[i];
    Z[i] = candidate.value(t);
    DZ[i] = candidate.rate(t);
    P[i] = data.p(t);
    PD[i] = data.p_dot(t);
    Q[i] = data.q(t);
    QYD[i] = data.qy_dot(t);
    gradient_selection(spec, t, Z[i], DZ[i], W[i], V[i]);
    Fx[i] = spec.f2.jac_x(Z[i].b, Z[i].x).transpose() * Q[i].y;
    Fb[i] = spec.f2.jac_c(Z[i].b, Z[i].x).transpose() * Q[i].y;
    Gd[i] = data.gamma_density ? data.gamma_density(t) : Vec(Vec::Zero(d.n));
  }
  // Componentwise tail integrals over [t_i, T].
  auto tails = [&](const std::vector<Vec>& f, int dim) {
    std::vector<Vec> r(N + 1, Vec::Zero(dim));
    std::vector<double> col(N + 1);
    for (int c = 0; c < dim; ++c) {
      for (int i = 0; i <= N; ++i) col[i] = f[i][c];
      auto t = tail_integrals(col, dt);
      for (int i = 0; i <= N; ++i) r[i][c] = t[i];
    }
    return r;
  };
  std::vector<Vec> qy(N + 1);
  for (int i = 0; i <= N; ++i) qy[i] = Q[i].y;
  const auto Iy = tails(qy, d.n);
  const auto Ix = tails(Fx, d.n);
  const auto Ib = tails(Fb, d.d);
  const auto Ig = tails(Gd, d.n);
  const Vec atom = data.gamma_atom.size() ? data.gamma_atom : Vec(Vec::Zero(d.n));

  double r72 = 0, r74 = 0, r75 = 0, r76 = 0, r77 = 0, r78 = 0, r79 = 0;
  out.eta.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    const Node& z = Z[i];
    const Node& dz = DZ[i];
    const Vec y = z.x - z.u;
    const double atol = default_active_tol(y);
    const Vec lhs = dz.x + spec.f1(z.a, z.x) + z.y;
    Vec eta;
    NnlsResult sol = active_nnls(set, y, lhs, atol, eta);
    out.eta[i] = eta;
    r72 = std::max(r72, sol.residual);
    const Vec zc = lam * V[i].x - Q[i].x;
    for (int c = 0; c < set.size(); ++c) {
      if (set.value(c, y) > atol) r74 = std::max(r74, std::abs(eta[c]));
      if (eta[c] > tol) r75 = std::max(r75, std::abs(set.gradient(c, y).dot(zc)));
    }
    // (7.6)
    const Mat F1x = spec.f1.jac_x(z.a, z.x);
    const Mat F1a = spec.f1.jac_c(z.a, z.x);
    r76 = std::max(r76, sup(PD[i].x - lam * W[i].x - F1x.transpose() * zc));
    r76 = std::max(r76, sup(PD[i].y - zc));
    if (ch.u) r76 = std::max(r76, sup(PD[i].u - lam * W[i].u));
    if (ch.a) r76 = std::max(r76, sup(PD[i].a - lam * W[i].a - F1a.transpose() * zc));
    if (ch.b) r76 = std::max(r76, sup(PD[i].b - lam * W[i].b));
    // (7.7)
    if (ch.u) r77 = std::max(r77, sup(Q[i].u - lam * V[i].u));
    if (ch.a) r77 = std::max(r77, sup(Q[i].a - lam * V[i].a));
    if (ch.b) r77 = std::max(r77, sup(Q[i].b - lam * V[i].b));
    // (7.8)
    const Vec G = atom + Ig[i];
    r78 = std::max(r78, sup(Q[i].x - (P[i].x + G + Ix[i])));
    r78 = std::max(r78, sup(Q[i].y - (P[i].y - Iy[i])));
    if (ch.u) r78 = std::max(r78, sup(Q[i].u - (P[i].u - G)));
    if (ch.a) r78 = std::max(r78, sup(Q[i].a - P[i].a));
    if (ch.b) r78 = std::max(r78, sup(Q[i].b - (P[i].b + Ib[i])));
    // (7.9)
    r79 = std::max(r79, sup(QYD[i] - (lam * V[i].x - P[i].x - G - Ix[i] + Q[i].y)));
  }

  ResidualReport& rep = out.report;
  rep.add("7.2", r72);
  rep.add("7.4", r74);
  rep.add("7.5", r75);
  rep.add("7.6", r76, ch.u ? "" : "u block not a decision variable");
  if (ch.u || ch.a || ch.b)
    rep.add("7.7", r77);
  else
    rep.add_na("7.7", "no control channel is a decision variable");
  rep.add("7.8", r78, ch.u ? "" : "u block not a decision variable");
  rep.add("7.9", r79);

  const Node& zT = Z[N];
  const Vec yT = zT.x - zT.u;
  const Vec etaT = data.eta_T.size() ? data.eta_T : Vec(Vec::Zero(set.size()));
  const Vec normal = set.jacobian(yT).transpose() * etaT;
  const Vec gphi = spec.phi.is_zero() ? Vec(Vec::Zero(d.n)) : spec.phi.gradient(T, zT.x);
  rep.add("7.10", std::max(sup(-P[N].x + normal - lam * gphi), sup(P[N].y)));
  if (ch.u || ch.a || ch.b) {
    double r = 0.0;
    if (ch.u) r = std::max(r, sup(P[N].u + normal));
    if (ch.a) r = std::max(r, sup(P[N].a));
    if (ch.b) r = std::max(r, sup(P[N].b));
    rep.add("7.11", r);
  } else {
    rep.add_na("7.11", "no control channel is a decision variable");
  }
  double r713 = 0.0;
  const double atolT = default_active_tol(yT);
  for (int c = 0; c < set.size(); ++c) {
    r713 = std::max(r713, std::max(0.0, -etaT[c]));
    if (set.value(c, yT) > atolT) r713 = std::max(r713, std::abs(etaT[c]));
  }
  rep.add("7.13", r713);

  std::vector<double> qn(N + 1);
  for (int i = 0; i <= N; ++i) qn[i] = Q[i].y.norm();
  const double int_qy = tail_integrals(qn, dt)[0];
  const double pT = P[N].stacked().norm();
  const double qu0 = Q[0].u.norm();
  rep.add_positive("7.14", lam + qu0 + pT + int_qy);
  const Node z0 = Z[0];
  const Vec g0 = set.values(spec.x0 - z0.u);
  if (set.size() > 0 && g0.minCoeff() > default_active_tol(spec.x0 - z0.u))
    rep.add_positive("ench:1", lam + pT + int_qy);
  else
    rep.add_na("ench:1", "initial state on the boundary");
  const Vec gT = set.values(yT);
  if (set.size() > 0 && gT.minCoeff() > atolT)
    rep.add_positive("ench:2", lam + qu0 + int_qy);
  else
    rep.add_na("ench:2", "terminal state on the boundary");
  return out;
}

ContinuousCertificateData example83_certificate_data(const AnalyticMode& mode, double lambda) {
  const double v1 = mode.v1, v2 = mode.v2;
  const double P = v1 + v2, D = v1 - v2;
  const Reference sol = mode.solution;
  // Q_i(t) is the integral of q^y_i over [t, 1]; the second component takes D -> -D.
  auto Qd = [P](double t, double Dv) {
    return P / 2 * std::exp(t - 1) - Dv / 6 * std::exp(1 - t) + Dv / 6 * std::exp(2 * t - 2) - P / 2;
  };
  auto Qdd = [P](double t, double Dv) {
    return P / 2 * std::exp(t - 1) + Dv / 6 * std::exp(1 - t) + Dv / 3 * std::exp(2 * t - 2);
  };
  // p^y_i(t) = integral of q^x_i over [t, 1].
  auto py = [](double t, double vi, double Dv) {
    return (vi - Dv / 2) * (1 - t) + Dv / 3 * (std::exp(1 - t) - 1) + Dv / 12 * (1 - std::exp(2 * t - 2));
  };
  auto qx = [](double t, double vi, double Dv) {
    return vi + Dv / 3 * std::exp(1 - t) + Dv / 6 * std::exp(2 * t - 2) - Dv / 2;
  };
  const double x2T = sol.value(1.0).x[1];
  Vec pxT(2);
  pxT << 0.0, -lambda * x2T;
  Vec v(2);
  v << lambda * v1, lambda * v2;
  // Multipliers scale linearly with lambda.
  const double L = lambda;

  ContinuousCertificateData c;
  c.lambda = lambda;
  c.gamma_atom = v - pxT;
  c.eta_T = Vec::Zero(2);
  c.p = [=](double t) {
    Node n = Node::zeros({2, 2, 0});
    n.x = pxT;
    n.y << L * py(t, v1, D), L * py(t, v2, -D);
    return n;
  };
  c.p_dot = [=](double t) {
    Node n = Node::zeros({2, 2, 0});
    n.y << -L * qx(t, v1, D), -L * qx(t, v2, -D);
    return n;
  };
  c.q = [=](double t) {
    Node n = Node::zeros({2, 2, 0});
    n.x << L * qx(t, v1, D), L * qx(t, v2, -D);
    n.y << -L * Qd(t, D), -L * Qd(t, -D);
    return n;
  };
  c.qy_dot = [=](double t) {
    Vec r(2);
    r << -L * Qdd(t, D), -L * Qdd(t, -D);
    return r;
  };
  return c;
}

ContinuousCertificate example83_certificate(Mode mode, int grid_points, double tol) {
  const AnalyticMode m = example83_best(mode);
  return verify_continuous_certificate(example83_spec(), m.solution, example83_certificate_data(m, 1.0),
                                       grid_points, tol);
}

}  // namespace sweep
