#include "sweep/circuits.hpp"

#include <cmath>
#include <stdexcept>

namespace sweep {

namespace {

const double kE = std::exp(1.0);
const double kR2 = std::sqrt(2.0);

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw DomainError(std::string("circuit parameter ") + what + " must be positive");
}

Lipschitz linear_lipschitz(const Mat& A1, const Mat& A2, bool f1_on_state) {
  Eigen::JacobiSVD<Mat> s1(A1), s2(A2);
  double n1 = s1.singularValues()(0), n2 = s2.singularValues()(0);
  Lipschitz lip;
  lip.L = std::max(n1, n2);
  lip.L1 = n1;
  lip.L2 = n2;
  lip.alpha1 = f1_on_state ? n1 : 0.0;
  lip.alpha2 = n2;
  return lip;
}

// Oscillatory part of the family: x1 = 1 - s t / 2 + D(t), x2 = 1 - s t / 2 - D(t), with d = v1 - v2.
struct Family {
  double d, s;
  double A() const { return d / 6.0 * std::exp(-2.0) - d / 3.0 * kE; }
  double B() const { return d / 18.0 * std::exp(-2.0) + 2.0 * d / 9.0 * kE; }
  double E(double t) const { return std::exp(1.0 - t) / 3.0 + std::exp(2.0 * t - 2.0) / 6.0; }
  double dE(double t) const { return -std::exp(1.0 - t) / 3.0 + std::exp(2.0 * t - 2.0) / 3.0; }
  double D(double t) const {
    return -d / 18.0 * std::exp(2.0 * t - 2.0) + d / 9.0 * std::exp(1.0 - t) +
           std::cos(kR2 * t) * A() / 3.0 - std::sin(kR2 * t) * B() / kR2;
  }
  double dD(double t) const {
    return -d / 9.0 * std::exp(2.0 * t - 2.0) - d / 9.0 * std::exp(1.0 - t) -
           kR2 / 3.0 * std::sin(kR2 * t) * A() - std::cos(kR2 * t) * B();
  }
  // Antiderivative of D.
  double F(double t) const {
    return -d / 36.0 * std::exp(2.0 * t - 2.0) - d / 9.0 * std::exp(1.0 - t) +
           std::sin(kR2 * t) * A() / (3.0 * kR2) + std::cos(kR2 * t) * B() / 2.0;
  }
};

double integral_E() { return -0.25 + kE / 3.0 - std::exp(-2.0) / 12.0; }

double integral_E2() {
  return (kE * kE - 1.0) / 18.0 + (1.0 - std::exp(-4.0)) / 144.0 + (1.0 - std::exp(-1.0)) / 9.0;
}

double v1_of(Mode mode, double v2) {
  switch (mode) {
    case Mode::i: return v2 - (v2 - 1.0) / case_constant(Mode::i);
    case Mode::ii: return v2 + (v2 - 1.0) / case_constant(Mode::ii);
    case Mode::iii: return 1.0;
  }
  return 1.0;
}

}  // namespace

ProblemSpec current_source_instance(const CircuitParams& p,
                                    const std::function<double(double)>& current) {
  require_positive(p.L1, "L1");
  require_positive(p.L2, "L2");
  require_positive(p.C1, "C1");
  require_positive(p.C2, "C2");
  require_positive(p.T, "T");
  if (p.R1 < 0.0 || p.R2 < 0.0) throw DomainError("circuit resistances must be nonnegative");
  if (p.lambda_T < 0.0 || p.lambda_P < 0.0 || p.lambda_I < 0.0 ||
      p.lambda_T + p.lambda_P + p.lambda_I <= 0.0)
    throw DomainError("cost weights must be nonnegative and not all zero");
  if (!current) throw DomainError("current profile is required");

  const double i0 = current(0.0);
  ProblemSpec spec;
  spec.name = "current-source";
  spec.dims = Dims{2, 0, 2};
  spec.set = MovingSet::orthant(2);
  Mat A1(2, 2);
  A1 << (p.R1 + p.R2) / p.L1, -p.R2 / p.L1, -p.R2 / p.L2, (p.R1 + p.R2) / p.L2;
  Mat A2 = Mat::Zero(2, 2);
  A2(0, 0) = 1.0 / (p.L1 * p.C1);
  A2(1, 1) = 1.0 / (p.L2 * p.C2);
  spec.f1 = Drift::linear(A1, Mat::Zero(2, 0), Vec::Zero(2));
  spec.f2 = Drift::linear(A2, Mat::Identity(2, 2), Vec::Zero(2));
  spec.lipschitz = linear_lipschitz(A1, A2, true);

  Mat Qphi = Mat::Zero(2, 2);
  Qphi(0, 0) = p.lambda_T;
  Vec qphi = Vec::Zero(2);
  qphi(0) = -p.lambda_T * i0;
  spec.phi = ScalarFn::quadratic(Qphi, qphi, 0.5 * p.lambda_T * i0 * i0);

  const int dim_l1 = 4 * 2 + 0 + 2;
  const int b1 = 3 * 2 + 0;
  Mat Q = Mat::Zero(dim_l1, dim_l1);
  Vec q = Vec::Zero(dim_l1);
  Q(0, 0) = p.lambda_P;
  q(0) = -p.lambda_P * i0;
  Q(b1, b1) = p.lambda_I;
  spec.l1 = ScalarFn::quadratic(Q, q, 0.5 * p.lambda_P * i0 * i0);
  spec.l2 = ScalarFn::zero(2);
  spec.l3 = ScalarFn::zero(0);
  spec.l4 = ScalarFn::zero(2);
  spec.T = p.T;
  spec.x0 = Vec::Zero(2);
  spec.x0(0) = i0;

  // One scalar control, the current, drives both u and b.
  spec.controls.Eu = Mat::Zero(2, 1);
  spec.controls.Eu(0, 0) = 1.0;
  spec.controls.Ea = Mat::Zero(0, 1);
  spec.controls.Eb = Mat::Zero(2, 1);
  spec.controls.Eb(0, 0) = 1.0 / (p.L1 * p.C1);
  const double scale = 1.0 / (p.L1 * p.C1);
  spec.nominal = [current, scale](double t) {
    double i = current(t);
    Node z = Node::zeros(Dims{2, 0, 2});
    z.u(0) = i;
    z.b(0) = scale * i;
    return z;
  };
  spec.validate();
  return spec;
}

ProblemSpec voltage_source_instance(const CircuitParams& p) {
  require_positive(p.L1, "L1");
  require_positive(p.L2, "L2");
  require_positive(p.C, "C");
  require_positive(p.T, "T");
  ProblemSpec spec;
  spec.name = "voltage-source";
  spec.dims = Dims{2, 2, 0};
  spec.set = MovingSet::orthant(2);
  Mat A1 = Mat::Zero(2, 2);
  A1(0, 0) = -1.0 / p.L1;
  A1(1, 1) = -1.0 / p.L2;
  Mat A2(2, 2);
  A2 << 1.0 / (p.L1 * p.C), -1.0 / (p.L1 * p.C), -1.0 / (p.L2 * p.C), 1.0 / (p.L2 * p.C);
  spec.f1 = Drift::linear(Mat::Zero(2, 2), A1, Vec::Zero(2));
  spec.f2 = Drift::linear(A2, Mat::Zero(2, 0), Vec::Zero(2));
  spec.lipschitz = linear_lipschitz(A1, A2, false);

  Mat Qphi = Mat::Zero(2, 2);
  Qphi(1, 1) = 1.0;
  spec.phi = ScalarFn::quadratic(Qphi, Vec::Zero(2), 0.0);
  const int dim_l1 = 4 * 2 + 2 + 0;
  Mat Q = Mat::Zero(dim_l1, dim_l1);
  Q(6, 6) = 1.0;
  Q(7, 7) = 1.0;
  spec.l1 = ScalarFn::quadratic(Q, Vec::Zero(dim_l1), 0.0);
  spec.l2 = ScalarFn::zero(2);
  spec.l3 = ScalarFn::zero(2);
  spec.l4 = ScalarFn::zero(0);
  spec.T = p.T;
  spec.x0 = Vec::Ones(2);
  spec.controls = ControlParam::only_a(spec.dims);
  spec.nominal = [](double) { return Node::zeros(Dims{2, 2, 0}); };
  spec.validate();
  return spec;
}

ProblemSpec example83_spec() {
  CircuitParams p;
  p.L1 = p.L2 = p.C = 1.0;
  p.T = 1.0;
  ProblemSpec spec = voltage_source_instance(p);
  spec.name = "example83";
  spec.nominal = [](double) {
    Node z = Node::zeros(Dims{2, 2, 0});
    z.a.setConstant(-1.0);
    return z;
  };
  return spec;
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::i: return "i";
    case Mode::ii: return "ii";
    case Mode::iii: return "iii";
  }
  return "iii";
}

Mode parse_mode(const std::string& name) {
  if (name == "i") return Mode::i;
  if (name == "ii") return Mode::ii;
  if (name == "iii") return Mode::iii;
  throw DomainError("unknown mode '" + name + "' (expected i, ii or iii)");
}

double case_constant(Mode mode) {
  const double osc = -std::cos(kR2) / 9.0 * (std::exp(-2.0) / 2.0 - kE) +
                     std::sin(kR2) / (9.0 * kR2) * (std::exp(-2.0) / 2.0 + 2.0 * kE);
  switch (mode) {
    case Mode::i: return 4.0 / 9.0 + osc;
    case Mode::ii: return -5.0 / 9.0 + osc;
    case Mode::iii: return 0.0;
  }
  return 0.0;
}

AnalyticMode example83_family(double v1, double v2) {
  AnalyticMode m;
  m.v1 = v1;
  m.v2 = v2;
  const Family f{v1 - v2, v1 + v2};
  const double F0 = f.F(0.0);
  m.solution.T = 1.0;
  m.solution.value = [f, F0](double t) {
    Node z = Node::zeros(Dims{2, 2, 0});
    double base = 1.0 - f.s / 2.0 * t, D = f.D(t);
    z.x << base + D, base - D;
    double y1 = 2.0 * (f.F(t) - F0);
    z.y << y1, -y1;
    double e = f.E(t);
    z.a << (-f.s / 2.0) - f.d * e, (-f.s / 2.0) + f.d * e;
    return z;
  };
  m.solution.rate = [f](double t) {
    Node z = Node::zeros(Dims{2, 2, 0});
    double dD = f.dD(t);
    z.x << -f.s / 2.0 + dD, -f.s / 2.0 - dD;
    double dy = 2.0 * f.D(t);
    z.y << dy, -dy;
    double de = f.dE(t);
    z.a << -f.d * de, f.d * de;
    return z;
  };
  const double x2T = 1.0 - f.s / 2.0 - f.D(1.0);
  const double al1 = -f.s / 2.0, al2 = -f.s / 2.0;
  const double IE = integral_E(), IE2 = integral_E2();
  const double int_a1 = al1 * al1 - 2.0 * al1 * f.d * IE + f.d * f.d * IE2;
  const double int_a2 = al2 * al2 + 2.0 * al2 * f.d * IE + f.d * f.d * IE2;
  m.cost = 0.5 * x2T * x2T + 0.5 * (int_a1 + int_a2);
  auto sol = m.solution;
  m.cost_simpson = 0.5 * x2T * x2T +
                   0.5 * simpson([sol](double t) { return sol.value(t).a.squaredNorm(); }, 0.0, 1.0, 2000);
  m.x3 = [sol](double t) {
    Node z = sol.value(t);
    return z.a(1) + z.x(1);
  };
  return m;
}

AnalyticMode example83_analytic(Mode mode, double v2) {
  if (mode == Mode::iii) v2 = 1.0;
  AnalyticMode m = example83_family(v1_of(mode, v2), v2);
  m.mode = mode;
  m.c = case_constant(mode);
  return m;
}

double example83_cost(Mode mode, double v2) { return example83_analytic(mode, v2).cost; }

ModeOptimum example83_optimize_mode(Mode mode) {
  ModeOptimum out;
  if (mode == Mode::iii) {
    out.v2 = 1.0;
    out.cost = example83_cost(mode, 1.0);
    out.evaluations = 1;
    return out;
  }
  auto J = [&](double v) {
    ++out.evaluations;
    return example83_cost(mode, v);
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -10.0, hi = 10.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = J(x1), f2 = J(x2);
  while (hi - lo > 1e-6) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = J(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = J(x2);
    }
  }
  double v = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    const double s = 1e-4 * (1.0 + std::abs(v));
    double jm = J(v - s), j0 = J(v), jp = J(v + s);
    double d2 = (jp - 2.0 * j0 + jm) / (s * s);
    if (!(d2 > 0.0)) break;
    double step = ((jp - jm) / (2.0 * s)) / d2;
    v -= step;
    if (std::abs(step) < 1e-13 * (1.0 + std::abs(v))) break;
  }
  out.v2 = v;
  out.cost = J(v);
  return out;
}

AnalyticMode example83_best(Mode mode) {
  return example83_analytic(mode, example83_optimize_mode(mode).v2);
}

}  // namespace sweep
