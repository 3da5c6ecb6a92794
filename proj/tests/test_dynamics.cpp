#include "sweep/circuits.hpp"
#include "sweep/dynamics.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace sweep;
using Catch::Matchers::WithinAbs;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Orthant in R^2 with f1 = offset, f2 = A2 x + b, zero costs, identity controls.
ProblemSpec plane(const Vec& offset, const Mat& A2, const Vec& x0, int d = 0) {
  ProblemSpec s;
  s.name = "plane";
  s.dims = {2, 0, d};
  s.set = MovingSet::orthant(2);
  s.f1 = Drift::linear(Mat::Zero(2, 2), Mat::Zero(2, 0), offset);
  s.f2 = Drift::linear(A2, Mat::Identity(2, d), Vec::Zero(2));
  s.phi = ScalarFn::zero(2);
  s.l1 = ScalarFn::zero(8 + d);
  s.l2 = ScalarFn::zero(2);
  s.l3 = ScalarFn::zero(0);
  s.l4 = ScalarFn::zero(d);
  s.x0 = x0;
  s.controls = ControlParam::identity(s.dims);
  s.validate();
  return s;
}

double sim_error(Mode mode, int k) {
  ProblemSpec spec = example83_spec();
  AnalyticMode m = example83_best(mode);
  Mesh mesh = Mesh::uniform(1.0, k);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample(m.solution.value, mesh));
  double err = 0.0;
  for (int j = 0; j <= k; ++j)
    err = std::max(err, (sim.trajectory.nodes[j].x - m.solution.value(mesh.t[j]).x).norm());
  return err;
}

}  // namespace

TEST_CASE("one interior step of the voltage-source instance") {
  ProblemSpec spec = example83_spec();
  StepResult r = step(spec, v2(1, 1), v2(0, 0), v2(0, 0), v2(-1, -1), Vec::Zero(0), 0.1);
  CHECK((r.y_next - v2(0, 0)).norm() == 0.0);
  CHECK((r.x_next - v2(0.9, 0.9)).norm() < 1e-15);
  CHECK(r.eta.norm() == 0.0);
}

TEST_CASE("zero data keeps an interior state") {
  ProblemSpec spec = plane(v2(0, 0), Mat::Zero(2, 2), v2(1, 2));
  StepResult r = step(spec, v2(1, 2), v2(0, 0), v2(0, 0), Vec::Zero(0), Vec::Zero(0), 0.3);
  CHECK((r.x_next - v2(1, 2)).norm() == 0.0);
}

TEST_CASE("boundary step clamps the Euler point") {
  // Euler point (0, 1) - 0.1 (1, -1) = (-0.1, 1.1); the one-step QP on the orthant clamps it.
  ProblemSpec spec = plane(v2(1, -1), Mat::Zero(2, 2), v2(0, 1));
  StepResult r = step(spec, v2(0, 1), v2(0, 0), v2(0, 0), Vec::Zero(0), Vec::Zero(0), 0.1);
  CHECK((r.x_next - v2(0, 1.1)).norm() < 1e-15);
  CHECK_THAT(r.eta[0], WithinAbs(1.0, 1e-12));
  CHECK(r.residual < 1e-12);
}

TEST_CASE("stationary simulation") {
  ProblemSpec spec = plane(v2(0, 0), Mat::Zero(2, 2), v2(1, 2));
  Mesh mesh = Mesh::uniform(1.0, 20);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample([&](double t) { return spec.nominal_controls(t); }, mesh));
  for (const Node& z : sim.trajectory.nodes) {
    CHECK((z.x - v2(1, 2)).norm() == 0.0);
    CHECK(z.y.norm() == 0.0);
  }
}

TEST_CASE("simulation stays feasible and certifies every step") {
  Mat A2(2, 2);
  A2 << 0.5, -1, 1, 0.2;
  ProblemSpec spec = plane(v2(0.3, -0.2), A2, v2(0.5, 0.1), 2);
  std::mt19937 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 50;
    Mesh mesh = Mesh::uniform(1.0, k);
    ControlSequence c;
    for (int j = 0; j <= k; ++j) {
      c.u.push_back(0.2 * v2(N(rng), N(rng)));
      c.a.push_back(Vec::Zero(0));
      c.b.push_back(v2(N(rng), N(rng)));
    }
    c.u[0] = v2(0, 0);
    Simulation sim = simulate(spec, mesh, c);
    for (const Node& z : sim.trajectory.nodes) CHECK(spec.set.values(z.x - z.u).minCoeff() >= -1e-9);
    CHECK(sim.max_step_residual <= 1e-8);
    CHECK(sim.trajectory.nodes[0].y.norm() == 0.0);
  }
}

TEST_CASE("memory stays zero without a kernel") {
  ProblemSpec spec = plane(v2(1, 1), Mat::Zero(2, 2), v2(1, 1));
  Mesh mesh = Mesh::uniform(1.0, 40);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample([&](double t) { return spec.nominal_controls(t); }, mesh));
  for (const Node& z : sim.trajectory.nodes) CHECK(z.y.norm() == 0.0);
  CHECK(sim.trajectory.nodes.back().x.minCoeff() >= 0.0);
}

TEST_CASE("case iii controls reproduce the exact arc") {
  for (int k : {100, 200, 400, 1000}) CHECK(sim_error(Mode::iii, k) <= 1e-12);
}

TEST_CASE("curved modes converge at first order") {
  for (Mode mode : {Mode::i, Mode::ii}) {
    CHECK(sim_error(mode, 1000) <= 5e-3);
    for (int k : {100, 200, 400}) {
      const double ratio = sim_error(mode, k) / sim_error(mode, 2 * k);
      CHECK(ratio >= 1.8);
      CHECK(ratio <= 2.2);
    }
  }
}

TEST_CASE("case i controls reach the boundary at T") {
  ProblemSpec spec = example83_spec();
  AnalyticMode m = example83_analytic(Mode::i, 0.5988481275);
  const int k = 1000;
  Mesh mesh = Mesh::uniform(1.0, k);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample(m.solution.value, mesh));
  CHECK(std::abs(sim.trajectory.nodes.back().x[0]) <= 5e-3);
}

TEST_CASE("velocity bound report covers every interval") {
  ProblemSpec spec = example83_spec();
  Mesh mesh = Mesh::uniform(1.0, 50);
  Simulation sim = simulate(spec, mesh, ControlSequence::sample([&](double t) { return spec.nominal_controls(t); }, mesh));
  CHECK(sim.bounds.velocity.size() == 50);
  CHECK(sim.bounds.bound3.size() == 50);
  CHECK(sim.bounds.bound3_running.size() == 50);
  CHECK(sim.bounds.l_tilde >= sim.bounds.l_tilde_running);
}

TEST_CASE("reconstruction of the exact case iii arc") {
  ProblemSpec spec = example83_spec();
  AnalyticMode m = example83_analytic(Mode::iii, 1.0);
  for (int k : {10, 37}) {
    Reconstruction r = reconstruct_discrete_feasible(spec, m.solution, k);
    for (int j = 0; j <= k; ++j) {
      const double t = r.trajectory.mesh.t[j];
      CHECK((r.trajectory.nodes[j].x - v2(1 - t, 1 - t)).norm() < 1e-12);
    }
  }
}

TEST_CASE("reconstruction distance shrinks under refinement on case i") {
  ProblemSpec spec = example83_spec();
  AnalyticMode m = example83_best(Mode::i);
  double prev_sup = 1e300, prev_l2 = 1e300;
  for (int k : {50, 100, 200, 400}) {
    Reconstruction r = reconstruct_discrete_feasible(spec, m.solution, k);
    CHECK(r.distance.sup_norm <= prev_sup);
    CHECK(r.distance.l2_derivative <= prev_l2);
    prev_sup = r.distance.sup_norm;
    prev_l2 = r.distance.l2_derivative;
  }
}

TEST_CASE("reconstruction keeps zero memory without a kernel") {
  ProblemSpec spec = plane(v2(0.5, 0.5), Mat::Zero(2, 2), v2(1, 1));
  Reference ref;
  ref.T = 1.0;
  ref.value = [](double t) {
    Node z = Node::zeros({2, 0, 0});
    z.x = v2(1 - 0.5 * t, 1 - 0.5 * t);
    return z;
  };
  ref.rate = [](double) {
    Node z = Node::zeros({2, 0, 0});
    z.x = v2(-0.5, -0.5);
    return z;
  };
  Reconstruction r = reconstruct_discrete_feasible(spec, ref, 25);
  for (const Node& z : r.trajectory.nodes) CHECK(z.y.norm() == 0.0);
}

TEST_CASE("discrete Gronwall examples") {
  std::vector<double> zero(10, 0.0), c(10, 0.25);
  CHECK(discrete_gronwall(2.0, zero, zero, zero, 10) == 2.0);
  CHECK_THAT(discrete_gronwall(0.0, c, zero, zero, 10), WithinAbs(2.5, 1e-15));
  CHECK_THROWS_AS(discrete_gronwall(-1.0, zero, zero, zero, 3), DomainError);
  std::vector<double> neg(10, -1.0);
  CHECK_THROWS_AS(discrete_gronwall(0.0, neg, zero, zero, 3), DomainError);
}

TEST_CASE("forward Gronwall recursion never exceeds the closed form") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> L(1, 50);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = L(rng);
    std::vector<double> s(n), r(n), g(n), e(n + 1);
    for (int j = 0; j < n; ++j) {
      s[j] = U(rng);
      r[j] = 0.05 * U(rng);
      g[j] = 0.1 * U(rng);
    }
    e[0] = U(rng);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      e[j + 1] = s[j] + r[j] * sum + (1 + g[j]) * e[j];
      sum += e[j];
    }
    for (int i = 0; i <= n; ++i)
      if (e[i] > discrete_gronwall(e[0], s, r, g, i) * (1 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("W12 distance examples") {
  Trajectory a;
  a.mesh = Mesh::uniform(1.0, 4);
  for (double t : a.mesh.t) {
    Node z = Node::zeros({1, 0, 0});
    z.x[0] = t;
    a.nodes.push_back(z);
  }
  W12Distance same = w12_distance(a, a);
  CHECK(same.sup_norm == 0.0);
  CHECK(same.l2_derivative == 0.0);
  Trajectory shifted = a;
  for (auto& z : shifted.nodes) z.y[0] += 3.0;
  W12Distance s = w12_distance(a, shifted);
  CHECK_THAT(s.sup_norm, WithinAbs(3.0, 1e-15));
  CHECK_THAT(s.l2_derivative, WithinAbs(0.0, 1e-15));
  Trajectory steep;
  steep.mesh = Mesh::uniform(1.0, 3);
  for (double t : steep.mesh.t) {
    Node z = Node::zeros({1, 0, 0});
    z.x[0] = 2 * t;
    steep.nodes.push_back(z);
  }
  W12Distance d = w12_distance(a, steep);
  CHECK_THAT(d.sup_norm, WithinAbs(1.0, 1e-14));
  CHECK_THAT(d.l2_derivative, WithinAbs(1.0, 1e-14));
  Trajectory longer = steep;
  longer.mesh = Mesh::uniform(2.0, 3);
  CHECK_THROWS_AS(w12_distance(a, longer), DomainError);
}
