#include "sweep/circuits.hpp"
#include "sweep/transcribe.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace sweep;
using Catch::Matchers::WithinAbs;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// x' = a on the half line, cost x(1)^2 / 2 + integral a^2 / 2; optimum a = -1/2, cost 1/4.
ProblemSpec scalar_lq() {
  ProblemSpec s;
  s.name = "lq";
  s.dims = {1, 1, 0};
  s.set = MovingSet::orthant(1);
  s.f1 = Drift::linear(Mat::Zero(1, 1), -Mat::Identity(1, 1), Vec::Zero(1));
  s.f2 = Drift::zero(1, 0);
  s.phi = ScalarFn::quadratic(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
  Mat Q = Mat::Zero(5, 5);
  Q(3, 3) = 1.0;
  s.l1 = ScalarFn::quadratic(Q, Vec::Zero(5), 0.0);
  s.l2 = ScalarFn::zero(1);
  s.l3 = ScalarFn::zero(1);
  s.l4 = ScalarFn::zero(0);
  s.x0 = Vec::Ones(1);
  s.controls = ControlParam::only_a(s.dims);
  s.nominal = [](double) {
    Node z = Node::zeros({1, 1, 0});
    z.a[0] = -0.5;
    return z;
  };
  s.validate();
  return s;
}

Reference lq_optimum() {
  Reference r;
  r.T = 1.0;
  r.value = [](double t) {
    Node z = Node::zeros({1, 1, 0});
    z.x[0] = 1.0 - 0.5 * t;
    z.a[0] = -0.5;
    return z;
  };
  r.rate = [](double) {
    Node z = Node::zeros({1, 1, 0});
    z.x[0] = -0.5;
    return z;
  };
  return r;
}

}  // namespace

TEST_CASE("building around the exact case iii arc") {
  ProblemSpec spec = example83_spec();
  AnalyticMode m = example83_analytic(Mode::iii, 1.0);
  DiscreteProblem P = build(spec, m.solution, 100);
  CHECK(P.k() == 100);
  CHECK(P.dynamics_constraints() == 100);
  CHECK(P.localized());
  CHECK(P.epsilon == Catch::Approx(default_epsilon(m.solution, P.mesh)));
  DiscreteEvaluation ev = P.evaluate(P.initial_guess);
  CHECK_THAT(ev.cost, WithinAbs(1.0, 1e-9));
  CHECK_THAT(ev.energy, WithinAbs(0.0, 1e-20));
  CHECK(ev.violation == 0.0);
}

TEST_CASE("infinite radius drops localization") {
  ProblemSpec spec = example83_spec();
  DiscreteProblem P = build(spec, example83_best(Mode::i).solution, 20, kInf);
  CHECK_FALSE(P.localized());
  DiscreteProblem one = build(spec, example83_best(Mode::i).solution, 1);
  CHECK(one.k() == 1);
  CHECK(one.initial_guess.nodes.size() == 2);
}

TEST_CASE("horizon mismatch is rejected") {
  ProblemSpec spec = example83_spec();
  Reference r = example83_analytic(Mode::iii, 1.0).solution;
  r.T = 2.0;
  CHECK_THROWS_AS(build(spec, r, 10), BuildError);
}

TEST_CASE("energy term equals the interval sums for a polygonal reference") {
  ProblemSpec spec = example83_spec();
  DiscreteProblem base = build(spec, example83_best(Mode::i).solution, 16);
  Reference poly = Reference::from_trajectory(base.initial_guess);
  DiscreteProblem P = build(spec, poly, 16, kInf);
  for (double v : P.variance) CHECK(v < 1e-20);
  std::mt19937 rng(4);
  std::normal_distribution<double> N(0.0, 0.05);
  std::vector<Vec> c = P.coordinates(P.initial_guess);
  for (std::size_t j = 1; j < c.size(); ++j)
    for (int i = 0; i < c[j].size(); ++i) c[j][i] += N(rng);
  Trajectory z = P.trajectory(c);
  double energy = 0.0;
  for (int j = 0; j < P.k(); ++j) {
    const double h = P.mesh.h(j);
    Node d = (z.nodes[j + 1] - z.nodes[j]) - (P.initial_guess.nodes[j + 1] - P.initial_guess.nodes[j]);
    energy += d.squared_norm() / h;
  }
  DiscreteEvaluation ev = P.evaluate(z);
  CHECK_THAT(ev.energy, WithinAbs(energy, 1e-12 * (1 + energy)));
  CHECK_THAT(ev.penalty, WithinAbs(0.5 * energy, 1e-12 * (1 + energy)));
}

TEST_CASE("adjoint gradient matches central differences") {
  ProblemSpec spec = example83_spec();
  DiscreteProblem P = build(spec, example83_best(Mode::i).solution, 12);
  ReducedObjective obj;
  obj.problem = &P;
  obj.node_multiplier.assign(P.k(), 0.3);
  obj.energy_multiplier = 0.2;
  obj.endpoint_multiplier = Vec::Constant(2, 0.1);
  obj.weight = 5.0;
  std::mt19937 rng(8);
  std::normal_distribution<double> N(0.0, 0.1);
  for (int trial = 0; trial < 5; ++trial) {
    Vec v = obj.encode(P.coordinates(P.initial_guess));
    for (int i = 0; i < v.size(); ++i) v[i] += N(rng);
    Vec ga, gc;
    const double fa = obj.value_gradient(v, ga, GradientMode::adjoint);
    const double fc = obj.value_gradient(v, gc, GradientMode::central);
    CHECK_THAT(fa, WithinAbs(fc, 1e-12 * (1 + std::abs(fa))));
    CHECK((ga - gc).norm() <= 1e-5 * (1.0 + gc.norm()));
  }
}

TEST_CASE("solve from the exact case iii arc does not increase the cost") {
  ProblemSpec spec = example83_spec();
  DiscreteProblem P = build(spec, example83_analytic(Mode::iii, 1.0).solution, 50);
  SolveReport rep = solve(P);
  CHECK(rep.cost <= P.cost(P.initial_guess) + 1e-6);
  CHECK(rep.constraint_violation <= 1e-6);
}

TEST_CASE("trivial stationary problem solves at zero cost") {
  ProblemSpec spec;
  spec.name = "still";
  spec.dims = {1, 1, 0};
  spec.set = MovingSet::orthant(1);
  spec.f1 = Drift::zero(1, 1);
  spec.f2 = Drift::zero(1, 0);
  spec.phi = ScalarFn::zero(1);
  spec.l1 = ScalarFn::zero(5);
  spec.l2 = ScalarFn::zero(1);
  spec.l3 = ScalarFn::zero(1);
  spec.l4 = ScalarFn::zero(0);
  spec.x0 = Vec::Ones(1);
  spec.controls = ControlParam::only_a(spec.dims);
  spec.validate();
  Reference r;
  r.T = 1.0;
  r.value = [](double) {
    Node z = Node::zeros({1, 1, 0});
    z.x[0] = 1.0;
    return z;
  };
  r.rate = [](double) { return Node::zeros({1, 1, 0}); };
  SolveReport rep = solve(build(spec, r, 10));
  CHECK(rep.converged);
  CHECK(rep.cost == 0.0);
  for (const Node& z : rep.solution.nodes) CHECK(z.x[0] == 1.0);
}

TEST_CASE("scalar linear quadratic problem reaches its closed form optimum") {
  ProblemSpec spec = scalar_lq();
  DiscreteProblem P = build(spec, lq_optimum(), 20, kInf);
  std::vector<Vec> c(P.k() + 1, Vec::Constant(1, 0.3));
  c[0].setZero();
  SolveOptions opt;
  opt.start = P.trajectory(c);
  SolveReport rep = solve(P, opt);
  CHECK(rep.converged);
  CHECK_THAT(rep.cost, WithinAbs(0.25, 1e-9));
  CHECK_THAT(rep.solution.nodes.back().x[0], WithinAbs(0.5, 1e-6));
  for (int j = 0; j < P.k(); ++j) CHECK_THAT(rep.solution.nodes[j].a[0], WithinAbs(-0.5, 1e-5));
}

TEST_CASE("convergence study rows and csv") {
  ProblemSpec spec = scalar_lq();
  auto rows = convergence_study(spec, lq_optimum(), {4, 8}, kInf);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].k == 4);
  CHECK(rows[1].k == 8);
  for (const auto& r : rows) {
    CHECK(r.ok);
    CHECK_THAT(r.cost, WithinAbs(0.25, 1e-9));
    CHECK(r.sup_norm < 1e-6);
  }
  std::istringstream in(convergence_csv(rows));
  std::string line;
  int lines = 0;
  std::getline(in, line);
  CHECK(line.rfind("k,cost,", 0) == 0);
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
}
