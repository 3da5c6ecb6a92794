#pragma once

#include "sweep/problem.hpp"

#include <vector>

namespace sweep {

struct StepResult {
  Vec x_next;
  Vec y_next;
  // Multipliers of (x_j - x_next)/h - f1 - y_next in -N at x_next, and residual of that identity.
  Vec eta;
  double residual = 0.0;
  bool domain_warning = false;
};

// One catching-up step: y_next = y_j + h f2(b_j, x_j), x_next = proj_{C + u_next}(x_j - h (f1 + y_next)).
StepResult step(const ProblemSpec& spec, const Vec& x_j, const Vec& y_j, const Vec& u_next,
                const Vec& a_j, const Vec& b_j, double h);

// Node-indexed controls j = 0..k.
struct ControlSequence {
  std::vector<Vec> u, a, b;
  static ControlSequence sample(const std::function<Node(double)>& f, const Mesh& mesh);
};

// Right-hand sides of the a priori velocity estimates and the computed velocities.
struct BoundReport {
  double l_tilde = 0.0;          // inner integral of |b| taken over [0, T]
  double l_tilde_running = 0.0;  // inner integral of |b| taken over [0, s]
  std::vector<double> velocity_residual;  // |xdot + f1 + y|
  std::vector<double> velocity;           // |xdot|
  std::vector<double> memory_rate;        // |ydot|
  std::vector<double> bound3, bound4, bound5;                  // literal l_tilde
  std::vector<double> bound3_running, bound4_running, bound5_running;
  std::vector<int> flagged;          // intervals exceeding a literal bound by more than 5%
  std::vector<int> flagged_running;  // same for the running variant
};

struct Simulation {
  Trajectory trajectory;
  BoundReport bounds;
  double max_step_residual = 0.0;  // max over steps of residual / (1 + |x_j| / h)
  bool domain_warning = false;
};

Simulation simulate(const ProblemSpec& spec, const Mesh& mesh, const ControlSequence& controls);

BoundReport bound_report(const ProblemSpec& spec, const Trajectory& traj);

struct W12Distance {
  double sup_norm = 0.0;
  double l2_derivative = 0.0;  // integral of |zdot_1 - zdot_2|^2
};

W12Distance w12_distance(const Trajectory& t1, const Trajectory& t2);
// Against a continuous arc; sup over `subsamples` points per interval, integral by Simpson.
W12Distance w12_distance(const Trajectory& t1, const Reference& ref, int subsamples = 8);

struct Reconstruction {
  Trajectory trajectory;
  std::vector<Vec> eta;  // cone multipliers of the explicit inclusion at each node j < k
  W12Distance distance;
};

// Discrete feasible approximation of a continuous solution on a uniform mesh with k intervals.
// When u is not a decision variable (the parametrization leaves it fixed) the shift stays ū and
// the new state is projected back onto C + u_{j+1}.
Reconstruction reconstruct_discrete_feasible(const ProblemSpec& spec, const Reference& reference,
                                             int k);

// (e0 + sum_{k<i} sigma_k) * exp(sum_{k<i} (k rho_k + gamma_k))
double discrete_gronwall(double e0, const std::vector<double>& sigmas,
                         const std::vector<double>& rhos, const std::vector<double>& gammas, int i);

}  // namespace sweep
