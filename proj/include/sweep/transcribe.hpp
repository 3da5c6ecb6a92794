#pragma once

#include "sweep/dynamics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sweep {

class BuildError : public Error {
 public:
  using Error::Error;
};

// Breakdown of J_k and of the constraints (5.1a)-(5.3) at one candidate.
struct DiscreteEvaluation {
  double cost = 0.0;
  double terminal = 0.0;
  double running = 0.0;
  double penalty = 0.0;  // half the energy sum
  double energy = 0.0;   // sum of the interval integrals of |slope - reference rate|^2
  std::vector<double> node_distance;  // |z_j - zbar(t_j)|, j < k
  Vec endpoint;                       // g(x_k - u_k)
  double violation = 0.0;
  bool node_localization_active = false;
  bool energy_localization_active = false;
};

// Transcribed problem (P_k) around a reference arc.
struct DiscreteProblem {
  ProblemSpec spec;
  Mesh mesh;
  Reference reference;
  double epsilon = 0.0;  // infinite disables (5.2) and (5.3)
  std::vector<Node> reference_nodes;       // zbar(t_j)
  std::vector<Node> reference_increments;  // zbar(t_{j+1}) - zbar(t_j)
  // Integral over interval j of |zbar_dot - increment / h|^2; zero for piecewise linear references.
  std::vector<double> variance;
  Trajectory initial_guess;

  int k() const { return mesh.k(); }
  int dynamics_constraints() const { return mesh.k(); }
  bool localized() const;
  DiscreteEvaluation evaluate(const Trajectory& z) const;
  double cost(const Trajectory& z) const { return evaluate(z).cost; }
  // Free-control coordinates c_j of a node sequence (least squares through the parametrization).
  std::vector<Vec> coordinates(const Trajectory& z) const;
  // Controls base(t_j) + E c_j.
  ControlSequence controls(const std::vector<Vec>& c) const;
  Trajectory trajectory(const std::vector<Vec>& c) const;
};

// 10% of the sup-norm of the reference over the mesh nodes.
double default_epsilon(const Reference& reference, const Mesh& mesh);

// epsilon <= 0 selects default_epsilon.
DiscreteProblem build(const ProblemSpec& spec, const Reference& reference, int k,
                      double epsilon = 0.0);

enum class GradientMode { adjoint, forward, central };

struct SolveOptions {
  int max_iterations = 3000;  // per outer iteration
  int max_outer = 12;
  double tolerance = 1e-6;             // max-norm of the reduced gradient
  double constraint_tolerance = 1e-6;  // on (5.1a)-(5.3)
  double penalty_start = 1.0;
  double penalty_factor = 10.0;
  double penalty_cap = 1e8;
  int memory = 10;
  GradientMode gradient = GradientMode::adjoint;
  // Starting node sequence; the initial guess of the problem when absent.
  std::optional<Trajectory> start;
};

struct SolveReport {
  Trajectory solution;
  DiscreteEvaluation evaluation;
  double cost = 0.0;
  int iterations = 0;
  int outer_iterations = 0;
  double gradient_norm = 0.0;
  double constraint_violation = 0.0;
  bool localization_active_nodes = false;   // (5.2)
  bool localization_active_energy = false;  // (5.3)
  std::vector<double> outer_violation;
  bool converged = false;
  bool line_search_failure = false;
  std::string diagnostic;
};

SolveReport solve(const DiscreteProblem& problem, const SolveOptions& options = {});

// Value and gradient of the augmented Lagrangian in the scaled slope variables; exposed for tests.
struct ReducedObjective {
  const DiscreteProblem* problem = nullptr;
  std::vector<double> node_multiplier;
  double energy_multiplier = 0.0;
  Vec endpoint_multiplier;
  double weight = 1.0;

  int size() const;
  Vec encode(const std::vector<Vec>& c) const;
  std::vector<Vec> decode(const Vec& v) const;
  double value(const Vec& v) const;
  double value_gradient(const Vec& v, Vec& grad, GradientMode mode) const;
};

struct ConvergenceRow {
  int k = 0;
  double cost = 0.0;
  double sup_norm = 0.0;
  double l2_derivative = 0.0;
  int iterations = 0;
  double constraint_violation = 0.0;
  bool localization_active = false;
  bool ok = true;
  std::string error;
};

std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, const Reference& reference,
                                              const std::vector<int>& ks, double epsilon = 0.0,
                                              const SolveOptions& options = {});

std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

}  // namespace sweep
