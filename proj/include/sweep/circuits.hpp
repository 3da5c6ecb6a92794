#pragma once

#include "sweep/problem.hpp"

#include <functional>
#include <string>

namespace sweep {

struct CircuitParams {
  double R1 = 0.0, R2 = 0.0;
  double L1 = 1.0, L2 = 1.0;
  double C1 = 1.0, C2 = 1.0;
  double C = 1.0;  // capacitor of the voltage-source circuit
  double T = 1.0;
  double lambda_T = 1.0, lambda_P = 0.0, lambda_I = 0.0;
};

// Current-source circuit: u = (i, 0), b = (i / (L1 C1), 0), C(t) = u(t) + R^2_+.
// The single free control is the current i; u and b are derived from it.
ProblemSpec current_source_instance(const CircuitParams& params,
                                    const std::function<double(double)>& current);

// Voltage-source circuit: C = R^2_+, f1 = A1 a with A1 = diag(-1/L1, -1/L2), f2 = A2 x,
// cost x2(T)^2 / 2 + 0.5 * integral |a|^2.
ProblemSpec voltage_source_instance(const CircuitParams& params);

// The fully specified instance with L1 = L2 = C = 1, T = 1, x0 = (1, 1).
ProblemSpec example83_spec();

enum class Mode { i, ii, iii };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

// Constant c of the v1(v2) relation; case iii has none and returns 0.
double case_constant(Mode mode);

struct AnalyticMode {
  Mode mode = Mode::iii;
  double v1 = 1.0;
  double v2 = 1.0;
  double c = 0.0;
  Reference solution;  // (x, y, u = 0, a) with rates
  double cost = 0.0;
  double cost_simpson = 0.0;  // cross-check of the closed-form cost
  std::function<double(double)> x3;  // derived observable a2 + x2
};

AnalyticMode example83_analytic(Mode mode, double v2);
// Closed-form member of the two-parameter family for arbitrary (v1, v2).
AnalyticMode example83_family(double v1, double v2);

double example83_cost(Mode mode, double v2);

struct ModeOptimum {
  double v2 = 0.0;
  double cost = 0.0;
  int evaluations = 0;
};

// Golden section on [-10, 10] followed by a Newton polish.
ModeOptimum example83_optimize_mode(Mode mode);

// Analytic mode with v2 at its optimum (case iii has no free parameter).
AnalyticMode example83_best(Mode mode);

}  // namespace sweep
