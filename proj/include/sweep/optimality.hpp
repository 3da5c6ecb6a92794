#pragma once

#include "sweep/circuits.hpp"
#include "sweep/transcribe.hpp"

#include <string>
#include <vector>

namespace sweep {

// One checked condition, tagged by its equation label.
struct ResidualEntry {
  std::string tag;
  double residual = 0.0;  // sup-norm, or the left side for nontriviality tags
  bool applicable = true;
  bool pass = true;
  std::string note;
};

struct ResidualReport {
  double tol = 1e-8;
  std::vector<ResidualEntry> entries;

  void add(const std::string& tag, double residual, const std::string& note = {});
  // Passes when value > tol.
  void add_positive(const std::string& tag, double value, const std::string& note = {});
  void add_na(const std::string& tag, const std::string& note);
  const ResidualEntry* find(const std::string& tag) const;
  bool all_pass() const;
  double max_residual(const std::vector<std::string>& tags) const;
};

struct EtaResult {
  std::vector<Vec> eta;           // j = 0..k-1
  std::vector<double> residual;   // per node
  std::vector<int> violations;    // nodes with residual above tol
  double max_residual = 0.0;
};

// Multipliers of the explicit discrete inclusion at every node j < k.
EtaResult compute_eta(const ProblemSpec& spec, const Trajectory& traj, double tol = 1e-8);

struct CoderivativeVerdict {
  bool in_domain = true;
  bool member = false;
  Vec lambda;
  Vec sigma;
  double domain_residual = 0.0;  // max |lambda_i <grad g_i, z>|
  double residual = 0.0;         // distance of the candidate from the formula
  std::string witness;
};

// Right side of the coderivative formula for given multipliers; blocks (x, y, u, a, b).
Node coderivative_value(const ProblemSpec& spec, const Node& point, const Vec& z, double h,
                        const Vec& lambda, const Vec& sigma);

// Membership of candidate in D*F_h(point, w)(z).
CoderivativeVerdict coderivative_check(const ProblemSpec& spec, const Node& point, const Vec& w,
                                       const Vec& z, double h, const Node& candidate,
                                       double tol = 1e-9);

struct DiscreteCertificate {
  double lambda = 1.0;
  std::vector<Vec> eta;    // j = 0..k, eta_k the endpoint multiplier
  std::vector<Vec> sigma;  // j = 0..k-1
  std::vector<Node> p;     // (p^x, p^y, p^u, p^a, p^b), j = 0..k
  std::vector<Vec> pd;     // j = 0..k
  std::vector<Node> w, v;  // gradient selections, j = 0..k-1
  std::vector<Node> theta;
  std::vector<Vec> zeta;   // p^x_{j+1} - lambda (v^x_j + theta^x_j / h)
  double nontriviality = 0.0;
  bool endpoint_feasible = true;
  ResidualReport report;

  // Max over the primal-dual and transversality tags.
  double primal_dual_residual() const;
};

DiscreteCertificate assemble_discrete_certificate(const DiscreteProblem& problem, const Trajectory& zk,
                                                  double lambda = 1.0, double tol = 1e-8);

// Multiplier data of the continuous conditions; gamma is an atom at T plus a density.
struct ContinuousCertificateData {
  double lambda = 1.0;
  std::function<Node(double)> p;
  std::function<Node(double)> p_dot;
  std::function<Node(double)> q;
  std::function<Vec(double)> qy_dot;
  Vec gamma_atom;
  std::function<Vec(double)> gamma_density;  // empty means zero
  Vec eta_T;
};

struct ContinuousCertificate {
  ContinuousCertificateData data;
  std::vector<double> grid;
  std::vector<Vec> eta;  // on the grid
  ResidualReport report;
};

ContinuousCertificate verify_continuous_certificate(const ProblemSpec& spec, const Reference& candidate,
                                                    const ContinuousCertificateData& data,
                                                    int grid_points = 2001, double tol = 1e-8);

// Multipliers of the voltage-source instance for the family member (v1, v2).
ContinuousCertificateData example83_certificate_data(const AnalyticMode& mode, double lambda = 1.0);

ContinuousCertificate example83_certificate(Mode mode, int grid_points = 2001, double tol = 1e-8);

}  // namespace sweep
