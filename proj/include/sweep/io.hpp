#pragma once

#include "sweep/optimality.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace sweep {

class ParseError : public Error {
 public:
  using Error::Error;
};

// Host-registered data referenced by name from spec files.
struct Registry {
  std::map<std::string, MovingSet> sets;
  std::map<std::string, Drift> drifts;
  std::map<std::string, ScalarFn> costs;

  static Registry& global();
};

// Spec from a JSON document; see README for the schema.
ProblemSpec parse_spec(const nlohmann::json& doc, const Registry& registry = Registry::global());

// File path, or "builtin:example83".
ProblemSpec load_spec(const std::string& source);

// "builtin:example83-casei" (ii, iii; a dash before the case is accepted), or a trajectory CSV path.
Reference load_reference(const std::string& source, const ProblemSpec& spec);

// Closed-form mode behind a builtin reference name, if any.
bool builtin_mode(const std::string& source, Mode& mode);

// Header t,x1..xn,y1..yn,u1..un,a1..am,b1..bd; values printed with 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text);
Trajectory read_trajectory_csv(const std::string& path);

nlohmann::json to_json(const ResidualReport& report);
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const W12Distance& d);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sweep
