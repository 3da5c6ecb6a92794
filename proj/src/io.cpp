#include "sweep/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sweep {

using nlohmann::json;

Registry& Registry::global() {
  static Registry r;
  return r;
}

namespace {

Vec vec_of(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// Rows of numbers; an absent entry gives a rows x cols zero matrix.
Mat mat_of(const json& parent, const char* key, int rows, int cols, const char* what) {
  if (!parent.contains(key)) return Mat::Zero(rows, cols);
  const json& j = parent.at(key);
  if (!j.is_array()) throw ParseError(std::string(what) + "." + key + ": expected a list of rows");
  if (static_cast<int>(j.size()) != rows)
    throw ParseError(std::string(what) + "." + key + ": expected " + std::to_string(rows) + " rows");
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    Vec row = vec_of(j[r], what);
    if (row.size() != cols)
      throw ParseError(std::string(what) + "." + key + ": expected " + std::to_string(cols) + " columns");
    M.row(r) = row.transpose();
  }
  return M;
}

std::string kind_of(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ParseError(std::string(what) + ": missing \"kind\"");
  return j.at("kind").get<std::string>();
}

std::string name_of(const json& j, const char* what) {
  if (!j.contains("name") || !j.at("name").is_string())
    throw ParseError(std::string(what) + ": registered entries need a \"name\"");
  return j.at("name").get<std::string>();
}

MovingSet parse_set(const json& j, int n, const Registry& reg) {
  const std::string kind = kind_of(j, "set");
  MovingSet set;
  if (kind == "orthant") {
    set = MovingSet::orthant(n);
  } else if (kind == "affine") {
    const json& A = j.at("A");
    const int s = static_cast<int>(A.size());
    set = MovingSet::affine(mat_of(j, "A", s, n, "set"), j.contains("c") ? vec_of(j.at("c"), "set.c")
                                                                          : Vec(Vec::Zero(s)));
  } else if (kind == "ball" || kind == "ball_exterior") {
    Vec c = vec_of(j.at("center"), "set.center");
    double r = j.at("radius").get<double>();
    set = kind == "ball" ? MovingSet::ball(c, r) : MovingSet::ball_exterior(c, r);
  } else if (kind == "registered") {
    auto it = reg.sets.find(name_of(j, "set"));
    if (it == reg.sets.end()) throw ParseError("set: unknown registered name " + name_of(j, "set"));
    set = it->second;
  } else {
    throw ParseError("set: unknown kind " + kind);
  }
  if (set.dim() != n) throw ParseError("set: dimension differs from x0");
  return set;
}

Drift parse_drift(const json& j, int n, int cdim, const char* what, const Registry& reg) {
  const std::string kind = kind_of(j, what);
  if (kind == "zero") return Drift::zero(n, cdim);
  if (kind == "linear" || kind == "affine") {
    Vec off = Vec::Zero(n);
    if (kind == "affine" && j.contains("c")) off = vec_of(j.at("c"), what);
    if (off.size() != n) throw ParseError(std::string(what) + ".c: expected n entries");
    return Drift::linear(mat_of(j, "A", n, n, what), mat_of(j, "B", n, cdim, what), off);
  }
  if (kind == "registered") {
    auto it = reg.drifts.find(name_of(j, what));
    if (it == reg.drifts.end()) throw ParseError(std::string(what) + ": unknown registered name");
    return it->second;
  }
  throw ParseError(std::string(what) + ": unknown kind " + kind);
}

ScalarFn parse_cost(const json& parent, const char* key, int dim, const Registry& reg) {
  if (!parent.contains(key)) return ScalarFn::zero(dim);
  const json& j = parent.at(key);
  const std::string kind = kind_of(j, key);
  if (kind == "zero") return ScalarFn::zero(dim);
  if (kind == "quadratic") {
    Vec q = j.contains("q") ? vec_of(j.at("q"), key) : Vec(Vec::Zero(dim));
    if (q.size() != dim) throw ParseError(std::string(key) + ".q: wrong length");
    double c = j.value("c", 0.0);
    return ScalarFn::quadratic(mat_of(j, "Q", dim, dim, key), q, c);
  }
  if (kind == "registered") {
    auto it = reg.costs.find(name_of(j, key));
    if (it == reg.costs.end()) throw ParseError(std::string(key) + ": unknown registered name");
    return it->second;
  }
  throw ParseError(std::string(key) + ": unknown kind " + kind);
}

int dim_from(const json& doc, const char* key, const char* nominal_key) {
  if (doc.contains("dims") && doc.at("dims").contains(key)) return doc.at("dims").at(key).get<int>();
  if (doc.contains("nominal") && doc.at("nominal").contains(nominal_key))
    return static_cast<int>(doc.at("nominal").at(nominal_key).size());
  return 0;
}

}  // namespace

ProblemSpec parse_spec(const json& doc, const Registry& reg) {
  try {
    ProblemSpec spec;
    spec.name = doc.value("name", std::string("spec"));
    if (!doc.contains("x0")) throw ParseError("spec: missing x0");
    spec.x0 = vec_of(doc.at("x0"), "x0");
    const int n = static_cast<int>(spec.x0.size());
    const int m = dim_from(doc, "m", "a");
    const int d = dim_from(doc, "d", "b");
    spec.dims = {n, m, d};
    spec.T = doc.value("T", 1.0);
    if (!doc.contains("set")) throw ParseError("spec: missing set");
    spec.set = parse_set(doc.at("set"), n, reg);
    if (doc.contains("constants")) {
      const json& c = doc.at("constants");
      RegularityConstants& k = spec.set.constants;
      k.M1 = c.value("M1", k.M1);
      k.M2 = c.value("M2", k.M2);
      k.M3 = c.value("M3", k.M3);
      k.beta = c.value("beta", k.beta);
      k.rho = c.value("rho", k.rho);
    }
    spec.f1 = doc.contains("f1") ? parse_drift(doc.at("f1"), n, m, "f1", reg) : Drift::zero(n, m);
    spec.f2 = doc.contains("f2") ? parse_drift(doc.at("f2"), n, d, "f2", reg) : Drift::zero(n, d);
    const json costs = doc.value("costs", json::object());
    spec.phi = parse_cost(costs, "phi", n, reg);
    spec.l1 = parse_cost(costs, "l1", 4 * n + m + d, reg);
    spec.l2 = parse_cost(costs, "l2", n, reg);
    spec.l3 = parse_cost(costs, "l3", m, reg);
    spec.l4 = parse_cost(costs, "l4", d, reg);
    if (doc.contains("lipschitz")) {
      const json& l = doc.at("lipschitz");
      spec.lipschitz.L = l.value("L", 0.0);
      spec.lipschitz.L1 = l.value("L1", 0.0);
      spec.lipschitz.L2 = l.value("L2", 0.0);
      spec.lipschitz.alpha1 = l.value("alpha1", 0.0);
      spec.lipschitz.alpha2 = l.value("alpha2", 0.0);
    }
    const json controls = doc.value("controls", json{{"kind", "identity"}});
    const std::string ck = controls.value("kind", std::string("matrix"));
    if (ck == "identity") {
      spec.controls = ControlParam::identity(spec.dims);
    } else if (ck == "only_a") {
      spec.controls = ControlParam::only_a(spec.dims);
    } else if (ck == "matrix") {
      int r = controls.value("r", -1);
      if (r < 0) throw ParseError("controls: matrix kind needs r");
      spec.controls.Eu = mat_of(controls, "Eu", n, r, "controls");
      spec.controls.Ea = mat_of(controls, "Ea", m, r, "controls");
      spec.controls.Eb = mat_of(controls, "Eb", d, r, "controls");
    } else {
      throw ParseError("controls: unknown kind " + ck);
    }
    // Affine-in-time nominal controls: value + t * rate.
    const json nom = doc.value("nominal", json::object());
    auto part = [&](const char* key, int dim) {
      Vec v = nom.contains(key) ? vec_of(nom.at(key), "nominal") : Vec(Vec::Zero(dim));
      if (v.size() != dim) throw ParseError(std::string("nominal.") + key + ": wrong length");
      return v;
    };
    const Vec u0 = part("u", n), a0 = part("a", m), b0 = part("b", d);
    const Vec ur = part("u_rate", n), ar = part("a_rate", m), br = part("b_rate", d);
    const Dims dims = spec.dims;
    spec.nominal = [=](double t) {
      Node z = Node::zeros(dims);
      z.u = u0 + t * ur;
      z.a = a0 + t * ar;
      z.b = b0 + t * br;
      return z;
    };
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("spec: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

ProblemSpec load_spec(const std::string& source) {
  if (source == "builtin:example83") return example83_spec();
  if (source.rfind("builtin:", 0) == 0) throw ParseError("unknown builtin spec " + source);
  json doc;
  try {
    doc = json::parse(read_file(source));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  return parse_spec(doc);
}

bool builtin_mode(const std::string& source, Mode& mode) {
  const std::string prefix = "builtin:example83-case";
  if (source.rfind(prefix, 0) != 0) return false;
  std::string rest = source.substr(prefix.size());
  if (!rest.empty() && rest[0] == '-') rest.erase(0, 1);
  try {
    mode = parse_mode(rest);
  } catch (const DomainError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return true;
}

Reference load_reference(const std::string& source, const ProblemSpec& spec) {
  Mode mode;
  if (builtin_mode(source, mode)) {
    if (spec.dims.n != 2 || spec.dims.m != 2 || spec.dims.d != 0)
      throw ParseError("builtin reference " + source + " needs the example83 dimensions");
    return example83_best(mode).solution;
  }
  if (source.rfind("builtin:", 0) == 0) throw ParseError("unknown builtin reference " + source);
  Trajectory traj = read_trajectory_csv(source);
  Dims d = traj.dims();
  if (d.n != spec.dims.n || d.m != spec.dims.m || d.d != spec.dims.d)
    throw ParseError(source + ": trajectory dimensions differ from the spec");
  return Reference::from_trajectory(traj);
}

std::string trajectory_csv(const Trajectory& traj) {
  const Dims d = traj.dims();
  std::string out = "t";
  auto head = [&](char c, int count) {
    for (int i = 1; i <= count; ++i) out += "," + std::string(1, c) + std::to_string(i);
  };
  head('x', d.n);
  head('y', d.n);
  head('u', d.n);
  head('a', d.m);
  head('b', d.d);
  out += "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (std::size_t j = 0; j < traj.nodes.size(); ++j) {
    put(traj.mesh.t[j]);
    Vec s = traj.nodes[j].stacked();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      out += ",";
      put(s[i]);
    }
    out += "\n";
  }
  return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  write_file(path, trajectory_csv(traj));
}

Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory csv: empty");
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "t") throw ParseError("trajectory csv: header must start with t");
  int count[5] = {0, 0, 0, 0, 0};
  const std::string order = "xyuab";
  int block = 0;
  for (std::size_t i = 1; i < cols.size(); ++i) {
    const std::string& c = cols[i];
    auto pos = c.empty() ? std::string::npos : order.find(c[0]);
    if (pos == std::string::npos || static_cast<int>(pos) < block)
      throw ParseError("trajectory csv: unexpected column " + c);
    block = static_cast<int>(pos);
    ++count[block];
  }
  if (count[1] != count[0] || count[2] != count[0])
    throw ParseError("trajectory csv: x, y and u need the same number of columns");
  const Dims dims{count[0], count[3], count[4]};
  Trajectory traj;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ParseError("trajectory csv: bad number on row " + std::to_string(row));
      vals.push_back(v);
    }
    if (vals.size() != cols.size())
      throw ParseError("trajectory csv: row " + std::to_string(row) + " has the wrong number of cells");
    traj.mesh.t.push_back(vals[0]);
    Vec s = Eigen::Map<Vec>(vals.data() + 1, static_cast<Eigen::Index>(vals.size() - 1));
    traj.nodes.push_back(Node::unstack(s, dims));
  }
  if (traj.nodes.size() < 2) throw ParseError("trajectory csv: needs at least two rows");
  try {
    traj.mesh.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("trajectory csv: ") + e.what());
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  try {
    return parse_trajectory_csv(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json to_json(const ResidualReport& report) {
  json out;
  out["tol"] = report.tol;
  out["all_pass"] = report.all_pass();
  json entries = json::array();
  for (const auto& e : report.entries) {
    json j{{"tag", e.tag}, {"applicable", e.applicable}, {"pass", e.pass}};
    if (e.applicable) j["residual"] = e.residual;
    if (!e.note.empty()) j["note"] = e.note;
    entries.push_back(j);
  }
  out["conditions"] = entries;
  return out;
}

json to_json(const SolveReport& r) {
  return json{{"cost", r.cost},
              {"terminal_cost", r.evaluation.terminal},
              {"running_cost", r.evaluation.running},
              {"energy", r.evaluation.energy},
              {"iterations", r.iterations},
              {"outer_iterations", r.outer_iterations},
              {"gradient_norm", r.gradient_norm},
              {"constraint_violation", r.constraint_violation},
              {"localization_active_nodes", r.localization_active_nodes},
              {"localization_active_energy", r.localization_active_energy},
              {"converged", r.converged},
              {"line_search_failure", r.line_search_failure},
              {"diagnostic", r.diagnostic}};
}

json to_json(const W12Distance& d) {
  return json{{"sup_norm", d.sup_norm}, {"l2_derivative", d.l2_derivative}};
}

}  // namespace sweep
