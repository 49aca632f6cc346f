#ifndef STORYSIM_FORMATS_HPP
#define STORYSIM_FORMATS_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"
#include "storysim/hierarchical.hpp"
#include "storysim/irt.hpp"
#include "storysim/population.hpp"

namespace storysim {

using Json = nlohmann::json;

namespace jsonio {

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in, nullptr, true, true);  // allow comments
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw ConfigError("write failed: " + path);
}

inline const Json& require(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing");
  return *it;
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

inline std::uint64_t as_seed(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer seed");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  auto v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError(path + ": seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
  return j.get<bool>();
}

inline double number_or(const Json& parent, const char* key, const std::string& path, double def) {
  if (!parent.is_object() || !parent.contains(key)) return def;
  return as_number(parent[key], path + "." + key);
}

inline int int_or(const Json& parent, const char* key, const std::string& path, int def) {
  if (!parent.is_object() || !parent.contains(key)) return def;
  return as_int(parent[key], path + "." + key);
}

inline std::string string_or(const Json& parent, const char* key, const std::string& path,
                             const std::string& def) {
  if (!parent.is_object() || !parent.contains(key)) return def;
  return as_string(parent[key], path + "." + key);
}

inline bool bool_or(const Json& parent, const char* key, const std::string& path, bool def) {
  if (!parent.is_object() || !parent.contains(key)) return def;
  return as_bool(parent[key], path + "." + key);
}

}  // namespace jsonio

// ---- network files ---------------------------------------------------
// { "variables": [{"name", "states"}], "edges": [[parent, child]],
//   "cpts": [{"variable", "parents", "table"}] }
// CPT tables are flat, row-major: parent configurations in mixed radix with
// the first parent most significant, child states fastest.

inline Dag dag_from_json(const Json& j, const std::string& path) {
  Dag dag;
  const Json& vars = jsonio::require(j, "variables", path);
  if (!vars.is_array() || vars.empty())
    throw ConfigError(path + ".variables: expected a non-empty array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string vpath = path + ".variables[" + std::to_string(i) + "]";
    Variable v;
    v.name = jsonio::as_string(jsonio::require(vars[i], "name", vpath), vpath + ".name");
    const Json& states = jsonio::require(vars[i], "states", vpath);
    if (!states.is_array()) throw ConfigError(vpath + ".states: expected an array");
    for (std::size_t s = 0; s < states.size(); ++s)
      v.states.push_back(
          jsonio::as_string(states[s], vpath + ".states[" + std::to_string(s) + "]"));
    try {
      dag.add_variable(std::move(v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(vpath + ": " + e.what());
    }
  }
  if (j.contains("edges")) {
    const Json& edges = j["edges"];
    if (!edges.is_array()) throw ConfigError(path + ".edges: expected an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string epath = path + ".edges[" + std::to_string(e) + "]";
      if (!edges[e].is_array() || edges[e].size() != 2)
        throw ConfigError(epath + ": expected [parent, child]");
      try {
        dag.add_edge(jsonio::as_string(edges[e][0], epath + "[0]"),
                     jsonio::as_string(edges[e][1], epath + "[1]"));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(epath + ": " + ex.what());
      }
    }
  }
  ValidationReport report;
  validate_dag(dag, report);
  if (!report.ok()) throw ConfigError(path + ": " + report.issues.front().message);
  return dag;
}

inline Dag load_dag(const std::string& path) {
  return dag_from_json(jsonio::load_json_file(path), path);
}

inline BayesianNetwork network_from_json(const Json& j, const std::string& path) {
  BayesianNetwork net;
  net.dag = dag_from_json(j, path);
  const Json& cpts = jsonio::require(j, "cpts", path);
  if (!cpts.is_array()) throw ConfigError(path + ".cpts: expected an array");
  net.cpts.resize(static_cast<std::size_t>(net.size()));
  std::vector<bool> filled(static_cast<std::size_t>(net.size()), false);
  for (std::size_t k = 0; k < cpts.size(); ++k) {
    const std::string cpath = path + ".cpts[" + std::to_string(k) + "]";
    std::string name =
        jsonio::as_string(jsonio::require(cpts[k], "variable", cpath), cpath + ".variable");
    int v = net.dag.index_of(name);
    if (v < 0) throw ConfigError(cpath + ".variable: unknown variable '" + name + "'");
    if (filled[static_cast<std::size_t>(v)])
      throw ConfigError(cpath + ": duplicate CPT for '" + name + "'");
    Cpt c = make_cpt_shell(net.dag, v);
    if (cpts[k].contains("parents")) {
      const Json& parents = cpts[k]["parents"];
      if (!parents.is_array() || parents.size() != c.parents.size())
        throw ConfigError(cpath + ".parents: does not match the graph's in-edges for '" + name +
                          "'");
      for (std::size_t p = 0; p < c.parents.size(); ++p) {
        std::string pname =
            jsonio::as_string(parents[p], cpath + ".parents[" + std::to_string(p) + "]");
        if (net.dag.index_of(pname) != c.parents[p])
          throw ConfigError(cpath + ".parents[" + std::to_string(p) +
                            "]: expected '" + net.dag.variables[c.parents[p]].name + "'");
      }
    }
    const Json& table = jsonio::require(cpts[k], "table", cpath);
    if (!table.is_array() || table.size() != c.table.size())
      throw ConfigError(cpath + ".table: expected " + std::to_string(c.table.size()) +
                        " entries, got " + std::to_string(table.size()));
    for (std::size_t t = 0; t < c.table.size(); ++t)
      c.table[t] = jsonio::as_number(table[t], cpath + ".table[" + std::to_string(t) + "]");
    net.cpts[static_cast<std::size_t>(v)] = std::move(c);
    filled[static_cast<std::size_t>(v)] = true;
  }
  for (int v = 0; v < net.size(); ++v)
    if (!filled[static_cast<std::size_t>(v)])
      throw ConfigError(path + ".cpts: no table for variable '" + net.dag.variables[v].name +
                        "'");
  ValidationReport report = validate_network(net);
  if (!report.ok()) throw ConfigError(path + ": " + report.issues.front().message);
  return net;
}

inline BayesianNetwork load_network(const std::string& path) {
  return network_from_json(jsonio::load_json_file(path), path);
}

inline Json network_to_json(const BayesianNetwork& net) {
  Json j;
  j["variables"] = Json::array();
  for (const Variable& v : net.dag.variables)
    j["variables"].push_back({{"name", v.name}, {"states", v.states}});
  j["edges"] = Json::array();
  for (const auto& [p, c] : net.dag.edges)
    j["edges"].push_back({net.dag.variables[p].name, net.dag.variables[c].name});
  j["cpts"] = Json::array();
  for (const Cpt& c : net.cpts) {
    Json parents = Json::array();
    for (int p : c.parents) parents.push_back(net.dag.variables[p].name);
    j["cpts"].push_back({{"variable", net.dag.variables[c.child].name},
                         {"parents", std::move(parents)},
                         {"table", c.table}});
  }
  return j;
}

inline void save_network(const std::string& path, const BayesianNetwork& net) {
  jsonio::save_json_file(path, network_to_json(net));
}

// ---- environment files -----------------------------------------------
// { "mode": "linear"|"tree", "root": id, "questions": [{"id", "beta",
//   "branches": {"0": id, "1": id}}], "beta_prior": {"a", "b"} }
// Questions may carry fixed betas, or the file names a Beta prior the
// simulator draws from per run (then per-question betas are optional).

struct EnvironmentSpec {
  Environment env;
  std::optional<std::pair<double, double>> beta_prior;
};

inline EnvironmentSpec environment_from_json(const Json& j, const std::string& path) {
  EnvironmentSpec spec;
  std::string mode = jsonio::string_or(j, "mode", path, "linear");
  if (mode == "linear")
    spec.env.mode = EnvironmentMode::linear;
  else if (mode == "tree")
    spec.env.mode = EnvironmentMode::tree;
  else
    throw ConfigError(path + ".mode: expected \"linear\" or \"tree\", got \"" + mode + "\"");

  if (j.contains("beta_prior")) {
    const std::string bpath = path + ".beta_prior";
    double a = jsonio::as_number(jsonio::require(j["beta_prior"], "a", bpath), bpath + ".a");
    double b = jsonio::as_number(jsonio::require(j["beta_prior"], "b", bpath), bpath + ".b");
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError(bpath + ": shapes must be positive");
    spec.beta_prior = {a, b};
  }

  const Json& questions = jsonio::require(j, "questions", path);
  if (!questions.is_array() || questions.empty())
    throw ConfigError(path + ".questions: expected a non-empty array");
  for (std::size_t k = 0; k < questions.size(); ++k) {
    const std::string qpath = path + ".questions[" + std::to_string(k) + "]";
    Question q;
    q.id = jsonio::as_int(jsonio::require(questions[k], "id", qpath), qpath + ".id");
    if (questions[k].contains("beta"))
      q.beta = jsonio::as_number(questions[k]["beta"], qpath + ".beta");
    else if (!spec.beta_prior)
      throw ConfigError(qpath + ".beta: missing (no beta_prior to draw from)");
    if (questions[k].contains("branches")) {
      const Json& branches = questions[k]["branches"];
      if (!branches.is_object()) throw ConfigError(qpath + ".branches: expected an object");
      for (const auto& [ans, next] : branches.items()) {
        if (ans != "0" && ans != "1")
          throw ConfigError(qpath + ".branches: key must be \"0\" or \"1\", got \"" + ans + "\"");
        q.branches[ans == "1" ? 1 : 0] = jsonio::as_int(next, qpath + ".branches." + ans);
      }
    }
    spec.env.questions.push_back(std::move(q));
  }
  spec.env.root = jsonio::int_or(j, "root", path,
                                 spec.env.questions.front().id);

  ValidationReport report = validate_environment(spec.env);
  if (!report.ok()) throw ConfigError(path + ": " + report.issues.front().message);
  return spec;
}

inline EnvironmentSpec load_environment(const std::string& path) {
  return environment_from_json(jsonio::load_json_file(path), path);
}

inline Json environment_to_json(const EnvironmentSpec& spec) {
  Json j;
  j["mode"] = spec.env.mode == EnvironmentMode::linear ? "linear" : "tree";
  if (spec.env.mode == EnvironmentMode::tree) j["root"] = spec.env.root;
  if (spec.beta_prior)
    j["beta_prior"] = {{"a", spec.beta_prior->first}, {"b", spec.beta_prior->second}};
  j["questions"] = Json::array();
  for (const Question& q : spec.env.questions) {
    Json qj = {{"id", q.id}, {"beta", q.beta}};
    if (!q.branches.empty()) {
      Json b = Json::object();
      for (const auto& [ans, next] : q.branches) b[std::to_string(ans)] = next;
      qj["branches"] = std::move(b);
    }
    j["questions"].push_back(std::move(qj));
  }
  return j;
}

// ---- run config -------------------------------------------------------
// One document with per-stage sections; see docs/FORMATS.md for the schema.

inline MixtureHyperparams mixture_from_json(const Json& parent, const std::string& path) {
  MixtureHyperparams hp;
  if (!parent.contains("mixture")) return hp;
  const Json& j = parent["mixture"];
  const std::string mpath = path + ".mixture";
  hp.mu_safe = jsonio::number_or(j, "mu_safe", mpath, hp.mu_safe);
  hp.sigma_safe = jsonio::number_or(j, "sigma_safe", mpath, hp.sigma_safe);
  hp.mu_risky = jsonio::number_or(j, "mu_risky", mpath, hp.mu_risky);
  hp.sigma_risky = jsonio::number_or(j, "sigma_risky", mpath, hp.sigma_risky);
  try {
    hp.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(mpath + ": " + e.what());
  }
  return hp;
}

inline HierarchicalModelSpec priors_from_json(const Json& parent, const std::string& path) {
  HierarchicalModelSpec spec;
  if (!parent.contains("priors")) return spec;
  const Json& j = parent["priors"];
  const std::string ppath = path + ".priors";
  spec.mu_safe_loc = jsonio::number_or(j, "mu_safe_loc", ppath, spec.mu_safe_loc);
  spec.mu_safe_scale = jsonio::number_or(j, "mu_safe_scale", ppath, spec.mu_safe_scale);
  spec.mu_risky_loc = jsonio::number_or(j, "mu_risky_loc", ppath, spec.mu_risky_loc);
  spec.mu_risky_scale = jsonio::number_or(j, "mu_risky_scale", ppath, spec.mu_risky_scale);
  spec.sigma_rate = jsonio::number_or(j, "sigma_rate", ppath, spec.sigma_rate);
  spec.group_prob = jsonio::number_or(j, "group_prob", ppath, spec.group_prob);
  spec.beta_a = jsonio::number_or(j, "beta_a", ppath, spec.beta_a);
  spec.beta_b = jsonio::number_or(j, "beta_b", ppath, spec.beta_b);
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ppath + ": " + e.what());
  }
  return spec;
}

inline McmcConfig mcmc_from_json(const Json& j, const std::string& path) {
  McmcConfig cfg;
  cfg.chains = jsonio::int_or(j, "chains", path, cfg.chains);
  cfg.draws = jsonio::int_or(j, "draws", path, cfg.draws);
  cfg.burn_in = jsonio::int_or(j, "burn_in", path, cfg.burn_in);
  cfg.thin = jsonio::int_or(j, "thin", path, cfg.thin);
  cfg.step_alpha = jsonio::number_or(j, "step_alpha", path, cfg.step_alpha);
  cfg.step_beta = jsonio::number_or(j, "step_beta", path, cfg.step_beta);
  cfg.step_sigma = jsonio::number_or(j, "step_sigma", path, cfg.step_sigma);
  cfg.step_mu = jsonio::number_or(j, "step_mu", path, cfg.step_mu);
  cfg.adapt_window = jsonio::int_or(j, "adapt_window", path, cfg.adapt_window);
  cfg.marginalized = jsonio::bool_or(j, "marginalized", path, cfg.marginalized);
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

// Evidence given as {"Variable": "StateLabel", ...}.
inline Observation evidence_from_json(const Json& parent, const std::string& path,
                                      const BayesianNetwork& net) {
  Observation evidence(static_cast<std::size_t>(net.size()));
  if (!parent.contains("evidence")) return evidence;
  const Json& j = parent["evidence"];
  const std::string epath = path + ".evidence";
  if (!j.is_object()) throw ConfigError(epath + ": expected an object");
  for (const auto& [name, value] : j.items()) {
    int v = net.dag.index_of(name);
    if (v < 0) throw ConfigError(epath + "." + name + ": unknown variable");
    std::string label = jsonio::as_string(value, epath + "." + name);
    int s = net.dag.variables[v].state_index(label);
    if (s < 0)
      throw ConfigError(epath + "." + name + ": unknown state label '" + label + "'");
    evidence.set(v, s);
  }
  return evidence;
}

}  // namespace storysim

#endif
