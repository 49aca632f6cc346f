#ifndef STORYSIM_FACTOR_HPP
#define STORYSIM_FACTOR_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"

namespace storysim {

// Table over a sorted set of variables, row-major with the LAST scope
// variable fastest. A scalar factor has an empty scope and one value.
struct Factor {
  std::vector<int> vars;   // ascending variable ids
  std::vector<int> cards;  // parallel to vars
  std::vector<double> values;

  static Factor unit() { return Factor{{}, {}, {1.0}}; }

  std::size_t size() const { return values.size(); }

  int position_of(int var) const {
    for (std::size_t k = 0; k < vars.size(); ++k)
      if (vars[k] == var) return static_cast<int>(k);
    return -1;
  }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

namespace detail {

inline std::size_t scope_size(std::span<const int> cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

// Decodes a linear index into per-variable states (last var fastest).
inline void decode(std::size_t index, std::span<const int> cards, std::span<int> states) {
  for (std::size_t k = cards.size(); k-- > 0;) {
    states[k] = static_cast<int>(index % static_cast<std::size_t>(cards[k]));
    index /= static_cast<std::size_t>(cards[k]);
  }
}

}  // namespace detail

inline Factor factor_from_cpt(const BayesianNetwork& net, int node) {
  const Cpt& c = net.cpt(node);
  Factor f;
  f.vars = c.parents;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  f.cards.reserve(f.vars.size());
  for (int v : f.vars) f.cards.push_back(net.card(v));
  f.values.resize(detail::scope_size(f.cards));

  std::vector<int> states(f.vars.size());
  std::vector<int> parent_states(c.parents.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    detail::decode(i, f.cards, states);
    for (std::size_t k = 0; k < c.parents.size(); ++k)
      parent_states[k] = states[static_cast<std::size_t>(f.position_of(c.parents[k]))];
    int child_state = states[static_cast<std::size_t>(f.position_of(node))];
    f.values[i] = c.table[c.row_index(parent_states) * static_cast<std::size_t>(c.child_card) +
                          static_cast<std::size_t>(child_state)];
  }
  return f;
}

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  out.cards.reserve(out.vars.size());
  for (int v : out.vars) {
    int pa = a.position_of(v);
    out.cards.push_back(pa >= 0 ? a.cards[static_cast<std::size_t>(pa)]
                                : b.cards[static_cast<std::size_t>(b.position_of(v))]);
  }
  out.values.resize(detail::scope_size(out.cards));

  // position of each output variable inside a and b (-1 if absent)
  std::vector<int> map_a(out.vars.size()), map_b(out.vars.size());
  for (std::size_t k = 0; k < out.vars.size(); ++k) {
    map_a[k] = a.position_of(out.vars[k]);
    map_b[k] = b.position_of(out.vars[k]);
  }

  std::vector<int> states(out.vars.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    detail::decode(i, out.cards, states);
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < out.vars.size(); ++k) {
      if (map_a[k] >= 0) ia = ia * static_cast<std::size_t>(a.cards[map_a[k]]) +
                               static_cast<std::size_t>(states[k]);
      if (map_b[k] >= 0) ib = ib * static_cast<std::size_t>(b.cards[map_b[k]]) +
                               static_cast<std::size_t>(states[k]);
    }
    out.values[i] = a.values[ia] * b.values[ib];
  }
  return out;
}

inline Factor sum_out(const Factor& f, int var) {
  int pos = f.position_of(var);
  if (pos < 0) return f;
  Factor out;
  for (std::size_t k = 0; k < f.vars.size(); ++k) {
    if (static_cast<int>(k) == pos) continue;
    out.vars.push_back(f.vars[k]);
    out.cards.push_back(f.cards[k]);
  }
  out.values.assign(detail::scope_size(out.cards), 0.0);

  std::vector<int> states(f.vars.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    detail::decode(i, f.cards, states);
    std::size_t io = 0;
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
      if (static_cast<int>(k) == pos) continue;
      io = io * static_cast<std::size_t>(f.cards[k]) + static_cast<std::size_t>(states[k]);
    }
    out.values[io] += f.values[i];
  }
  return out;
}

// Conditions on var=state and drops var from the scope.
inline Factor reduce(const Factor& f, int var, int state) {
  int pos = f.position_of(var);
  if (pos < 0) return f;
  Factor out;
  for (std::size_t k = 0; k < f.vars.size(); ++k) {
    if (static_cast<int>(k) == pos) continue;
    out.vars.push_back(f.vars[k]);
    out.cards.push_back(f.cards[k]);
  }
  out.values.resize(detail::scope_size(out.cards));

  std::vector<int> states(f.vars.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    detail::decode(i, f.cards, states);
    if (states[static_cast<std::size_t>(pos)] != state) continue;
    std::size_t io = 0;
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
      if (static_cast<int>(k) == pos) continue;
      io = io * static_cast<std::size_t>(f.cards[k]) + static_cast<std::size_t>(states[k]);
    }
    out.values[io] = f.values[i];
  }
  return out;
}

namespace detail {

// Min-fill elimination order over the factor interaction graph; ties break
// toward the smallest variable id for determinism.
inline std::vector<int> min_fill_order(const std::vector<Factor>& factors,
                                       const std::vector<int>& to_eliminate) {
  std::vector<int> remaining = to_eliminate;
  std::sort(remaining.begin(), remaining.end());

  // adjacency over variable ids that appear in any scope
  int max_var = -1;
  for (const Factor& f : factors)
    for (int v : f.vars) max_var = std::max(max_var, v);
  for (int v : remaining) max_var = std::max(max_var, v);
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(max_var + 1),
                                     std::vector<bool>(static_cast<std::size_t>(max_var + 1), false));
  for (const Factor& f : factors)
    for (std::size_t a = 0; a < f.vars.size(); ++a)
      for (std::size_t b = a + 1; b < f.vars.size(); ++b) {
        adj[f.vars[a]][f.vars[b]] = true;
        adj[f.vars[b]][f.vars[a]] = true;
      }

  std::vector<int> order;
  order.reserve(remaining.size());
  while (!remaining.empty()) {
    int best = -1;
    long best_fill = -1;
    for (int v : remaining) {
      std::vector<int> nb;
      for (int u = 0; u <= max_var; ++u)
        if (adj[v][u]) nb.push_back(u);
      long fill = 0;
      for (std::size_t a = 0; a < nb.size(); ++a)
        for (std::size_t b = a + 1; b < nb.size(); ++b)
          if (!adj[nb[a]][nb[b]]) ++fill;
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    order.push_back(best);
    std::vector<int> nb;
    for (int u = 0; u <= max_var; ++u)
      if (adj[best][u]) nb.push_back(u);
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]][nb[b]] = true;
        adj[nb[b]][nb[a]] = true;
      }
    for (int u = 0; u <= max_var; ++u) {
      adj[best][u] = false;
      adj[u][best] = false;
    }
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
  }
  return order;
}

// Runs elimination and returns the unnormalized product of what is left.
inline Factor eliminate(std::vector<Factor> factors, const std::vector<int>& to_eliminate) {
  std::vector<int> order = min_fill_order(factors, to_eliminate);
  for (int v : order) {
    Factor merged = Factor::unit();
    std::vector<Factor> rest;
    rest.reserve(factors.size());
    for (Factor& f : factors) {
      if (f.position_of(v) >= 0)
        merged = multiply(merged, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(merged, v));
    factors = std::move(rest);
  }
  Factor result = Factor::unit();
  for (const Factor& f : factors) result = multiply(result, f);
  return result;
}

inline void check_evidence(const BayesianNetwork& net, const Observation& evidence) {
  if (evidence.size() != static_cast<std::size_t>(net.size()))
    throw std::invalid_argument("evidence length does not match network size");
  for (int v = 0; v < net.size(); ++v)
    if (evidence.has(v) && (evidence[v] < 0 || evidence[v] >= net.card(v)))
      throw std::invalid_argument("evidence state out of range for variable '" +
                                  net.dag.variables[v].name + "'");
}

}  // namespace detail

// Exact joint posterior over targets given evidence, by variable elimination.
// If evidence_prob is non-null it receives P(evidence). Throws
// ImpossibleEvidenceError when the evidence has probability zero.
inline Factor query_joint(const BayesianNetwork& net, std::span<const int> targets,
                          const Observation& evidence, double* evidence_prob = nullptr) {
  if (targets.empty()) throw std::invalid_argument("query needs at least one target");
  detail::check_evidence(net, evidence);
  for (std::size_t a = 0; a < targets.size(); ++a) {
    int t = targets[a];
    if (t < 0 || t >= net.size()) throw std::invalid_argument("query target out of range");
    if (evidence.has(t))
      throw std::invalid_argument("query target '" + net.dag.variables[t].name +
                                  "' is fixed by evidence");
    for (std::size_t b = a + 1; b < targets.size(); ++b)
      if (targets[b] == t) throw std::invalid_argument("duplicate query target");
  }

  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(net.size()));
  for (int v = 0; v < net.size(); ++v) {
    Factor f = factor_from_cpt(net, v);
    for (int e = 0; e < net.size(); ++e)
      if (evidence.has(e)) f = reduce(f, e, evidence[e]);
    factors.push_back(std::move(f));
  }

  std::vector<int> to_eliminate;
  for (int v = 0; v < net.size(); ++v) {
    if (evidence.has(v)) continue;
    if (std::find(targets.begin(), targets.end(), v) != targets.end()) continue;
    to_eliminate.push_back(v);
  }

  Factor joint = detail::eliminate(std::move(factors), to_eliminate);
  double z = joint.sum();
  if (!(z > 0.0))
    throw ImpossibleEvidenceError("evidence configuration has probability zero");
  if (evidence_prob) *evidence_prob = z;
  for (double& v : joint.values) v /= z;
  return joint;
}

// Posterior marginal of a single variable, as a dense state vector.
inline std::vector<double> query(const BayesianNetwork& net, int target,
                                 const Observation& evidence) {
  int t = target;
  Factor f = query_joint(net, std::span<const int>(&t, 1), evidence);
  return f.values;
}

// P(evidence) via elimination of every variable. An empty observation yields 1.
inline double evidence_probability(const BayesianNetwork& net, const Observation& evidence) {
  detail::check_evidence(net, evidence);
  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(net.size()));
  for (int v = 0; v < net.size(); ++v) {
    Factor f = factor_from_cpt(net, v);
    for (int e = 0; e < net.size(); ++e)
      if (evidence.has(e)) f = reduce(f, e, evidence[e]);
    factors.push_back(std::move(f));
  }
  std::vector<int> to_eliminate;
  for (int v = 0; v < net.size(); ++v)
    if (!evidence.has(v)) to_eliminate.push_back(v);
  Factor result = detail::eliminate(std::move(factors), to_eliminate);
  return result.sum();
}

}  // namespace storysim

#endif
