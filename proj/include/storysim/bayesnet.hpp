#ifndef STORYSIM_BAYESNET_HPP
#define STORYSIM_BAYESNET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace storysim {

struct Variable {
  std::string name;
  std::vector<std::string> states;

  int cardinality() const { return static_cast<int>(states.size()); }

  int state_index(std::string_view label) const {
    for (std::size_t k = 0; k < states.size(); ++k)
      if (states[k] == label) return static_cast<int>(k);
    return -1;
  }
};

// Directed graph over discrete variables. Edges are kept in insertion order;
// that order defines the parent order of learned CPTs.
struct Dag {
  std::vector<Variable> variables;
  std::vector<std::pair<int, int>> edges;  // (parent, child) variable indices

  int size() const { return static_cast<int>(variables.size()); }

  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == name) return static_cast<int>(i);
    return -1;
  }

  int add_variable(Variable v) {
    if (index_of(v.name) >= 0)
      throw std::invalid_argument("duplicate variable name: " + v.name);
    variables.push_back(std::move(v));
    return size() - 1;
  }

  void add_edge(int parent, int child) {
    check_index(parent);
    check_index(child);
    edges.emplace_back(parent, child);
  }

  void add_edge(std::string_view parent, std::string_view child) {
    int p = index_of(parent), c = index_of(child);
    if (p < 0) throw std::invalid_argument("unknown variable: " + std::string(parent));
    if (c < 0) throw std::invalid_argument("unknown variable: " + std::string(child));
    add_edge(p, c);
  }

  std::vector<int> parents_of(int node) const {
    std::vector<int> out;
    for (const auto& [p, c] : edges)
      if (c == node) out.push_back(p);
    return out;
  }

  std::vector<int> children_of(int node) const {
    std::vector<int> out;
    for (const auto& [p, c] : edges)
      if (p == node) out.push_back(c);
    return out;
  }

  // Kahn's algorithm; nullopt if the edge set has a directed cycle.
  std::optional<std::vector<int>> topological_order() const {
    const int n = size();
    std::vector<int> indegree(n, 0);
    for (const auto& [p, c] : edges) {
      (void)p;
      ++indegree[c];
    }
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
      if (indegree[i] == 0) ready.push_back(i);
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
      // smallest index first keeps the order deterministic
      auto it = std::min_element(ready.begin(), ready.end());
      int v = *it;
      ready.erase(it);
      order.push_back(v);
      for (const auto& [p, c] : edges) {
        if (p != v) continue;
        if (--indegree[c] == 0) ready.push_back(c);
      }
    }
    if (static_cast<int>(order.size()) != n) return std::nullopt;
    return order;
  }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= size()) throw std::invalid_argument("variable index out of range");
  }
};

// Conditional probability table for one node. Rows are indexed by the joint
// parent configuration in mixed radix with the FIRST parent most significant;
// within a row, entries follow the child's state order.
struct Cpt {
  int child = -1;
  std::vector<int> parents;
  std::vector<int> parent_cards;
  int child_card = 0;
  std::vector<double> table;  // rows() * child_card values

  std::size_t rows() const {
    std::size_t r = 1;
    for (int c : parent_cards) r *= static_cast<std::size_t>(c);
    return r;
  }

  std::size_t row_index(std::span<const int> parent_states) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < parents.size(); ++k)
      idx = idx * static_cast<std::size_t>(parent_cards[k]) + static_cast<std::size_t>(parent_states[k]);
    return idx;
  }

  // Row index read off a full assignment over all network variables.
  std::size_t row_index_from_assignment(std::span<const int> assignment) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < parents.size(); ++k)
      idx = idx * static_cast<std::size_t>(parent_cards[k]) +
            static_cast<std::size_t>(assignment[parents[k]]);
    return idx;
  }

  std::span<const double> row(std::size_t r) const {
    return {table.data() + r * static_cast<std::size_t>(child_card),
            static_cast<std::size_t>(child_card)};
  }

  std::span<double> row(std::size_t r) {
    return {table.data() + r * static_cast<std::size_t>(child_card),
            static_cast<std::size_t>(child_card)};
  }

  double prob(std::span<const int> assignment) const {
    return table[row_index_from_assignment(assignment) * static_cast<std::size_t>(child_card) +
                 static_cast<std::size_t>(assignment[child])];
  }
};

// Partial assignment over a network's variables; kMissing marks absent cells.
struct Observation {
  static constexpr int kMissing = -1;

  std::vector<int> states;

  Observation() = default;
  explicit Observation(std::size_t n_vars) : states(n_vars, kMissing) {}

  std::size_t size() const { return states.size(); }
  bool has(int var) const { return states[var] != kMissing; }
  int operator[](int var) const { return states[var]; }

  void set(int var, int state) { states[var] = state; }
  void clear(int var) { states[var] = kMissing; }

  bool empty() const {
    return std::all_of(states.begin(), states.end(), [](int s) { return s == kMissing; });
  }

  bool complete() const {
    return std::none_of(states.begin(), states.end(), [](int s) { return s == kMissing; });
  }

  std::size_t assigned_count() const {
    return static_cast<std::size_t>(
        std::count_if(states.begin(), states.end(), [](int s) { return s != kMissing; }));
  }
};

struct BayesianNetwork {
  Dag dag;
  std::vector<Cpt> cpts;  // cpts[i].child == i

  int size() const { return dag.size(); }
  int card(int var) const { return dag.variables[var].cardinality(); }
  const Cpt& cpt(int var) const { return cpts[var]; }

  // Probability of one complete assignment under the factored joint.
  double joint_prob(std::span<const int> assignment) const {
    double p = 1.0;
    for (const auto& c : cpts) p *= c.prob(assignment);
    return p;
  }
};

// Builds the CPT shell (child/parents/cards, zeroed table) for one node.
inline Cpt make_cpt_shell(const Dag& dag, int node) {
  Cpt c;
  c.child = node;
  c.parents = dag.parents_of(node);
  c.parent_cards.reserve(c.parents.size());
  for (int p : c.parents) c.parent_cards.push_back(dag.variables[p].cardinality());
  c.child_card = dag.variables[node].cardinality();
  c.table.assign(c.rows() * static_cast<std::size_t>(c.child_card), 0.0);
  return c;
}

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  void add(std::string code, std::string message) {
    issues.push_back({std::move(code), std::move(message)});
  }
};

namespace detail {

constexpr double kRowSumTolerance = 1e-9;

// Enumerating the full joint is only attempted below this many cells.
constexpr std::size_t kJointEnumerationLimit = 1u << 20;

}  // namespace detail

inline void validate_dag(const Dag& dag, ValidationReport& report) {
  for (std::size_t i = 0; i < dag.variables.size(); ++i) {
    const Variable& v = dag.variables[i];
    if (v.cardinality() < 2)
      report.add("bad-cardinality", "variable '" + v.name + "' has fewer than 2 states");
    for (std::size_t a = 0; a < v.states.size(); ++a)
      for (std::size_t b = a + 1; b < v.states.size(); ++b)
        if (v.states[a] == v.states[b])
          report.add("duplicate-state",
                     "variable '" + v.name + "' repeats state label '" + v.states[a] + "'");
    for (std::size_t j = i + 1; j < dag.variables.size(); ++j)
      if (dag.variables[j].name == v.name)
        report.add("duplicate-variable", "variable name '" + v.name + "' appears twice");
  }
  for (std::size_t e = 0; e < dag.edges.size(); ++e) {
    const auto& [p, c] = dag.edges[e];
    if (p == c)
      report.add("self-edge", "self-edge on variable '" + dag.variables[p].name + "'");
    for (std::size_t f = e + 1; f < dag.edges.size(); ++f)
      if (dag.edges[f] == dag.edges[e])
        report.add("duplicate-edge", "duplicate edge " + dag.variables[p].name + " -> " +
                                         dag.variables[c].name);
  }
  if (!dag.topological_order())
    report.add("cycle", "edge set contains a directed cycle");
}

inline ValidationReport validate_network(const BayesianNetwork& net) {
  ValidationReport report;
  validate_dag(net.dag, report);

  if (net.cpts.size() != static_cast<std::size_t>(net.size())) {
    report.add("missing-cpt", "network has " + std::to_string(net.cpts.size()) + " CPTs for " +
                                  std::to_string(net.size()) + " variables");
    return report;
  }

  for (int i = 0; i < net.size(); ++i) {
    const Cpt& c = net.cpts[i];
    const std::string& name = net.dag.variables[i].name;
    if (c.child != i) {
      report.add("cpt-order", "CPT at slot " + std::to_string(i) + " is for another node");
      continue;
    }
    if (c.parents != net.dag.parents_of(i)) {
      report.add("parent-mismatch", "CPT parents of '" + name + "' do not match DAG in-edges");
      continue;
    }
    if (c.child_card != net.card(i) ||
        c.table.size() != c.rows() * static_cast<std::size_t>(c.child_card)) {
      report.add("table-shape", "CPT of '" + name + "' has the wrong number of entries");
      continue;
    }
    for (std::size_t r = 0; r < c.rows(); ++r) {
      double sum = 0.0;
      bool in_range = true;
      for (double p : c.row(r)) {
        sum += p;
        if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) in_range = false;
      }
      if (!in_range)
        report.add("entry-range",
                   "CPT of '" + name + "' row " + std::to_string(r) + " has entries outside [0,1]");
      if (std::abs(sum - 1.0) > detail::kRowSumTolerance)
        report.add("row-sum", "CPT of '" + name + "' row " + std::to_string(r) + " sums to " +
                                  std::to_string(sum));
    }
  }

  // Joint normalization, checked by enumeration while the state space is small.
  if (report.ok()) {
    std::size_t joint = 1;
    bool small = true;
    for (int i = 0; i < net.size(); ++i) {
      joint *= static_cast<std::size_t>(net.card(i));
      if (joint > detail::kJointEnumerationLimit) {
        small = false;
        break;
      }
    }
    if (small && net.size() > 0) {
      std::vector<int> assignment(net.size(), 0);
      double total = 0.0;
      while (true) {
        total += net.joint_prob(assignment);
        int k = net.size() - 1;
        while (k >= 0 && ++assignment[k] == net.card(k)) assignment[k--] = 0;
        if (k < 0) break;
      }
      if (std::abs(total - 1.0) > 1e-9 * static_cast<double>(joint))
        report.add("joint-sum", "joint distribution sums to " + std::to_string(total));
    }
  }
  return report;
}

}  // namespace storysim

#endif
