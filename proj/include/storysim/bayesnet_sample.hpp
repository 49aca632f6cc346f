#ifndef STORYSIM_BAYESNET_SAMPLE_HPP
#define STORYSIM_BAYESNET_SAMPLE_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"
#include "storysim/factor.hpp"
#include "storysim/rng.hpp"

namespace storysim {

namespace detail {

inline std::vector<int> topological_order_or_throw(const BayesianNetwork& net) {
  auto order = net.dag.topological_order();
  if (!order) throw std::invalid_argument("network graph contains a cycle");
  return *order;
}

}  // namespace detail

inline Observation sample_forward_one(const BayesianNetwork& net, Rng& rng) {
  Observation row(static_cast<std::size_t>(net.size()));
  for (int v : detail::topological_order_or_throw(net)) {
    const Cpt& c = net.cpt(v);
    auto weights = c.row(c.row_index_from_assignment(row.states));
    row.set(v, static_cast<int>(sample_categorical(weights, rng)));
  }
  return row;
}

// Ancestral sampling in topological order.
inline std::vector<Observation> sample_forward(const BayesianNetwork& net, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be at least 1");
  std::vector<Observation> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(sample_forward_one(net, rng));
  return rows;
}

// Exact draw from P(free variables | evidence) by the chain rule: visit free
// variables in topological order and sample each from an exact posterior
// conditioned on the evidence plus everything sampled so far.
inline Observation sample_conditional_one(const BayesianNetwork& net, const Observation& evidence,
                                          Rng& rng) {
  if (evidence.empty()) return sample_forward_one(net, rng);
  Observation row = evidence;
  for (int v : detail::topological_order_or_throw(net)) {
    if (row.has(v)) continue;
    std::vector<double> posterior = query(net, v, row);
    row.set(v, static_cast<int>(sample_categorical(posterior, rng)));
  }
  return row;
}

// Single-site Gibbs sampling with evidence clamped. Free variables update in
// turn from their Markov-blanket full conditionals.
inline std::vector<Observation> sample_gibbs(const BayesianNetwork& net,
                                             const Observation& evidence, int n, int burn_in,
                                             int thin, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be at least 1");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
  if (!(evidence_probability(net, evidence) > 0.0))
    throw ImpossibleEvidenceError("evidence configuration has probability zero");

  std::vector<int> free_vars;
  for (int v = 0; v < net.size(); ++v)
    if (!evidence.has(v)) free_vars.push_back(v);

  // Exact conditional init keeps the chain inside the support from step one.
  Observation state = sample_conditional_one(net, evidence, rng);

  std::vector<std::vector<int>> children(static_cast<std::size_t>(net.size()));
  for (int v = 0; v < net.size(); ++v) children[v] = net.dag.children_of(v);

  auto sweep = [&]() {
    std::vector<double> weights;
    for (int v : free_vars) {
      const Cpt& cv = net.cpt(v);
      auto prior_row = cv.row(cv.row_index_from_assignment(state.states));
      weights.assign(prior_row.begin(), prior_row.end());
      for (int child : children[v]) {
        const Cpt& cc = net.cpt(child);
        int saved = state[v];
        for (int s = 0; s < cv.child_card; ++s) {
          state.set(v, s);
          weights[static_cast<std::size_t>(s)] *= cc.prob(state.states);
        }
        state.set(v, saved);
      }
      state.set(v, static_cast<int>(sample_categorical(weights, rng)));
    }
  };

  for (int b = 0; b < burn_in; ++b) sweep();
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < thin; ++t) sweep();
    out.push_back(state);
  }
  return out;
}

}  // namespace storysim

#endif
