// Small network builders shared across test files.
#ifndef STORYSIM_TESTS_NETUTIL_HPP
#define STORYSIM_TESTS_NETUTIL_HPP

#include <random>
#include <string>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/rng.hpp"

namespace netutil {

// A ~ Bernoulli(0.3); P(B=1|A=0)=0.2, P(B=1|A=1)=0.9.
inline storysim::BayesianNetwork make_ab_net() {
  storysim::Dag dag;
  dag.add_variable({"A", {"no", "yes"}});
  dag.add_variable({"B", {"no", "yes"}});
  dag.add_edge("A", "B");

  storysim::BayesianNetwork net;
  net.dag = dag;
  storysim::Cpt a = storysim::make_cpt_shell(dag, 0);
  a.table = {0.7, 0.3};
  storysim::Cpt b = storysim::make_cpt_shell(dag, 1);
  b.table = {0.8, 0.2, 0.1, 0.9};
  net.cpts = {a, b};
  return net;
}

// Single binary root with P(A=1) = p.
inline storysim::BayesianNetwork make_coin_net(double p) {
  storysim::Dag dag;
  dag.add_variable({"A", {"no", "yes"}});
  storysim::BayesianNetwork net;
  net.dag = dag;
  storysim::Cpt a = storysim::make_cpt_shell(dag, 0);
  a.table = {1.0 - p, p};
  net.cpts = {a};
  return net;
}

// Random DAG over 1..max_nodes variables with cardinalities 2 or 3 and
// strictly positive Dirichlet-style CPT rows. Edges only go low -> high
// index, so the graph is acyclic by construction.
inline storysim::BayesianNetwork random_net(storysim::Rng& rng, int max_nodes = 5) {
  std::uniform_int_distribution<int> node_count(1, max_nodes);
  std::uniform_int_distribution<int> card_pick(2, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::gamma_distribution<double> gamma(1.0, 1.0);

  storysim::Dag dag;
  const int n = node_count(rng);
  for (int v = 0; v < n; ++v) {
    std::vector<std::string> states;
    int card = card_pick(rng);
    for (int s = 0; s < card; ++s) states.push_back("s" + std::to_string(s));
    dag.add_variable({"V" + std::to_string(v), states});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < 0.4) dag.add_edge(i, j);

  storysim::BayesianNetwork net;
  net.dag = dag;
  for (int v = 0; v < n; ++v) {
    storysim::Cpt c = storysim::make_cpt_shell(dag, v);
    for (std::size_t r = 0; r < c.rows(); ++r) {
      double z = 0.0;
      std::span<double> row = c.row(r);
      for (double& cell : row) {
        cell = gamma(rng) + 1e-3;
        z += cell;
      }
      for (double& cell : row) cell /= z;
    }
    net.cpts.push_back(std::move(c));
  }
  return net;
}

// Each variable independently gets evidence with the given probability.
inline storysim::Observation random_evidence(const storysim::BayesianNetwork& net,
                                             storysim::Rng& rng, double prob = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  storysim::Observation evidence(static_cast<std::size_t>(net.size()));
  for (int v = 0; v < net.size(); ++v)
    if (u(rng) < prob) {
      std::uniform_int_distribution<int> state(0, net.card(v) - 1);
      evidence.set(v, state(rng));
    }
  return evidence;
}

}  // namespace netutil

#endif
