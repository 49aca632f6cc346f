#ifndef STORYSIM_POPULATION_HPP
#define STORYSIM_POPULATION_HPP

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/bayesnet_sample.hpp"
#include "storysim/errors.hpp"
#include "storysim/factor.hpp"
#include "storysim/rng.hpp"

namespace storysim {

enum class Group : int { safe = 0, risky = 1 };

// Two-component Gaussian mixture over the latent risk profile alpha.
// Defaults follow the generation model used throughout the case study.
struct MixtureHyperparams {
  double mu_safe = -2.0;
  double sigma_safe = 0.7;
  double mu_risky = 0.5;
  double sigma_risky = 1.2;

  void check() const {
    if (!(sigma_safe > 0.0) || !(sigma_risky > 0.0))
      throw std::invalid_argument("mixture sigmas must be positive");
    if (!std::isfinite(mu_safe) || !std::isfinite(mu_risky))
      throw std::invalid_argument("mixture means must be finite");
  }
};

struct AgentProfile {
  int id = 0;
  Group group = Group::safe;
  double alpha = 0.0;
  double p_risky = 0.0;
  Observation attributes;  // synthetic record, target variable left unset
};

inline Group assign_group(double p_risky, Rng& rng) {
  if (!(p_risky >= 0.0 && p_risky <= 1.0))
    throw std::invalid_argument("p_risky must lie in [0,1]");
  return uniform01(rng) < p_risky ? Group::risky : Group::safe;
}

inline double sample_alpha(Group group, const MixtureHyperparams& hp, Rng& rng) {
  hp.check();
  std::normal_distribution<double> dist(group == Group::safe ? hp.mu_safe : hp.mu_risky,
                                        group == Group::safe ? hp.sigma_safe : hp.sigma_risky);
  return dist(rng);
}

// Draws n agents: a full attribute record from the network (under optional
// stratification evidence), the record's own exact risky probability, a group
// label from that probability, and a group-conditional alpha. The target's
// sampled state is discarded; group membership replaces it.
inline std::vector<AgentProfile> generate_population(const BayesianNetwork& net, int target,
                                                     int risky_state, int n,
                                                     const MixtureHyperparams& hp,
                                                     const Observation& evidence, Rng& rng) {
  if (n < 1) throw std::invalid_argument("population size must be at least 1");
  if (target < 0 || target >= net.size()) throw std::invalid_argument("target variable not in network");
  if (risky_state < 0 || risky_state >= net.card(target))
    throw std::invalid_argument("risky state out of range for target variable");
  hp.check();
  if (evidence.size() != static_cast<std::size_t>(net.size()))
    throw std::invalid_argument("evidence length does not match network size");
  if (evidence.has(target))
    throw std::invalid_argument("target variable must not be fixed by evidence");
  if (!(evidence_probability(net, evidence) > 0.0))
    throw ImpossibleEvidenceError("evidence configuration has probability zero");

  std::vector<AgentProfile> agents;
  agents.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    AgentProfile a;
    a.id = i;
    a.attributes = sample_conditional_one(net, evidence, rng);
    a.attributes.clear(target);
    a.p_risky = query(net, target, a.attributes)[static_cast<std::size_t>(risky_state)];
    a.group = assign_group(a.p_risky, rng);
    a.alpha = sample_alpha(a.group, hp, rng);
    agents.push_back(std::move(a));
  }
  return agents;
}

}  // namespace storysim

#endif
