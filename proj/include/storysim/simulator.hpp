#ifndef STORYSIM_SIMULATOR_HPP
#define STORYSIM_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"
#include "storysim/irt.hpp"
#include "storysim/population.hpp"
#include "storysim/rng.hpp"

namespace storysim {

namespace detail {

// Stream tags keep the pipeline's RNG consumers independent: growing the
// agent count must not perturb earlier agents, and sessions must not disturb
// the population stream.
constexpr std::uint64_t kStreamBetas = 0x62657461u;       // question parameter draws
constexpr std::uint64_t kStreamPopulation = 0x706f7075u;  // attribute/group/alpha draws
constexpr std::uint64_t kStreamSession = 0x73657373u;     // per-agent answer draws

template <typename F>
auto with_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ImpossibleEvidenceError& e) {
    throw ImpossibleEvidenceError(std::string(stage) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(stage) + ": " + e.what());
  }
}

}  // namespace detail

struct SimulationConfig {
  std::uint64_t seed = 0;
  int n_agents = 500;
  MixtureHyperparams mixture;
  int target = -1;
  int risky_state = -1;
  Observation evidence;  // empty observation = unstratified run
  Environment environment;
  // When set, question betas are redrawn from Beta(first, second) each run;
  // otherwise the environment's fixed betas are used as-is.
  std::optional<std::pair<double, double>> beta_prior;
};

// Everything one run produces. `responses` plus the agents' attribute
// records form the observable view; alpha, group, p_risky, and the betas in
// `environment` are generation-time ground truth and are persisted apart.
struct SyntheticDataset {
  std::vector<AgentProfile> agents;
  Environment environment;  // betas actually used
  ResponseDataset responses;
};

inline SyntheticDataset run_simulation(const BayesianNetwork& net, const SimulationConfig& cfg) {
  if (cfg.n_agents < 1) throw std::invalid_argument("n_agents must be at least 1");
  if (cfg.evidence.size() != 0 &&
      cfg.evidence.size() != static_cast<std::size_t>(net.size()))
    throw std::invalid_argument("evidence length does not match network size");
  {
    ValidationReport env_report = validate_environment(cfg.environment);
    if (!env_report.ok())
      throw ConfigError("environment: " + env_report.issues.front().message);
  }

  SyntheticDataset out;
  out.environment = cfg.environment;

  if (cfg.beta_prior) {
    Rng rng = make_rng(cfg.seed, {detail::kStreamBetas});
    auto [a, b] = *cfg.beta_prior;
    std::vector<double> betas = detail::with_stage(
        "beta sampling", [&] { return sample_betas(out.environment.size(), a, b, rng); });
    for (int j = 0; j < out.environment.size(); ++j)
      out.environment.questions[static_cast<std::size_t>(j)].beta =
          betas[static_cast<std::size_t>(j)];
  }

  Observation evidence = cfg.evidence.size() == 0
                             ? Observation(static_cast<std::size_t>(net.size()))
                             : cfg.evidence;
  {
    Rng rng = make_rng(cfg.seed, {detail::kStreamPopulation});
    out.agents = detail::with_stage("population", [&] {
      return generate_population(net, cfg.target, cfg.risky_state, cfg.n_agents, cfg.mixture,
                                 evidence, rng);
    });
  }

  out.responses.question_ids.reserve(static_cast<std::size_t>(out.environment.size()));
  for (const Question& q : out.environment.questions) out.responses.question_ids.push_back(q.id);
  out.responses.agent_ids.reserve(out.agents.size());
  out.responses.answers.reserve(out.agents.size() *
                                static_cast<std::size_t>(out.environment.size()));
  for (const AgentProfile& agent : out.agents) {
    out.responses.agent_ids.push_back(agent.id);
    Rng rng = make_rng(cfg.seed, {detail::kStreamSession, static_cast<std::uint64_t>(agent.id)});
    std::vector<int> row = detail::with_stage(
        "session", [&] { return simulate_session(agent, out.environment, rng); });
    out.responses.answers.insert(out.responses.answers.end(), row.begin(), row.end());
  }
  return out;
}

inline SyntheticDataset stratified_generate(const BayesianNetwork& net, SimulationConfig cfg,
                                            const Observation& evidence) {
  cfg.evidence = evidence;
  return run_simulation(net, cfg);
}

}  // namespace storysim

#endif
