#ifndef STORYSIM_ROBUSTNESS_HPP
#define STORYSIM_ROBUSTNESS_HPP

#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/entropy.hpp"
#include "storysim/hierarchical.hpp"
#include "storysim/rng.hpp"
#include "storysim/simulator.hpp"

namespace storysim {

struct GridConfig {
  std::vector<int> agent_counts = {5, 10, 25, 50, 100, 250, 500, 1000};
  std::vector<int> question_counts = {1, 2, 5, 10, 15, 25, 50};
  int repeats = 5;

  // Bounded-runtime preset used by the acceptance checks.
  static GridConfig desk_scale() { return GridConfig{{5, 50, 500}, {1, 5, 15}, 2}; }
};

// Everything a grid cell needs to generate and refit one dataset. The
// simulation template's agent count and environment are replaced per cell.
struct RobustnessBase {
  BayesianNetwork net;
  SimulationConfig sim;
  HierarchicalModelSpec model;
  McmcConfig mcmc;
  EntropyConfig alpha_entropy = kAlphaEntropy;
  EntropyConfig beta_entropy = kBetaEntropy;
  std::uint64_t master_seed = 0;
};

struct GridResult {
  std::vector<int> agent_counts;
  std::vector<int> question_counts;
  int repeats = 0;
  // row-major over (agent index, question index)
  std::vector<double> alpha_entropy;
  std::vector<double> beta_entropy;
  std::vector<bool> valid;
  std::vector<std::string> cell_errors;

  std::size_t index(std::size_t ai, std::size_t qi) const {
    return ai * question_counts.size() + qi;
  }

  bool all_valid() const {
    for (bool v : valid)
      if (!v) return false;
    return true;
  }
};

namespace detail {

constexpr std::uint64_t kGridTag = 0x67726964ull;

inline Environment linear_environment(int q) {
  Environment env;
  env.mode = EnvironmentMode::linear;
  env.questions.resize(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) env.questions[static_cast<std::size_t>(j)].id = j;
  return env;
}

}  // namespace detail

// One cell repeat: fresh synthetic data at (n, q), a full MCMC refit, and the
// mean normalized entropy of the alpha and beta posteriors.
struct CellOutcome {
  double alpha_entropy = 0.0;
  double beta_entropy = 0.0;
};

inline CellOutcome run_grid_cell(const RobustnessBase& base, int n_agents, int n_questions,
                                 int repeat) {
  SimulationConfig sim = base.sim;
  sim.n_agents = n_agents;
  sim.environment = detail::linear_environment(n_questions);
  if (!sim.beta_prior) sim.beta_prior = {1.0, 1.0};
  sim.seed = derive_seed(base.master_seed,
                         {detail::kGridTag, static_cast<std::uint64_t>(n_agents),
                          static_cast<std::uint64_t>(n_questions),
                          static_cast<std::uint64_t>(repeat), 0});

  SyntheticDataset data = run_simulation(base.net, sim);

  McmcConfig mcmc = base.mcmc;
  mcmc.seed = derive_seed(base.master_seed,
                          {detail::kGridTag, static_cast<std::uint64_t>(n_agents),
                           static_cast<std::uint64_t>(n_questions),
                           static_cast<std::uint64_t>(repeat), 1});
  PosteriorTrace trace = run_mcmc(data.responses, base.model, mcmc);

  CellOutcome out;
  for (int i = 0; i < trace.n_agents; ++i)
    out.alpha_entropy += normalized_entropy(trace.pooled(trace.alpha_index(i)), base.alpha_entropy);
  out.alpha_entropy /= static_cast<double>(trace.n_agents);
  for (int j = 0; j < trace.n_questions; ++j)
    out.beta_entropy += normalized_entropy(trace.pooled(trace.beta_index(j)), base.beta_entropy);
  out.beta_entropy /= static_cast<double>(trace.n_questions);
  return out;
}

// Full (agents x questions) sweep. A failing cell is marked invalid with its
// error text and the sweep continues; cell seeds derive from the actual
// (N, Q, repeat) values so results do not depend on axis ordering.
inline GridResult robustness_grid(const std::vector<int>& agent_counts,
                                  const std::vector<int>& question_counts, int repeats,
                                  const RobustnessBase& base) {
  if (agent_counts.empty() || question_counts.empty())
    throw std::invalid_argument("grid axes must be non-empty");
  for (int n : agent_counts)
    if (n < 1) throw std::invalid_argument("agent counts must be positive");
  for (int q : question_counts)
    if (q < 1) throw std::invalid_argument("question counts must be positive");
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");

  GridResult result;
  result.agent_counts = agent_counts;
  result.question_counts = question_counts;
  result.repeats = repeats;
  const std::size_t cells = agent_counts.size() * question_counts.size();
  result.alpha_entropy.assign(cells, 0.0);
  result.beta_entropy.assign(cells, 0.0);
  result.valid.assign(cells, true);
  result.cell_errors.assign(cells, "");

  for (std::size_t ai = 0; ai < agent_counts.size(); ++ai)
    for (std::size_t qi = 0; qi < question_counts.size(); ++qi) {
      const std::size_t cell = result.index(ai, qi);
      double a_sum = 0.0, b_sum = 0.0;
      try {
        for (int rep = 0; rep < repeats; ++rep) {
          CellOutcome out = run_grid_cell(base, agent_counts[ai], question_counts[qi], rep);
          a_sum += out.alpha_entropy;
          b_sum += out.beta_entropy;
        }
        result.alpha_entropy[cell] = a_sum / static_cast<double>(repeats);
        result.beta_entropy[cell] = b_sum / static_cast<double>(repeats);
      } catch (const std::exception& e) {
        result.valid[cell] = false;
        result.cell_errors[cell] = e.what();
        result.alpha_entropy[cell] = -1.0;
        result.beta_entropy[cell] = -1.0;
      }
    }
  return result;
}

inline GridResult robustness_grid(const GridConfig& grid, const RobustnessBase& base) {
  return robustness_grid(grid.agent_counts, grid.question_counts, grid.repeats, base);
}

}  // namespace storysim

#endif
