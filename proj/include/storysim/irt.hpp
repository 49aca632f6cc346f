#ifndef STORYSIM_IRT_HPP
#define STORYSIM_IRT_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/population.hpp"
#include "storysim/rng.hpp"
#include "storysim/stats.hpp"

namespace storysim {

// Cell value for a question the agent never reached (tree sessions).
constexpr int kUnanswered = -1;

// P(answer = 1) for profile alpha and discrimination beta. Answer 1 is the
// risk-prone option, so positive alpha biases toward 1; beta = 0 carries no
// information and yields a fair coin for any profile.
inline double response_probability(double alpha, double beta) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  return sigmoid(alpha * beta);
}

inline int answer(double alpha, double beta, Rng& rng) {
  return uniform01(rng) < response_probability(alpha, beta) ? 1 : 0;
}

inline std::vector<double> sample_betas(int q, double shape_a, double shape_b, Rng& rng) {
  if (q < 1) throw std::invalid_argument("question count must be at least 1");
  std::vector<double> betas;
  betas.reserve(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) betas.push_back(sample_beta01(shape_a, shape_b, rng));
  return betas;
}

struct Question {
  int id = 0;
  double beta = 0.0;
  std::map<int, int> branches;  // answer value -> next question id (tree mode)
};

enum class EnvironmentMode { linear, tree };

struct Environment {
  EnvironmentMode mode = EnvironmentMode::linear;
  std::vector<Question> questions;
  int root = 0;  // entry question id, tree mode only

  int size() const { return static_cast<int>(questions.size()); }

  int index_of(int question_id) const {
    for (std::size_t k = 0; k < questions.size(); ++k)
      if (questions[k].id == question_id) return static_cast<int>(k);
    return -1;
  }
};

inline ValidationReport validate_environment(const Environment& env) {
  ValidationReport report;
  if (env.questions.empty()) {
    report.add("empty", "environment has no questions");
    return report;
  }
  for (std::size_t a = 0; a < env.questions.size(); ++a) {
    const Question& q = env.questions[a];
    if (!(q.beta >= 0.0 && q.beta <= 1.0))
      report.add("beta-range", "question " + std::to_string(q.id) + " has beta outside [0,1]");
    for (std::size_t b = a + 1; b < env.questions.size(); ++b)
      if (env.questions[b].id == q.id)
        report.add("duplicate-id", "question id " + std::to_string(q.id) + " appears twice");
    for (const auto& [ans, next] : q.branches) {
      if (ans != 0 && ans != 1)
        report.add("branch-key", "question " + std::to_string(q.id) +
                                     " branches on answer value " + std::to_string(ans));
      if (env.index_of(next) < 0)
        report.add("dangling-branch", "question " + std::to_string(q.id) +
                                          " branches to unknown question " + std::to_string(next));
    }
  }
  if (env.mode == EnvironmentMode::tree) {
    if (env.index_of(env.root) < 0) {
      report.add("bad-root", "root question " + std::to_string(env.root) + " does not exist");
    } else if (report.ok()) {
      // iterative DFS over branch edges; a back edge to a node still on the
      // stack is a cycle. Colors: 0 unseen, 1 on stack, 2 done.
      std::vector<int> color(env.questions.size(), 0);
      std::vector<int> stack = {env.index_of(env.root)};
      while (!stack.empty()) {
        int idx = stack.back();
        if (color[idx] == 0) {
          color[idx] = 1;
          for (const auto& [ans, next] : env.questions[idx].branches) {
            (void)ans;
            int nidx = env.index_of(next);
            if (color[nidx] == 1) {
              report.add("cycle", "branch graph has a cycle through question " +
                                      std::to_string(env.questions[nidx].id));
              return report;
            }
            if (color[nidx] == 0) stack.push_back(nidx);
          }
        } else {
          stack.pop_back();
          if (color[idx] == 1) color[idx] = 2;
        }
      }
    }
  }
  return report;
}

// One agent's pass through the environment. Linear mode answers every
// question in order; tree mode walks branch edges from the root and leaves
// unvisited questions unanswered.
inline std::vector<int> simulate_session(const AgentProfile& agent, const Environment& env,
                                         Rng& rng) {
  std::vector<int> row(static_cast<std::size_t>(env.size()), kUnanswered);
  if (env.mode == EnvironmentMode::linear) {
    for (std::size_t k = 0; k < env.questions.size(); ++k)
      row[k] = answer(agent.alpha, env.questions[k].beta, rng);
    return row;
  }
  int idx = env.index_of(env.root);
  if (idx < 0) throw std::invalid_argument("tree environment root does not exist");
  while (idx >= 0) {
    if (row[static_cast<std::size_t>(idx)] != kUnanswered)
      throw std::invalid_argument("branch graph revisits a question");
    int a = answer(agent.alpha, env.questions[static_cast<std::size_t>(idx)].beta, rng);
    row[static_cast<std::size_t>(idx)] = a;
    auto it = env.questions[static_cast<std::size_t>(idx)].branches.find(a);
    idx = it == env.questions[static_cast<std::size_t>(idx)].branches.end()
              ? -1
              : env.index_of(it->second);
  }
  return row;
}

// Observable response matrix: answers only, no latent ground truth.
struct ResponseDataset {
  std::vector<int> agent_ids;
  std::vector<int> question_ids;
  std::vector<int> answers;  // row-major, n_agents x n_questions, {0, 1, kUnanswered}

  int n_agents() const { return static_cast<int>(agent_ids.size()); }
  int n_questions() const { return static_cast<int>(question_ids.size()); }

  int at(int i, int j) const {
    return answers[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_questions()) +
                   static_cast<std::size_t>(j)];
  }

  int& at(int i, int j) {
    return answers[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_questions()) +
                   static_cast<std::size_t>(j)];
  }
};

}  // namespace storysim

#endif
