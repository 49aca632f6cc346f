#ifndef STORYSIM_BAYESNET_FIT_HPP
#define STORYSIM_BAYESNET_FIT_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/errors.hpp"
#include "storysim/factor.hpp"
#include "storysim/rng.hpp"
#include "storysim/stats.hpp"

namespace storysim {

namespace detail {

inline void check_fit_inputs(const Dag& dag, const std::vector<Observation>& data) {
  ValidationReport report;
  validate_dag(dag, report);
  if (!report.ok())
    throw std::invalid_argument("invalid graph: " + report.issues.front().message);
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data[r].size() != static_cast<std::size_t>(dag.size()))
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(data[r].size()) +
                      " cells, expected " + std::to_string(dag.size()));
    for (int v = 0; v < dag.size(); ++v) {
      int s = data[r][v];
      if (s == Observation::kMissing) continue;
      if (s < 0 || s >= dag.variables[v].cardinality())
        throw DataError("row " + std::to_string(r) + " has state " + std::to_string(s) +
                        " out of range for variable '" + dag.variables[v].name + "'");
    }
  }
}

// Distinct rows with multiplicities; map keeps the accumulation order
// deterministic so refits are byte-identical.
inline std::map<std::vector<int>, double> pattern_counts(const std::vector<Observation>& data) {
  std::map<std::vector<int>, double> patterns;
  for (const Observation& row : data) patterns[row.states] += 1.0;
  return patterns;
}

inline void add_counts_for_node(Cpt& c, std::span<const int> assignment, double weight) {
  c.table[c.row_index_from_assignment(assignment) * static_cast<std::size_t>(c.child_card) +
          static_cast<std::size_t>(assignment[c.child])] += weight;
}

inline void add_complete_counts(std::vector<Cpt>& counts, std::span<const int> assignment,
                                double weight) {
  for (Cpt& c : counts) add_counts_for_node(c, assignment, weight);
}

// (count + s) / (row_total + s * card); an all-zero row at s = 0 falls back
// to the uniform distribution.
inline std::vector<Cpt> normalize_counts(const std::vector<Cpt>& counts, double smoothing) {
  std::vector<Cpt> cpts = counts;
  for (Cpt& c : cpts) {
    for (std::size_t r = 0; r < c.rows(); ++r) {
      auto row = c.row(r);
      double total = 0.0;
      for (double v : row) total += v;
      double denom = total + smoothing * static_cast<double>(c.child_card);
      if (denom > 0.0)
        for (double& v : row) v = (v + smoothing) / denom;
      else
        for (double& v : row) v = 1.0 / static_cast<double>(c.child_card);
    }
  }
  return cpts;
}

}  // namespace detail

// Closed-form maximum likelihood fit from fully observed rows. Rows with
// missing cells are rejected; use fit_em for those.
inline BayesianNetwork fit_mle(const Dag& dag, const std::vector<Observation>& data,
                               double smoothing = 1.0) {
  if (smoothing < 0.0) throw std::invalid_argument("smoothing must be non-negative");
  detail::check_fit_inputs(dag, data);
  for (std::size_t r = 0; r < data.size(); ++r)
    if (!data[r].complete())
      throw DataError("row " + std::to_string(r) + " has missing cells; use fit_em");

  std::vector<Cpt> counts;
  counts.reserve(static_cast<std::size_t>(dag.size()));
  for (int v = 0; v < dag.size(); ++v) counts.push_back(make_cpt_shell(dag, v));

  for (const auto& [pattern, weight] : detail::pattern_counts(data))
    detail::add_complete_counts(counts, pattern, weight);

  BayesianNetwork net;
  net.dag = dag;
  net.cpts = detail::normalize_counts(counts, smoothing);
  return net;
}

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-6;
  double smoothing = 1.0;
  std::uint64_t init_seed = 0;
};

struct EmReport {
  int iterations = 0;            // E-steps performed
  std::vector<double> ll_trace;  // observed-data log likelihood per E-step
  bool converged = false;
};

namespace detail {

constexpr std::uint64_t kEmInitTag = 0x656d2d696e697400ull;  // stream tag for the jittered init

// Uniform rows with a +/-1% multiplicative jitter, renormalized. The jitter
// breaks symmetry between otherwise identical rows.
inline BayesianNetwork em_initial_network(const Dag& dag, std::uint64_t init_seed) {
  BayesianNetwork net;
  net.dag = dag;
  Rng rng = make_rng(init_seed, {kEmInitTag});
  for (int v = 0; v < dag.size(); ++v) {
    Cpt c = make_cpt_shell(dag, v);
    for (std::size_t r = 0; r < c.rows(); ++r) {
      auto row = c.row(r);
      double total = 0.0;
      for (double& p : row) {
        p = (1.0 / static_cast<double>(c.child_card)) * (1.0 + 0.01 * (2.0 * uniform01(rng) - 1.0));
        total += p;
      }
      for (double& p : row) p /= total;
    }
    net.cpts.push_back(std::move(c));
  }
  return net;
}

inline Observation pattern_as_observation(const std::vector<int>& pattern) {
  Observation o;
  o.states = pattern;
  return o;
}

}  // namespace detail

// Expectation-maximization over rows with missing cells, assuming the cells
// are missing at random. Per-row posteriors are exact (variable elimination),
// so the observed-data log likelihood is non-decreasing when smoothing is 0.
// Fully observed rows reuse the fit_mle counting path, which makes the two
// fits bit-identical on complete data.
inline BayesianNetwork fit_em(const Dag& dag, const std::vector<Observation>& data,
                              const EmOptions& opts = {}, EmReport* report = nullptr) {
  if (opts.smoothing < 0.0) throw std::invalid_argument("smoothing must be non-negative");
  if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  detail::check_fit_inputs(dag, data);

  std::vector<bool> seen(static_cast<std::size_t>(dag.size()), false);
  for (const Observation& row : data)
    for (int v = 0; v < dag.size(); ++v)
      if (row.has(v)) seen[static_cast<std::size_t>(v)] = true;
  for (int v = 0; v < dag.size(); ++v)
    if (!seen[static_cast<std::size_t>(v)])
      throw DataError("variable '" + dag.variables[static_cast<std::size_t>(v)].name +
                      "' is missing in every row");

  std::vector<Cpt> base_counts;
  base_counts.reserve(static_cast<std::size_t>(dag.size()));
  for (int v = 0; v < dag.size(); ++v) base_counts.push_back(make_cpt_shell(dag, v));

  std::map<std::vector<int>, double> complete_patterns;
  std::map<std::vector<int>, double> incomplete;
  for (const auto& [pattern, weight] : detail::pattern_counts(data)) {
    bool complete = std::none_of(pattern.begin(), pattern.end(),
                                 [](int s) { return s == Observation::kMissing; });
    if (complete) {
      detail::add_complete_counts(base_counts, pattern, weight);
      complete_patterns[pattern] = weight;
    } else {
      incomplete[pattern] = weight;
    }
  }

  BayesianNetwork net = detail::em_initial_network(dag, opts.init_seed);
  EmReport local;
  double prev_ll = kNegInf;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    std::vector<Cpt> counts = base_counts;
    double ll = 0.0;

    for (const auto& [pattern, weight] : complete_patterns)
      ll += weight * std::log(net.joint_prob(pattern));

    for (const auto& [pattern, weight] : incomplete) {
      Observation evidence = detail::pattern_as_observation(pattern);
      double z = 0.0;
      bool impossible = false;
      try {
        z = evidence_probability(net, evidence);
        if (!(z > 0.0)) impossible = true;
      } catch (const ImpossibleEvidenceError&) {
        impossible = true;
      }
      if (impossible) {
        ll = kNegInf;
        break;
      }
      ll += weight * std::log(z);

      for (int v = 0; v < dag.size(); ++v) {
        Cpt& c = counts[static_cast<std::size_t>(v)];
        std::vector<int> hidden;  // family members absent from this row
        if (pattern[v] == Observation::kMissing) hidden.push_back(v);
        for (int p : c.parents)
          if (pattern[p] == Observation::kMissing) hidden.push_back(p);
        if (hidden.empty()) {
          detail::add_counts_for_node(c, pattern, weight);
          continue;
        }
        Factor post = query_joint(net, hidden, evidence);
        std::vector<int> assignment = pattern;
        std::vector<int> states(post.vars.size());
        for (std::size_t i = 0; i < post.values.size(); ++i) {
          detail::decode(i, post.cards, states);
          for (std::size_t k = 0; k < post.vars.size(); ++k) assignment[post.vars[k]] = states[k];
          c.table[c.row_index_from_assignment(assignment) * static_cast<std::size_t>(c.child_card) +
                  static_cast<std::size_t>(assignment[v])] += weight * post.values[i];
        }
      }
    }

    if (!std::isfinite(ll))
      throw NumericalError("observed-data log likelihood is not finite", iter);
    local.ll_trace.push_back(ll);
    local.iterations = iter;

    if (iter > 1 && std::abs(ll - prev_ll) < opts.tol) {
      local.converged = true;
      break;
    }
    prev_ll = ll;
    net.cpts = detail::normalize_counts(counts, opts.smoothing);
  }

  if (report) *report = local;
  return net;
}

}  // namespace storysim

#endif
