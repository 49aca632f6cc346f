#ifndef STORYSIM_ENTROPY_HPP
#define STORYSIM_ENTROPY_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/hierarchical.hpp"
#include "storysim/population.hpp"
#include "storysim/trace_stats.hpp"

namespace storysim {

struct EntropyConfig {
  int bins = 50;
  double lo = 0.0;
  double hi = 1.0;

  void check() const {
    if (bins < 2) throw std::invalid_argument("need at least 2 bins");
    if (!(lo < hi)) throw std::invalid_argument("range lower bound must be below upper bound");
  }
};

// Default histogram windows: alpha covers the mixture well past 3 sigma on
// both sides, beta covers its whole support.
inline constexpr EntropyConfig kAlphaEntropy{50, -6.0, 6.0};
inline constexpr EntropyConfig kBetaEntropy{50, 0.0, 1.0};

// Shannon entropy (base 2) of the binned sample distribution, divided by
// log2(bins): 0 is a point mass, 1 is bin-uniform. Out-of-range samples are
// clamped into the edge bins.
inline double normalized_entropy(std::span<const double> samples, const EntropyConfig& cfg) {
  cfg.check();
  if (samples.empty()) throw std::invalid_argument("need at least 1 sample");
  std::vector<double> counts(static_cast<std::size_t>(cfg.bins), 0.0);
  const double scale = static_cast<double>(cfg.bins) / (cfg.hi - cfg.lo);
  for (double x : samples) {
    int idx = static_cast<int>(std::floor((x - cfg.lo) * scale));
    idx = std::clamp(idx, 0, cfg.bins - 1);
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  const double total = static_cast<double>(samples.size());
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;  // 0 log 0 := 0
    double p = c / total;
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(cfg.bins));
}

// Generation-time truth needed to score a recovery run.
struct GroundTruth {
  MixtureHyperparams mixture;
  std::vector<double> alphas;
  std::vector<double> betas;
};

struct CoverageRow {
  std::string name;
  ParamFamily family = ParamFamily::hyper;
  double truth = 0.0;
  HdiInterval hdi;
  bool covered = false;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  int hyper_covered = 0, hyper_total = 0;
  int alpha_covered = 0, alpha_total = 0;
  int beta_covered = 0, beta_total = 0;

  double hyper_rate() const { return hyper_total ? static_cast<double>(hyper_covered) / hyper_total : 0.0; }
  double alpha_rate() const { return alpha_total ? static_cast<double>(alpha_covered) / alpha_total : 0.0; }
  double beta_rate() const { return beta_total ? static_cast<double>(beta_covered) / beta_total : 0.0; }
};

// Is each true value inside its posterior HDI? Group indicators have no
// point truth-in-interval notion and are skipped.
inline CoverageReport coverage_check(const PosteriorTrace& trace, const GroundTruth& truth,
                                     double mass = 0.94) {
  if (truth.alphas.size() != static_cast<std::size_t>(trace.n_agents))
    throw std::invalid_argument("truth has " + std::to_string(truth.alphas.size()) +
                                " alphas for " + std::to_string(trace.n_agents) + " agents");
  if (truth.betas.size() != static_cast<std::size_t>(trace.n_questions))
    throw std::invalid_argument("truth has " + std::to_string(truth.betas.size()) +
                                " betas for " + std::to_string(trace.n_questions) + " questions");

  CoverageReport report;
  auto add = [&](int p, double true_value, ParamFamily family, int& covered, int& total) {
    CoverageRow row;
    row.name = trace.names[static_cast<std::size_t>(p)];
    row.family = family;
    row.truth = true_value;
    row.hdi = compute_hdi(trace.pooled(p), mass);
    row.covered = row.hdi.contains(true_value);
    ++total;
    if (row.covered) ++covered;
    report.rows.push_back(std::move(row));
  };

  add(PosteriorTrace::kMuSafe, truth.mixture.mu_safe, ParamFamily::hyper, report.hyper_covered,
      report.hyper_total);
  add(PosteriorTrace::kSigmaSafe, truth.mixture.sigma_safe, ParamFamily::hyper,
      report.hyper_covered, report.hyper_total);
  add(PosteriorTrace::kMuRisky, truth.mixture.mu_risky, ParamFamily::hyper, report.hyper_covered,
      report.hyper_total);
  add(PosteriorTrace::kSigmaRisky, truth.mixture.sigma_risky, ParamFamily::hyper,
      report.hyper_covered, report.hyper_total);
  for (int i = 0; i < trace.n_agents; ++i)
    add(trace.alpha_index(i), truth.alphas[static_cast<std::size_t>(i)], ParamFamily::alpha,
        report.alpha_covered, report.alpha_total);
  for (int j = 0; j < trace.n_questions; ++j)
    add(trace.beta_index(j), truth.betas[static_cast<std::size_t>(j)], ParamFamily::beta,
        report.beta_covered, report.beta_total);
  return report;
}

}  // namespace storysim

#endif
