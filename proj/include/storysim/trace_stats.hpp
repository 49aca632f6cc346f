#ifndef STORYSIM_TRACE_STATS_HPP
#define STORYSIM_TRACE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/hierarchical.hpp"
#include "storysim/stats.hpp"

namespace storysim {

struct HdiInterval {
  double lower = 0.0;
  double upper = 0.0;
  double mass = 0.94;

  bool contains(double x) const { return x >= lower && x <= upper; }
  double width() const { return upper - lower; }
};

// Narrowest contiguous interval holding ceil(mass * n) of the samples.
inline HdiInterval compute_hdi(std::span<const double> samples, double mass = 0.94) {
  if (samples.size() < 2) throw std::invalid_argument("HDI needs at least 2 samples");
  if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("mass must lie in (0,1)");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t k = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(sorted.size())));
  k = std::max<std::size_t>(k, 1);
  k = std::min(k, sorted.size());
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= sorted.size(); ++i) {
    double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return HdiInterval{sorted[best], sorted[best + k - 1], mass};
}

namespace detail {

// Split each chain in half (dropping one trailing draw when odd), so a
// drifting chain shows up as between-half disagreement.
inline std::vector<std::vector<double>> split_chains(const PosteriorTrace& trace, int p) {
  std::vector<std::vector<double>> halves;
  for (int c = 0; c < trace.n_chains; ++c) {
    auto full = trace.chain(p, c);
    std::size_t m = full.size() / 2;
    if (m == 0) continue;
    halves.emplace_back(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(m));
    halves.emplace_back(full.begin() + static_cast<std::ptrdiff_t>(m),
                        full.begin() + static_cast<std::ptrdiff_t>(2 * m));
  }
  return halves;
}

struct ChainPool {
  double w = 0.0;         // mean within-chain variance
  double var_plus = 0.0;  // pooled variance estimate
  std::size_t m = 0;      // half-chain length
  bool usable = false;
};

inline ChainPool pool_variances(const std::vector<std::vector<double>>& halves) {
  ChainPool pool;
  if (halves.size() < 2 || halves.front().size() < 2) return pool;
  pool.m = halves.front().size();
  std::vector<double> means;
  means.reserve(halves.size());
  double w = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean(h));
    w += variance(h);
  }
  pool.w = w / static_cast<double>(halves.size());
  double b = static_cast<double>(pool.m) * variance(means);
  double md = static_cast<double>(pool.m);
  pool.var_plus = (md - 1.0) / md * pool.w + b / md;
  pool.usable = true;
  return pool;
}

}  // namespace detail

// Split-chain potential scale reduction; NaN when the draws are constant.
inline double split_rhat(const PosteriorTrace& trace, int p) {
  auto halves = detail::split_chains(trace, p);
  detail::ChainPool pool = detail::pool_variances(halves);
  if (!pool.usable || !(pool.w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(pool.var_plus / pool.w);
}

// Effective sample size via the initial-monotone-positive-sequence estimate
// of the autocorrelation time, on split chains. NaN for constant draws.
inline double effective_sample_size(const PosteriorTrace& trace, int p) {
  auto halves = detail::split_chains(trace, p);
  detail::ChainPool pool = detail::pool_variances(halves);
  if (!pool.usable || !(pool.var_plus > 0.0) || !(pool.w > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = pool.m;
  const std::size_t n_chains = halves.size();

  std::vector<double> chain_means;
  chain_means.reserve(n_chains);
  for (const auto& h : halves) chain_means.push_back(mean(h));

  auto mean_acov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n_chains; ++c) {
      const auto& h = halves[c];
      double mu = chain_means[c];
      double s = 0.0;
      for (std::size_t k = 0; k + lag < m; ++k) s += (h[k] - mu) * (h[k + lag] - mu);
      acc += s / static_cast<double>(m);
    }
    return acc / static_cast<double>(n_chains);
  };

  auto rho = [&](std::size_t lag) { return 1.0 - (pool.w - mean_acov(lag)) / pool.var_plus; };

  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
    double pair = (2 * k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += pair;
  }
  tau = std::max(2.0 * tau - 1.0, 1e-8);
  return static_cast<double>(n_chains) * static_cast<double>(m) / tau;
}

struct ParamSummary {
  std::string name;
  ParamFamily family = ParamFamily::hyper;
  double mean = 0.0;
  double sd = 0.0;
  HdiInterval hdi;
  double rhat = 0.0;
  double ess = 0.0;
  bool degenerate = false;  // constant draws: sd 0, no usable R-hat/ESS
};

// One row per scalar parameter: 4 hyperparameters, N alphas, N groups,
// Q betas, in trace order.
inline std::vector<ParamSummary> summarize(const PosteriorTrace& trace, double mass = 0.94) {
  if (trace.param_count() == 0 || trace.n_draws * trace.n_chains == 0)
    throw std::invalid_argument("trace is empty");
  std::vector<ParamSummary> rows;
  rows.reserve(static_cast<std::size_t>(trace.param_count()));
  for (int p = 0; p < trace.param_count(); ++p) {
    ParamSummary row;
    row.name = trace.names[static_cast<std::size_t>(p)];
    row.family = trace.families[static_cast<std::size_t>(p)];
    auto pooled = trace.pooled(p);
    row.mean = mean(pooled);
    row.sd = pooled.size() > 1 ? stddev(pooled) : 0.0;
    row.hdi = pooled.size() > 1 ? compute_hdi(pooled, mass)
                                : HdiInterval{pooled[0], pooled[0], mass};
    row.rhat = split_rhat(trace, p);
    row.ess = effective_sample_size(trace, p);
    row.degenerate = !(row.sd > 0.0) || std::isnan(row.rhat) || std::isnan(row.ess);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace storysim

#endif
