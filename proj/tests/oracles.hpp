// Reference implementations the tests compare against. These deliberately
// avoid the library's inference code paths: queries by full-joint
// enumeration, likelihoods by a direct loop, mixture fits by a plain EM.
#ifndef STORYSIM_TESTS_ORACLES_HPP
#define STORYSIM_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "storysim/bayesnet.hpp"
#include "storysim/irt.hpp"

namespace oracle {

inline double joint_prob(const storysim::BayesianNetwork& net, const std::vector<int>& full) {
  double p = 1.0;
  for (int v = 0; v < net.size(); ++v) p *= net.cpt(v).prob(full);
  return p;
}

// Walk every complete assignment, applying fn(assignment, joint probability).
template <typename F>
void for_each_assignment(const storysim::BayesianNetwork& net, F&& fn) {
  const int n = net.size();
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(a, joint_prob(net, a));
    int v = n - 1;
    while (v >= 0) {
      if (++a[static_cast<std::size_t>(v)] < net.card(v)) break;
      a[static_cast<std::size_t>(v)] = 0;
      --v;
    }
    if (v < 0) break;
  }
}

inline double evidence_prob(const storysim::BayesianNetwork& net,
                            const storysim::Observation& evidence) {
  double total = 0.0;
  for_each_assignment(net, [&](const std::vector<int>& a, double p) {
    for (int v = 0; v < net.size(); ++v)
      if (evidence.has(v) && a[static_cast<std::size_t>(v)] != evidence[v]) return;
    total += p;
  });
  return total;
}

inline std::vector<double> query(const storysim::BayesianNetwork& net, int target,
                                 const storysim::Observation& evidence) {
  std::vector<double> dist(static_cast<std::size_t>(net.card(target)), 0.0);
  for_each_assignment(net, [&](const std::vector<int>& a, double p) {
    for (int v = 0; v < net.size(); ++v)
      if (evidence.has(v) && a[static_cast<std::size_t>(v)] != evidence[v]) return;
    dist[static_cast<std::size_t>(a[static_cast<std::size_t>(target)])] += p;
  });
  double z = 0.0;
  for (double d : dist) z += d;
  if (!(z > 0.0)) throw std::runtime_error("oracle: evidence has zero probability");
  for (double& d : dist) d /= z;
  return dist;
}

// Bernoulli response log likelihood written as the straightest possible loop.
inline double response_loglik(const storysim::ResponseDataset& data,
                              const std::vector<double>& alpha,
                              const std::vector<double>& beta) {
  double ll = 0.0;
  for (int i = 0; i < data.n_agents(); ++i)
    for (int j = 0; j < data.n_questions(); ++j) {
      int y = data.at(i, j);
      if (y == storysim::kUnanswered) continue;
      double p = 1.0 / (1.0 + std::exp(-alpha[static_cast<std::size_t>(i)] *
                                       beta[static_cast<std::size_t>(j)]));
      ll += y == 1 ? std::log(p) : std::log(1.0 - p);
    }
  return ll;
}

struct MixtureFit {
  double mean_low = 0.0, mean_high = 0.0;
  double sd_low = 1.0, sd_high = 1.0;
  double weight_high = 0.5;
};

// Plain 1-d two-component Gaussian EM, initialized by a median split.
inline MixtureFit fit_two_component(std::vector<double> x, int iters = 500) {
  if (x.size() < 4) throw std::runtime_error("oracle: too few samples for a mixture fit");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size(), half = n / 2;
  MixtureFit f;
  double s = 0.0, ss = 0.0;
  for (double v : x) {
    s += v;
    ss += v * v;
  }
  double sd_all = std::sqrt(std::max(ss / n - (s / n) * (s / n), 1e-6));
  for (std::size_t i = 0; i < half; ++i) f.mean_low += x[i];
  for (std::size_t i = half; i < n; ++i) f.mean_high += x[i];
  f.mean_low /= static_cast<double>(half);
  f.mean_high /= static_cast<double>(n - half);
  f.sd_low = f.sd_high = sd_all;

  std::vector<double> r(n, 0.5);
  auto logpdf = [](double v, double m, double sd) {
    double z = (v - m) / sd;
    return -0.5 * z * z - std::log(sd);
  };
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double lh = std::log(f.weight_high) + logpdf(x[i], f.mean_high, f.sd_high);
      double ll = std::log(1.0 - f.weight_high) + logpdf(x[i], f.mean_low, f.sd_low);
      r[i] = 1.0 / (1.0 + std::exp(ll - lh));
    }
    double wh = 0.0, mh = 0.0, ml = 0.0, vh = 0.0, vl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wh += r[i];
      mh += r[i] * x[i];
      ml += (1.0 - r[i]) * x[i];
    }
    double wl = static_cast<double>(n) - wh;
    mh /= wh;
    ml /= wl;
    for (std::size_t i = 0; i < n; ++i) {
      vh += r[i] * (x[i] - mh) * (x[i] - mh);
      vl += (1.0 - r[i]) * (x[i] - ml) * (x[i] - ml);
    }
    f.weight_high = wh / static_cast<double>(n);
    f.mean_high = mh;
    f.mean_low = ml;
    f.sd_high = std::max(std::sqrt(vh / wh), 1e-3);
    f.sd_low = std::max(std::sqrt(vl / wl), 1e-3);
  }
  return f;
}

}  // namespace oracle

#endif
