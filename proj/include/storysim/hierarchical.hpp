#ifndef STORYSIM_HIERARCHICAL_HPP
#define STORYSIM_HIERARCHICAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "storysim/errors.hpp"
#include "storysim/irt.hpp"
#include "storysim/rng.hpp"
#include "storysim/stats.hpp"

namespace storysim {

// Priors of the recovery model. The asymmetric location priors on the two
// mixture means are the only label-switching guard; no ordering constraint
// is imposed during sampling.
struct HierarchicalModelSpec {
  double mu_safe_loc = -1.0;
  double mu_safe_scale = 2.0;
  double mu_risky_loc = 1.0;
  double mu_risky_scale = 2.0;
  double sigma_rate = 1.0;  // Exponential prior rate for both sigmas
  double group_prob = 0.5;  // prior P(G = risky)
  double beta_a = 1.0;
  double beta_b = 1.0;

  void check() const {
    if (!(mu_safe_scale > 0.0) || !(mu_risky_scale > 0.0))
      throw std::invalid_argument("prior scales must be positive");
    if (!(sigma_rate > 0.0)) throw std::invalid_argument("sigma prior rate must be positive");
    if (!(group_prob >= 0.0 && group_prob <= 1.0))
      throw std::invalid_argument("group prior probability must lie in [0,1]");
    if (!(beta_a > 0.0) || !(beta_b > 0.0))
      throw std::invalid_argument("beta prior shapes must be positive");
  }
};

struct McmcConfig {
  int chains = 4;
  int draws = 2000;    // retained per chain
  int burn_in = 2000;  // adaptation happens here
  int thin = 1;
  double step_alpha = 0.5;  // random-walk scale for alpha
  double step_beta = 0.8;   // logit-space scale for beta
  double step_sigma = 0.4;  // log-space scale for sigmas
  double step_mu = 0.3;     // used when marginalized (mu is conjugate otherwise)
  int adapt_window = 50;    // sweeps per step-size adjustment during burn-in
  // Marginalized mode drops the explicit group indicators: alphas get the
  // two-component mixture prior and groups are re-drawn per retained draw.
  bool marginalized = false;
  std::uint64_t seed = 0;

  void check() const {
    if (chains < 1) throw std::invalid_argument("chains must be at least 1");
    if (draws < 1) throw std::invalid_argument("draws must be at least 1");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
    if (thin < 1) throw std::invalid_argument("thin must be at least 1");
    if (adapt_window < 1) throw std::invalid_argument("adapt_window must be at least 1");
    if (!(step_alpha > 0.0) || !(step_beta > 0.0) || !(step_sigma > 0.0) || !(step_mu > 0.0))
      throw std::invalid_argument("step sizes must be positive");
  }
};

// One full parameter assignment of the recovery model.
struct ParamState {
  double mu_safe = 0.0;
  double sigma_safe = 1.0;
  double mu_risky = 0.0;
  double sigma_risky = 1.0;
  std::vector<double> alpha;  // per agent
  std::vector<int> group;     // per agent, 0 safe / 1 risky
  std::vector<double> beta;   // per question
};

enum class ParamFamily { hyper, alpha, group, beta };

struct ChainStats {
  double accept_alpha = 0.0;
  double accept_beta = 0.0;
  double accept_sigma = 0.0;
  double accept_mu = 1.0;  // conjugate updates always accept
  long divergences = 0;
};

struct PosteriorTrace {
  int n_chains = 0;
  int n_draws = 0;  // retained draws per chain
  int n_agents = 0;
  int n_questions = 0;
  std::vector<std::string> names;
  std::vector<ParamFamily> families;
  // samples[p] holds n_chains blocks of n_draws values (chain-major)
  std::vector<std::vector<double>> samples;
  std::vector<ChainStats> chain_stats;
  bool swap_warning = false;

  static constexpr int kMuSafe = 0;
  static constexpr int kSigmaSafe = 1;
  static constexpr int kMuRisky = 2;
  static constexpr int kSigmaRisky = 3;

  int param_count() const { return static_cast<int>(names.size()); }
  int alpha_index(int i) const { return 4 + i; }
  int group_index(int i) const { return 4 + n_agents + i; }
  int beta_index(int j) const { return 4 + 2 * n_agents + j; }

  std::span<const double> pooled(int p) const { return samples[static_cast<std::size_t>(p)]; }

  std::span<const double> chain(int p, int c) const {
    return std::span<const double>(samples[static_cast<std::size_t>(p)])
        .subspan(static_cast<std::size_t>(c) * static_cast<std::size_t>(n_draws),
                 static_cast<std::size_t>(n_draws));
  }
};

// Exact full conditional P(G = risky | alpha, hyperparameters): the response
// likelihood depends on G only through alpha, so this is a two-way Bayes rule.
inline double group_conditional_prob(double alpha, double mu_safe, double sigma_safe,
                                     double mu_risky, double sigma_risky, double group_prob) {
  double lr = std::log(group_prob) + normal_logpdf(alpha, mu_risky, sigma_risky);
  double ls = std::log1p(-group_prob) + normal_logpdf(alpha, mu_safe, sigma_safe);
  if (lr == kNegInf && ls == kNegInf) return 0.5;
  return sigmoid(lr - ls);
}

namespace detail {

// Beta log kernel that stays finite on the closed interval when a shape
// equals 1 (the uniform default), instead of producing 0 * log(0).
inline double beta_prior_logkernel(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) return kNegInf;
  double t = 0.0;
  if (a != 1.0) t += (a - 1.0) * std::log(x);
  if (b != 1.0) t += (b - 1.0) * std::log1p(-x);
  return t;
}

inline double mixture_alpha_logpdf(double alpha, const ParamState& st, double group_prob) {
  return logsumexp(std::log1p(-group_prob) + normal_logpdf(alpha, st.mu_safe, st.sigma_safe),
                   std::log(group_prob) + normal_logpdf(alpha, st.mu_risky, st.sigma_risky));
}

}  // namespace detail

// Bernoulli response log likelihood; unanswered cells contribute zero.
inline double log_likelihood(const ParamState& st, const ResponseDataset& data) {
  const int n = data.n_agents(), q = data.n_questions();
  if (st.alpha.size() != static_cast<std::size_t>(n) ||
      st.beta.size() != static_cast<std::size_t>(q))
    throw std::invalid_argument("state dimensions do not match the response matrix");
  double ll = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) {
      int y = data.at(i, j);
      if (y == kUnanswered) continue;
      double x = st.alpha[static_cast<std::size_t>(i)] * st.beta[static_cast<std::size_t>(j)];
      ll += y == 1 ? log_sigmoid(x) : log_sigmoid(-x);
    }
  return ll;
}

// Log prior of the full state; -inf (not an exception) on support violations.
inline double log_prior(const ParamState& st, const HierarchicalModelSpec& spec) {
  if (!(st.sigma_safe > 0.0) || !(st.sigma_risky > 0.0)) return kNegInf;
  if (st.alpha.size() != st.group.size()) throw std::invalid_argument("alpha/group size mismatch");
  double lp = normal_logpdf(st.mu_safe, spec.mu_safe_loc, spec.mu_safe_scale) +
              normal_logpdf(st.mu_risky, spec.mu_risky_loc, spec.mu_risky_scale) +
              exponential_logpdf(st.sigma_safe, spec.sigma_rate) +
              exponential_logpdf(st.sigma_risky, spec.sigma_rate);
  for (std::size_t i = 0; i < st.alpha.size(); ++i) {
    if (!std::isfinite(st.alpha[i])) return kNegInf;
    int g = st.group[i];
    if (g != 0 && g != 1) return kNegInf;
    lp += g == 1 ? std::log(spec.group_prob) +
                       normal_logpdf(st.alpha[i], st.mu_risky, st.sigma_risky)
                 : std::log1p(-spec.group_prob) +
                       normal_logpdf(st.alpha[i], st.mu_safe, st.sigma_safe);
  }
  for (double b : st.beta) {
    double t = detail::beta_prior_logkernel(b, spec.beta_a, spec.beta_b);
    if (t == kNegInf) return kNegInf;
    lp += t;
  }
  return lp;
}

inline double log_posterior(const ParamState& st, const ResponseDataset& data,
                            const HierarchicalModelSpec& spec) {
  double lp = log_prior(st, spec);
  if (lp == kNegInf) return kNegInf;
  return lp + log_likelihood(st, data);
}

namespace detail {

struct SweepCounters {
  long alpha_attempts = 0, alpha_accepts = 0;
  long beta_attempts = 0, beta_accepts = 0;
  long sigma_attempts = 0, sigma_accepts = 0;
  long sigma_walk_attempts = 0, sigma_walk_accepts = 0;
  long mu_attempts = 0, mu_accepts = 0;
  long divergences = 0;

  void reset() { *this = SweepCounters{}; }
};

constexpr std::uint64_t kChainTag = 0x636861696eull;

// Metropolis accept/reject on a log ratio. NaN or +inf ratios are divergent
// proposals: rejected and counted. -inf is a clean support rejection.
inline bool metropolis_accept(double delta, Rng& rng, long& divergences) {
  if (std::isnan(delta) || delta == std::numeric_limits<double>::infinity()) {
    ++divergences;
    return false;
  }
  if (delta == kNegInf) return false;
  if (delta >= 0.0) return true;
  return std::log(uniform01(rng)) < delta;
}

class ChainRunner {
 public:
  ChainRunner(const ResponseDataset& data, const HierarchicalModelSpec& spec,
              const McmcConfig& cfg, int chain_index)
      : data_(data),
        spec_(spec),
        cfg_(cfg),
        n_(data.n_agents()),
        q_(data.n_questions()),
        rng_(make_rng(cfg.seed, {kChainTag, static_cast<std::uint64_t>(chain_index)})),
        step_sigma_(cfg.step_sigma),
        step_mu_(cfg.step_mu) {}

  void run(PosteriorTrace& trace, int chain_index) {
    init_state();
    const int total = cfg_.burn_in + cfg_.draws * cfg_.thin;
    int window_sweeps = 0;
    int retained = 0;
    for (int sweep = 0; sweep < total; ++sweep) {
      bool adapting = sweep < cfg_.burn_in;
      sweep_once();
      if (adapting) {
        if (++window_sweeps == cfg_.adapt_window) {
          adapt_steps(window_sweeps);
          window_sweeps = 0;
          counters_.reset();
        }
        if (sweep == cfg_.burn_in - 1) counters_.reset();
      } else if ((sweep - cfg_.burn_in + 1) % cfg_.thin == 0) {
        record_draw(trace, chain_index, retained++);
      }
    }

    ChainStats& cs = trace.chain_stats[static_cast<std::size_t>(chain_index)];
    cs.accept_alpha = rate(counters_.alpha_accepts, counters_.alpha_attempts);
    cs.accept_beta = rate(counters_.beta_accepts, counters_.beta_attempts);
    cs.accept_sigma = rate(counters_.sigma_accepts, counters_.sigma_attempts);
    cs.accept_mu = cfg_.marginalized ? rate(counters_.mu_accepts, counters_.mu_attempts) : 1.0;
    cs.divergences = counters_.divergences;
  }

 private:
  static double rate(long accepts, long attempts) {
    return attempts > 0 ? static_cast<double>(accepts) / static_cast<double>(attempts) : 1.0;
  }

  // Every chain starts from the same data-derived point, dispersed by how
  // uncertain that point is: burn-in then only has to equilibrate locally
  // instead of crossing from a random corner of the prior. The dispersion
  // must err wide, never narrow: group-scale moves contract quickly from a
  // too-wide start but cannot climb back out of a too-narrow one, so a
  // sparse-data chain seeded at a tight clustering would stay stuck there.
  // With no questions there is no data signal, so chains start from prior
  // draws instead.
  void init_state() {
    std::normal_distribution<double> z(0.0, 1.0);
    st_.alpha.resize(static_cast<std::size_t>(n_));
    st_.group.resize(static_cast<std::size_t>(n_));
    st_.beta.resize(static_cast<std::size_t>(q_));
    step_alpha_.assign(static_cast<std::size_t>(n_), cfg_.step_alpha);
    step_beta_.assign(static_cast<std::size_t>(q_), cfg_.step_beta);
    alpha_window_accepts_.assign(static_cast<std::size_t>(n_), 0);
    beta_window_accepts_.assign(static_cast<std::size_t>(q_), 0);
    if (q_ == 0) {
      st_.mu_safe = spec_.mu_safe_loc + 0.5 * z(rng_);
      st_.mu_risky = spec_.mu_risky_loc + 0.5 * z(rng_);
      st_.sigma_safe = std::exp(0.25 * z(rng_));
      st_.sigma_risky = std::exp(0.25 * z(rng_));
      for (int i = 0; i < n_; ++i) {
        st_.alpha[static_cast<std::size_t>(i)] = z(rng_);
        st_.group[static_cast<std::size_t>(i)] = uniform01(rng_) < spec_.group_prob ? 1 : 0;
      }
      return;
    }

    // Against a flat beta at the prior mean, the per-agent alpha MLE is the
    // empirical log odds divided by that beta; the continuity correction
    // keeps all-0 and all-1 agents finite. The score's own noise scale is
    // the empirical-logit standard error at p = 1/2, 2/sqrt(answered), on
    // the alpha axis; with one answer per agent that is the whole prior
    // width, with many answers it shrinks toward a plain jitter.
    double b0 = spec_.beta_a / (spec_.beta_a + spec_.beta_b);
    if (!(b0 > 0.0)) b0 = 0.5;
    std::vector<double> score(static_cast<std::size_t>(n_), 0.0);
    std::vector<double> noise(static_cast<std::size_t>(n_), 0.0);
    double noise_bar = 0.0;
    for (int i = 0; i < n_; ++i) {
      int ones = 0, answered = 0;
      for (int j = 0; j < q_; ++j) {
        int y = data_.at(i, j);
        if (y == kUnanswered) continue;
        ++answered;
        ones += y;
      }
      double x = answered == 0 ? 0.0
                               : std::log((ones + 0.5) / (answered - ones + 0.5));
      score[static_cast<std::size_t>(i)] = std::clamp(x / b0, -4.0, 4.0);
      noise[static_cast<std::size_t>(i)] =
          std::max(2.0 / (b0 * std::sqrt(static_cast<double>(std::max(answered, 1)))), 0.1);
      noise_bar += noise[static_cast<std::size_t>(i)];
    }
    noise_bar /= static_cast<double>(n_);

    // Deterministic 1-D two-means split of the scores seeds the group labels
    // and the mixture moments.
    double lo = *std::min_element(score.begin(), score.end());
    double hi = *std::max_element(score.begin(), score.end());
    if (hi - lo > 1e-9) {
      for (int pass = 0; pass < 20; ++pass) {
        double cut = 0.5 * (lo + hi);
        double sum_lo = 0.0, sum_hi = 0.0;
        long n_lo = 0, n_hi = 0;
        for (double x : score)
          if (x < cut) { sum_lo += x; ++n_lo; } else { sum_hi += x; ++n_hi; }
        if (n_lo == 0 || n_hi == 0) break;
        lo = sum_lo / static_cast<double>(n_lo);
        hi = sum_hi / static_cast<double>(n_hi);
      }
      double cut = 0.5 * (lo + hi);
      double ss_lo = 0.0, ss_hi = 0.0;
      long n_lo = 0, n_hi = 0;
      for (int i = 0; i < n_; ++i) {
        double x = score[static_cast<std::size_t>(i)];
        st_.group[static_cast<std::size_t>(i)] = x < cut ? 0 : 1;
        if (x < cut) { ss_lo += (x - lo) * (x - lo); ++n_lo; }
        else { ss_hi += (x - hi) * (x - hi); ++n_hi; }
      }
      double sd_lo = n_lo > 1 ? std::sqrt(ss_lo / static_cast<double>(n_lo)) : 0.0;
      double sd_hi = n_hi > 1 ? std::sqrt(ss_hi / static_cast<double>(n_hi)) : 0.0;
      // Cluster spreads of the point estimates understate the group scales
      // by exactly the score noise, so it is added back in quadrature.
      sd_lo = std::sqrt(sd_lo * sd_lo + noise_bar * noise_bar);
      sd_hi = std::sqrt(sd_hi * sd_hi + noise_bar * noise_bar);
      st_.mu_safe = lo + 0.05 * (1.0 + noise_bar) * z(rng_);
      st_.mu_risky = hi + 0.05 * (1.0 + noise_bar) * z(rng_);
      st_.sigma_safe = std::max(sd_lo, 0.25) * std::exp(0.05 * z(rng_));
      st_.sigma_risky = std::max(sd_hi, 0.25) * std::exp(0.05 * z(rng_));
    } else {
      st_.mu_safe = spec_.mu_safe_loc + 0.05 * z(rng_);
      st_.mu_risky = spec_.mu_risky_loc + 0.05 * z(rng_);
      st_.sigma_safe = std::exp(0.05 * z(rng_));
      st_.sigma_risky = std::exp(0.05 * z(rng_));
      for (int i = 0; i < n_; ++i)
        st_.group[static_cast<std::size_t>(i)] = uniform01(rng_) < spec_.group_prob ? 1 : 0;
    }
    for (int i = 0; i < n_; ++i)
      st_.alpha[static_cast<std::size_t>(i)] =
          score[static_cast<std::size_t>(i)] + noise[static_cast<std::size_t>(i)] * z(rng_);
    for (int j = 0; j < q_; ++j)
      st_.beta[static_cast<std::size_t>(j)] = std::clamp(b0 + 0.05 * z(rng_), 0.05, 0.95);
  }

  double loglik_agent(int i, double alpha) const {
    double ll = 0.0;
    for (int j = 0; j < q_; ++j) {
      int y = data_.at(i, j);
      if (y == kUnanswered) continue;
      double x = alpha * st_.beta[static_cast<std::size_t>(j)];
      ll += y == 1 ? log_sigmoid(x) : log_sigmoid(-x);
    }
    return ll;
  }

  double loglik_question(int j, double beta) const {
    double ll = 0.0;
    for (int i = 0; i < n_; ++i) {
      int y = data_.at(i, j);
      if (y == kUnanswered) continue;
      double x = st_.alpha[static_cast<std::size_t>(i)] * beta;
      ll += y == 1 ? log_sigmoid(x) : log_sigmoid(-x);
    }
    return ll;
  }

  double alpha_prior(int i, double alpha) const {
    if (cfg_.marginalized) return mixture_alpha_logpdf(alpha, st_, spec_.group_prob);
    return st_.group[static_cast<std::size_t>(i)] == 1
               ? normal_logpdf(alpha, st_.mu_risky, st_.sigma_risky)
               : normal_logpdf(alpha, st_.mu_safe, st_.sigma_safe);
  }

  void update_groups() {
    for (int i = 0; i < n_; ++i) {
      double pr = group_conditional_prob(st_.alpha[static_cast<std::size_t>(i)], st_.mu_safe,
                                         st_.sigma_safe, st_.mu_risky, st_.sigma_risky,
                                         spec_.group_prob);
      st_.group[static_cast<std::size_t>(i)] = uniform01(rng_) < pr ? 1 : 0;
    }
  }

  void update_alphas() {
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < n_; ++i) {
      double cur = st_.alpha[static_cast<std::size_t>(i)];
      double prop = cur + step_alpha_[static_cast<std::size_t>(i)] * z(rng_);
      double delta = loglik_agent(i, prop) - loglik_agent(i, cur) + alpha_prior(i, prop) -
                     alpha_prior(i, cur);
      ++counters_.alpha_attempts;
      if (metropolis_accept(delta, rng_, counters_.divergences)) {
        st_.alpha[static_cast<std::size_t>(i)] = prop;
        ++counters_.alpha_accepts;
        ++alpha_window_accepts_[static_cast<std::size_t>(i)];
      }
    }
  }

  void update_betas() {
    std::normal_distribution<double> z(0.0, 1.0);
    for (int j = 0; j < q_; ++j) {
      double cur = st_.beta[static_cast<std::size_t>(j)];
      double t = logit(cur);
      double prop = sigmoid(t + step_beta_[static_cast<std::size_t>(j)] * z(rng_));
      // logit-space walk; Jacobian log b(1-b) keeps the chain correct in
      // beta space
      double delta = loglik_question(j, prop) - loglik_question(j, cur) +
                     beta_prior_logkernel(prop, spec_.beta_a, spec_.beta_b) -
                     beta_prior_logkernel(cur, spec_.beta_a, spec_.beta_b) +
                     std::log(prop * (1.0 - prop)) - std::log(cur * (1.0 - cur));
      ++counters_.beta_attempts;
      if (metropolis_accept(delta, rng_, counters_.divergences)) {
        st_.beta[static_cast<std::size_t>(j)] = prop;
        ++counters_.beta_accepts;
        ++beta_window_accepts_[static_cast<std::size_t>(j)];
      }
    }
  }

  // Conjugate normal draw for one mixture mean given its members.
  void update_mu_conjugate(bool risky) {
    double prior_loc = risky ? spec_.mu_risky_loc : spec_.mu_safe_loc;
    double prior_scale = risky ? spec_.mu_risky_scale : spec_.mu_safe_scale;
    double sigma = risky ? st_.sigma_risky : st_.sigma_safe;
    double sum = 0.0;
    long count = 0;
    for (int i = 0; i < n_; ++i)
      if (st_.group[static_cast<std::size_t>(i)] == (risky ? 1 : 0)) {
        sum += st_.alpha[static_cast<std::size_t>(i)];
        ++count;
      }
    double prec = 1.0 / (prior_scale * prior_scale) +
                  static_cast<double>(count) / (sigma * sigma);
    double mean = (prior_loc / (prior_scale * prior_scale) + sum / (sigma * sigma)) / prec;
    std::normal_distribution<double> draw(mean, std::sqrt(1.0 / prec));
    (risky ? st_.mu_risky : st_.mu_safe) = draw(rng_);
  }

  void update_mu_rw(bool risky) {
    std::normal_distribution<double> z(0.0, 1.0);
    double& mu = risky ? st_.mu_risky : st_.mu_safe;
    double prior_loc = risky ? spec_.mu_risky_loc : spec_.mu_safe_loc;
    double prior_scale = risky ? spec_.mu_risky_scale : spec_.mu_safe_scale;
    double cur = mu;
    double prop = cur + step_mu_ * z(rng_);
    double delta = normal_logpdf(prop, prior_loc, prior_scale) -
                   normal_logpdf(cur, prior_loc, prior_scale);
    mu = prop;
    delta += alpha_mixture_sum();
    mu = cur;
    delta -= alpha_mixture_sum();
    ++counters_.mu_attempts;
    if (metropolis_accept(delta, rng_, counters_.divergences)) {
      mu = prop;
      ++counters_.mu_accepts;
    }
  }

  double alpha_mixture_sum() const {
    double s = 0.0;
    for (double a : st_.alpha) s += mixture_alpha_logpdf(a, st_, spec_.group_prob);
    return s;
  }

  // Conjugate-style update for one sigma: an independence proposal from the
  // group's inverse-gamma-shaped conditional (what an uninformative variance
  // prior would make exact), with the Metropolis ratio correcting for the
  // exponential prior. The proposal tracks the current group members, so
  // sigma never lags behind the alphas. Groups too small for a proper
  // proposal and the marginalized mode fall back to a log-space random walk
  // whose +log(sigma') - log(sigma) Jacobian keeps the move valid on the
  // original scale.
  void update_sigma(bool risky) {
    double& sigma = risky ? st_.sigma_risky : st_.sigma_safe;
    double cur = sigma;
    if (!cfg_.marginalized) {
      double mu = risky ? st_.mu_risky : st_.mu_safe;
      double ss = 0.0;
      long count = 0;
      for (int i = 0; i < n_; ++i) {
        if (st_.group[static_cast<std::size_t>(i)] != (risky ? 1 : 0)) continue;
        double d = st_.alpha[static_cast<std::size_t>(i)] - mu;
        ss += d * d;
        ++count;
      }
      // Below 8 members the proposal's gamma shape is so small that its tails
      // dominate and most proposals land far out; the walk mixes better there.
      if (count >= 8 && ss > 1e-12) {
        std::gamma_distribution<double> gamma_draw(0.5 * static_cast<double>(count) - 1.0, 1.0);
        double prop = std::sqrt(0.5 * ss / gamma_draw(rng_));
        double delta = spec_.sigma_rate * (cur - prop) + std::log(cur) - std::log(prop);
        ++counters_.sigma_attempts;
        if (metropolis_accept(delta, rng_, counters_.divergences)) {
          sigma = prop;
          ++counters_.sigma_accepts;
        }
        return;
      }
    }
    std::normal_distribution<double> z(0.0, 1.0);
    double prop = std::exp(std::log(cur) + step_sigma_ * z(rng_));
    double delta = exponential_logpdf(prop, spec_.sigma_rate) -
                   exponential_logpdf(cur, spec_.sigma_rate) + std::log(prop) - std::log(cur);
    if (cfg_.marginalized) {
      sigma = prop;
      delta += alpha_mixture_sum();
      sigma = cur;
      delta -= alpha_mixture_sum();
    } else {
      double mu = risky ? st_.mu_risky : st_.mu_safe;
      for (int i = 0; i < n_; ++i) {
        if (st_.group[static_cast<std::size_t>(i)] != (risky ? 1 : 0)) continue;
        double a = st_.alpha[static_cast<std::size_t>(i)];
        delta += normal_logpdf(a, mu, prop) - normal_logpdf(a, mu, cur);
      }
    }
    ++counters_.sigma_attempts;
    ++counters_.sigma_walk_attempts;
    if (metropolis_accept(delta, rng_, counters_.divergences)) {
      sigma = prop;
      ++counters_.sigma_accepts;
      ++counters_.sigma_walk_accepts;
    }
  }

  void sweep_once() {
    if (!cfg_.marginalized) update_groups();
    update_alphas();
    update_betas();
    if (cfg_.marginalized) {
      update_mu_rw(false);
      update_mu_rw(true);
    } else {
      update_mu_conjugate(false);
      update_mu_conjugate(true);
    }
    update_sigma(false);
    update_sigma(true);
  }

  // Robbins-Monro style step scaling toward ~30% acceptance, applied per
  // burn-in window. Alpha and beta steps adapt per coordinate: agents and
  // questions differ widely in how much data constrains them, so one shared
  // scale leaves weakly constrained coordinates under-stepped.
  void adapt_steps(int window_sweeps) {
    auto tune = [](double& step, double r) {
      step = std::clamp(step * std::exp(0.66 * (r - 0.3)), 1e-3, 10.0);
    };
    if (window_sweeps > 0) {
      for (int i = 0; i < n_; ++i) {
        std::size_t u = static_cast<std::size_t>(i);
        tune(step_alpha_[u], alpha_window_accepts_[u] / static_cast<double>(window_sweeps));
        alpha_window_accepts_[u] = 0;
      }
      for (int j = 0; j < q_; ++j) {
        std::size_t u = static_cast<std::size_t>(j);
        tune(step_beta_[u], beta_window_accepts_[u] / static_cast<double>(window_sweeps));
        beta_window_accepts_[u] = 0;
      }
    }
    if (counters_.sigma_walk_attempts > 0)
      tune(step_sigma_, static_cast<double>(counters_.sigma_walk_accepts) /
                            static_cast<double>(counters_.sigma_walk_attempts));
    if (cfg_.marginalized && counters_.mu_attempts > 0)
      tune(step_mu_, static_cast<double>(counters_.mu_accepts) /
                         static_cast<double>(counters_.mu_attempts));
  }

  void record_draw(PosteriorTrace& trace, int chain_index, int d) {
    const std::size_t at = static_cast<std::size_t>(chain_index) *
                               static_cast<std::size_t>(cfg_.draws) +
                           static_cast<std::size_t>(d);
    trace.samples[PosteriorTrace::kMuSafe][at] = st_.mu_safe;
    trace.samples[PosteriorTrace::kSigmaSafe][at] = st_.sigma_safe;
    trace.samples[PosteriorTrace::kMuRisky][at] = st_.mu_risky;
    trace.samples[PosteriorTrace::kSigmaRisky][at] = st_.sigma_risky;
    for (int i = 0; i < n_; ++i) {
      trace.samples[static_cast<std::size_t>(trace.alpha_index(i))][at] =
          st_.alpha[static_cast<std::size_t>(i)];
      int g = st_.group[static_cast<std::size_t>(i)];
      if (cfg_.marginalized) {
        // groups are not part of the marginalized state; recover them from
        // their exact conditional at each retained draw
        double pr = group_conditional_prob(st_.alpha[static_cast<std::size_t>(i)], st_.mu_safe,
                                           st_.sigma_safe, st_.mu_risky, st_.sigma_risky,
                                           spec_.group_prob);
        g = uniform01(rng_) < pr ? 1 : 0;
      }
      trace.samples[static_cast<std::size_t>(trace.group_index(i))][at] = static_cast<double>(g);
    }
    for (int j = 0; j < q_; ++j)
      trace.samples[static_cast<std::size_t>(trace.beta_index(j))][at] =
          st_.beta[static_cast<std::size_t>(j)];
  }

  const ResponseDataset& data_;
  const HierarchicalModelSpec& spec_;
  const McmcConfig& cfg_;
  int n_, q_;
  Rng rng_;
  ParamState st_;
  SweepCounters counters_;
  std::vector<double> step_alpha_, step_beta_;
  std::vector<int> alpha_window_accepts_, beta_window_accepts_;
  double step_sigma_, step_mu_;
};

}  // namespace detail

// Metropolis-within-Gibbs sampler. Sweep order: group indicators (exact
// Gibbs), alphas (random walk), betas (logit-space walk), mixture means
// (conjugate draw, or walk when marginalized), sigmas (log-space walk).
// A zero-question dataset is legal and yields prior samples.
inline PosteriorTrace run_mcmc(const ResponseDataset& data, const HierarchicalModelSpec& spec,
                               const McmcConfig& cfg) {
  spec.check();
  cfg.check();
  const int n = data.n_agents(), q = data.n_questions();
  if (n < 1) throw std::invalid_argument("need at least one agent");
  if (data.answers.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(q))
    throw DataError("answer matrix shape does not match agent/question ids");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) {
      int y = data.at(i, j);
      if (y != 0 && y != 1 && y != kUnanswered)
        throw DataError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                        ") holds " + std::to_string(y) + ", expected 0, 1, or unanswered");
    }

  PosteriorTrace trace;
  trace.n_chains = cfg.chains;
  trace.n_draws = cfg.draws;
  trace.n_agents = n;
  trace.n_questions = q;
  trace.names = {"mu_safe", "sigma_safe", "mu_risky", "sigma_risky"};
  trace.families = {ParamFamily::hyper, ParamFamily::hyper, ParamFamily::hyper,
                    ParamFamily::hyper};
  for (int i = 0; i < n; ++i) {
    trace.names.push_back("alpha[" + std::to_string(i) + "]");
    trace.families.push_back(ParamFamily::alpha);
  }
  for (int i = 0; i < n; ++i) {
    trace.names.push_back("g[" + std::to_string(i) + "]");
    trace.families.push_back(ParamFamily::group);
  }
  for (int j = 0; j < q; ++j) {
    trace.names.push_back("beta[" + std::to_string(j) + "]");
    trace.families.push_back(ParamFamily::beta);
  }
  trace.samples.assign(trace.names.size(),
                       std::vector<double>(static_cast<std::size_t>(cfg.chains) *
                                           static_cast<std::size_t>(cfg.draws)));
  trace.chain_stats.assign(static_cast<std::size_t>(cfg.chains), ChainStats{});

  for (int c = 0; c < cfg.chains; ++c) {
    detail::ChainRunner runner(data, spec, cfg, c);
    runner.run(trace, c);
  }

  trace.swap_warning =
      mean(trace.pooled(PosteriorTrace::kMuSafe)) > mean(trace.pooled(PosteriorTrace::kMuRisky));
  return trace;
}

}  // namespace storysim

#endif
