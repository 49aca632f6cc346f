#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "storysim/entropy.hpp"
#include "storysim/rng.hpp"
#include "storysim/trace_stats.hpp"

using namespace storysim;

namespace {

// Hand-assembled trace: 4 hyperparameter rows only (no agents, no questions).
PosteriorTrace hyper_trace(int chains, int draws) {
  PosteriorTrace trace;
  trace.n_chains = chains;
  trace.n_draws = draws;
  trace.names = {"mu_safe", "sigma_safe", "mu_risky", "sigma_risky"};
  trace.families.assign(4, ParamFamily::hyper);
  trace.samples.assign(4, std::vector<double>(static_cast<std::size_t>(chains) *
                                              static_cast<std::size_t>(draws)));
  trace.chain_stats.assign(static_cast<std::size_t>(chains), ChainStats{});
  return trace;
}

}  // namespace

TEST_CASE("hdi width on uniform samples") {
  Rng rng = make_rng(701);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> samples;
  for (int k = 0; k < 10000; ++k) samples.push_back(u(rng));
  HdiInterval hdi = compute_hdi(samples, 0.94);
  CHECK(hdi.width() == Catch::Approx(0.94).margin(0.01));
  CHECK(hdi.lower <= hdi.upper);
}

TEST_CASE("hdi endpoints on standard normal samples") {
  Rng rng = make_rng(702);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> samples;
  for (int k = 0; k < 100000; ++k) samples.push_back(z(rng));
  HdiInterval hdi = compute_hdi(samples, 0.94);
  CHECK(hdi.lower == Catch::Approx(-1.88).margin(0.03));
  CHECK(hdi.upper == Catch::Approx(1.88).margin(0.03));
}

TEST_CASE("hdi of identical samples is a point") {
  std::vector<double> samples(20, 3.7);
  HdiInterval hdi = compute_hdi(samples, 0.94);
  CHECK(hdi.lower == 3.7);
  CHECK(hdi.upper == 3.7);
  CHECK(hdi.contains(3.7));
  CHECK_FALSE(hdi.contains(3.8));
}

TEST_CASE("hdi picks the narrowest covering window") {
  // heavy cluster at 0 plus a distant straggler: the window must stay tight
  std::vector<double> samples = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 100.0};
  HdiInterval hdi = compute_hdi(samples, 0.9);
  CHECK(hdi.upper <= 0.08);
}

TEST_CASE("hdi input validation") {
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(compute_hdi(one, 0.94), std::invalid_argument);
  std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(compute_hdi(two, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_hdi(two, 1.0), std::invalid_argument);
}

TEST_CASE("split rhat is near one for matched chains and large for split ones") {
  Rng rng = make_rng(703);
  std::normal_distribution<double> z(0.0, 1.0);
  PosteriorTrace trace = hyper_trace(2, 2000);
  for (double& x : trace.samples[0]) x = z(rng);
  std::vector<ParamSummary> rows = summarize(trace);
  CHECK(rows[0].rhat == Catch::Approx(1.0).margin(0.01));
  CHECK_FALSE(rows[0].degenerate);
  CHECK(rows[0].ess > 1000.0);

  // shift the second chain far away: rhat must blow up
  PosteriorTrace split = hyper_trace(2, 2000);
  for (int d = 0; d < 2000; ++d) {
    split.samples[0][static_cast<std::size_t>(d)] = z(rng);
    split.samples[0][static_cast<std::size_t>(2000 + d)] = z(rng) + 10.0;
  }
  rows = summarize(split);
  CHECK(rows[0].rhat > 1.5);
}

TEST_CASE("autocorrelated draws report a reduced effective sample size") {
  Rng rng = make_rng(704);
  std::normal_distribution<double> z(0.0, 1.0);
  PosteriorTrace trace = hyper_trace(2, 4000);
  double x = 0.0;
  for (double& cell : trace.samples[0]) {
    x = 0.95 * x + z(rng);  // AR(1), strong positive correlation
    cell = x;
  }
  std::vector<ParamSummary> rows = summarize(trace);
  CHECK(rows[0].ess < 2000.0);
  CHECK(rows[0].ess > 0.0);
}

TEST_CASE("a stuck chain is flagged as degenerate") {
  PosteriorTrace trace = hyper_trace(2, 100);
  for (std::size_t p = 0; p < 4; ++p)
    for (double& cell : trace.samples[p]) cell = 1.25;
  std::vector<ParamSummary> rows = summarize(trace);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].degenerate);
  CHECK(rows[0].sd == 0.0);
}

TEST_CASE("summarize rejects an empty trace") {
  PosteriorTrace trace;
  CHECK_THROWS_AS(summarize(trace), std::invalid_argument);
}

TEST_CASE("entropy endpoints") {
  EntropyConfig cfg{50, 0.0, 1.0};

  std::vector<double> point(500, 0.31);
  CHECK(normalized_entropy(point, cfg) == 0.0);

  std::vector<double> uniform;
  for (int b = 0; b < 50; ++b) uniform.push_back((b + 0.5) / 50.0);  // one per bin
  CHECK(normalized_entropy(uniform, cfg) == Catch::Approx(1.0).epsilon(1e-12));

  std::vector<double> two_bins;
  for (int k = 0; k < 100; ++k) two_bins.push_back(k % 2 == 0 ? 0.205 : 0.785);
  CHECK(normalized_entropy(two_bins, cfg) ==
        Catch::Approx(1.0 / std::log2(50.0)).epsilon(1e-12));
}

TEST_CASE("entropy ignores sample order and duplication") {
  EntropyConfig cfg{50, -6.0, 6.0};
  Rng rng = make_rng(705);
  std::normal_distribution<double> z(0.0, 2.0);
  std::vector<double> samples;
  for (int k = 0; k < 3000; ++k) samples.push_back(z(rng));

  double base = normalized_entropy(samples, cfg);

  std::vector<double> shuffled = samples;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(normalized_entropy(shuffled, cfg) == base);

  std::vector<double> doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  CHECK(normalized_entropy(doubled, cfg) == base);
}

TEST_CASE("entropy stays in the unit interval and clamps outliers") {
  EntropyConfig cfg{50, 0.0, 1.0};
  Rng rng = make_rng(706);
  std::uniform_real_distribution<double> u(-3.0, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> samples;
    for (int k = 0; k < 200; ++k) samples.push_back(u(rng));
    double h = normalized_entropy(samples, cfg);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
  }

  EntropyConfig two{2, 0.0, 1.0};
  std::vector<double> edges = {-100.0, 100.0};  // clamp to the two edge bins
  CHECK(normalized_entropy(edges, two) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entropy input validation") {
  EntropyConfig cfg{50, 0.0, 1.0};
  std::vector<double> none;
  CHECK_THROWS_AS(normalized_entropy(none, cfg), std::invalid_argument);
  EntropyConfig bad{1, 0.0, 1.0};
  std::vector<double> some = {0.5};
  CHECK_THROWS_AS(normalized_entropy(some, bad), std::invalid_argument);
  EntropyConfig reversed{50, 1.0, 0.0};
  CHECK_THROWS_AS(normalized_entropy(some, reversed), std::invalid_argument);
}

TEST_CASE("coverage marks truths inside and outside the intervals") {
  Rng rng = make_rng(707);
  std::normal_distribution<double> z(0.0, 1.0);
  PosteriorTrace trace = hyper_trace(2, 1000);
  for (std::size_t p = 0; p < 4; ++p)
    for (double& cell : trace.samples[p]) cell = z(rng) + static_cast<double>(p);

  GroundTruth truth;
  truth.mixture.mu_safe = 0.0;     // param 0 centered at 0: inside
  truth.mixture.sigma_safe = 1.0;  // param 1 centered at 1: inside
  truth.mixture.mu_risky = 50.0;   // param 2 centered at 2: far outside
  truth.mixture.sigma_risky = 3.0; // param 3 centered at 3: inside

  CoverageReport report = coverage_check(trace, truth, 0.94);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.hyper_total == 4);
  CHECK(report.hyper_covered == 3);
  CHECK(report.rows[0].covered);
  CHECK_FALSE(report.rows[2].covered);
  CHECK(report.alpha_total == 0);
  CHECK(report.beta_total == 0);
}

TEST_CASE("coverage rejects mismatched truth dimensions") {
  PosteriorTrace trace = hyper_trace(1, 50);
  for (std::size_t p = 0; p < 4; ++p)
    for (double& cell : trace.samples[p]) cell = 0.5;
  GroundTruth truth;
  truth.alphas = {1.0, 2.0};  // trace has no agents
  CHECK_THROWS_AS(coverage_check(trace, truth, 0.94), std::invalid_argument);
}
