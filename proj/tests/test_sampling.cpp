#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "netutil.hpp"
#include "storysim/bayesnet_sample.hpp"
#include "storysim/factor.hpp"

using namespace storysim;

namespace {

double frequency(const std::vector<Observation>& rows, int var, int state) {
  double hits = 0.0;
  for (const Observation& row : rows)
    if (row[var] == state) hits += 1.0;
  return hits / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("forward sampling reproduces a root marginal") {
  BayesianNetwork net = netutil::make_coin_net(0.3);
  Rng rng = make_rng(101);
  std::vector<Observation> rows = sample_forward(net, 100000, rng);
  REQUIRE(rows.size() == 100000);
  // binomial standard error is about 0.00145; 0.005 is a 3.5-sigma band
  CHECK(frequency(rows, 0, 1) == Catch::Approx(0.3).margin(0.005));
}

TEST_CASE("forward sampling honors deterministic links") {
  BayesianNetwork net = netutil::make_ab_net();
  net.cpts[1].table = {0.0, 1.0, 0.0, 1.0};  // B=1 no matter what
  Rng rng = make_rng(102);
  for (const Observation& row : sample_forward(net, 500, rng)) CHECK(row[1] == 1);
}

TEST_CASE("forward sampling returns complete rows and respects n") {
  BayesianNetwork net = netutil::make_ab_net();
  Rng rng = make_rng(103);
  std::vector<Observation> rows = sample_forward(net, 1, rng);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].complete());
  CHECK_THROWS_AS(sample_forward(net, 0, rng), std::invalid_argument);
}

TEST_CASE("gibbs sampling tracks the exact conditional") {
  BayesianNetwork net = netutil::make_ab_net();
  Observation evidence(2);
  evidence.set(1, 1);
  Rng rng = make_rng(104);
  std::vector<Observation> rows = sample_gibbs(net, evidence, 200000, 500, 1, rng);
  REQUIRE(rows.size() == 200000);
  double exact = query(net, 0, evidence)[1];  // 0.27/0.41
  CHECK(exact == Catch::Approx(0.27 / 0.41).epsilon(1e-12));
  CHECK(frequency(rows, 0, 1) == Catch::Approx(exact).margin(0.01));
  for (const Observation& row : rows) CHECK(row[1] == 1);
}

TEST_CASE("gibbs with all variables clamped returns the evidence") {
  BayesianNetwork net = netutil::make_ab_net();
  Observation evidence(2);
  evidence.set(0, 1);
  evidence.set(1, 0);
  Rng rng = make_rng(105);
  for (const Observation& row : sample_gibbs(net, evidence, 50, 10, 1, rng)) {
    CHECK(row[0] == 1);
    CHECK(row[1] == 0);
  }
}

TEST_CASE("gibbs with no evidence agrees with forward sampling") {
  BayesianNetwork net = netutil::make_ab_net();
  Rng rng = make_rng(106);
  std::vector<Observation> gibbs = sample_gibbs(net, Observation(2), 100000, 200, 1, rng);
  std::vector<Observation> forward = sample_forward(net, 100000, rng);
  CHECK(frequency(gibbs, 1, 1) == Catch::Approx(frequency(forward, 1, 1)).margin(0.01));
}

TEST_CASE("gibbs rejects impossible evidence up front") {
  BayesianNetwork net = netutil::make_coin_net(1.0);
  Observation evidence(1);
  evidence.set(0, 0);
  Rng rng = make_rng(107);
  CHECK_THROWS_AS(sample_gibbs(net, evidence, 10, 10, 1, rng), ImpossibleEvidenceError);
}

TEST_CASE("sampling is reproducible under one seed") {
  BayesianNetwork net = netutil::make_ab_net();
  Rng r1 = make_rng(108), r2 = make_rng(108);
  std::vector<Observation> a = sample_forward(net, 200, r1);
  std::vector<Observation> b = sample_forward(net, 200, r2);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].states == b[k].states);
}
