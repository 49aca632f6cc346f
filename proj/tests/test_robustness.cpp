#include <catch2/catch_amalgamated.hpp>

#include "netutil.hpp"
#include "storysim/robustness.hpp"

using namespace storysim;

namespace {

RobustnessBase tiny_base() {
  RobustnessBase base;
  base.net = netutil::make_ab_net();
  base.sim.target = 1;
  base.sim.risky_state = 1;
  base.mcmc.chains = 2;
  base.mcmc.draws = 150;
  base.mcmc.burn_in = 150;
  base.master_seed = 31;
  return base;
}

}  // namespace

TEST_CASE("single-cell grid completes and lands in the unit interval") {
  GridResult grid = robustness_grid({4}, {2}, 1, tiny_base());
  REQUIRE(grid.alpha_entropy.size() == 1);
  REQUIRE(grid.beta_entropy.size() == 1);
  REQUIRE(grid.valid.size() == 1);
  CHECK(grid.all_valid());
  CHECK(grid.alpha_entropy[0] >= 0.0);
  CHECK(grid.alpha_entropy[0] <= 1.0);
  CHECK(grid.beta_entropy[0] >= 0.0);
  CHECK(grid.beta_entropy[0] <= 1.0);
  CHECK(grid.cell_errors[0].empty());
}

TEST_CASE("grid results are reproducible and cells are seed-independent") {
  GridResult once = robustness_grid({3, 5}, {2}, 1, tiny_base());
  GridResult twice = robustness_grid({3, 5}, {2}, 1, tiny_base());
  CHECK(once.alpha_entropy == twice.alpha_entropy);
  CHECK(once.beta_entropy == twice.beta_entropy);

  // a cell's value derives from (master seed, N, Q, repeat), not grid layout
  GridResult alone = robustness_grid({5}, {2}, 1, tiny_base());
  CHECK(alone.alpha_entropy[0] == once.alpha_entropy[once.index(1, 0)]);
}

TEST_CASE("failing cells are marked invalid and the grid continues") {
  RobustnessBase broken = tiny_base();
  broken.sim.target = -1;  // population stage rejects this in every cell
  GridResult grid = robustness_grid({2, 3}, {2}, 1, broken);
  REQUIRE(grid.valid.size() == 2);
  CHECK_FALSE(grid.all_valid());
  for (std::size_t cell = 0; cell < grid.valid.size(); ++cell) {
    CHECK_FALSE(grid.valid[cell]);
    CHECK(grid.alpha_entropy[cell] == -1.0);
    CHECK_FALSE(grid.cell_errors[cell].empty());
  }
}

TEST_CASE("grid validates its axes") {
  RobustnessBase base = tiny_base();
  CHECK_THROWS_AS(robustness_grid({}, {1}, 1, base), std::invalid_argument);
  CHECK_THROWS_AS(robustness_grid({5}, {0}, 1, base), std::invalid_argument);
  CHECK_THROWS_AS(robustness_grid({5}, {1}, 0, base), std::invalid_argument);
}

TEST_CASE("desk preset pins the documented ticks") {
  GridConfig desk = GridConfig::desk_scale();
  CHECK(desk.agent_counts == std::vector<int>{5, 50, 500});
  CHECK(desk.question_counts == std::vector<int>{1, 5, 15});
  CHECK(desk.repeats == 2);

  GridConfig full;
  CHECK(full.agent_counts.front() == 5);
  CHECK(full.agent_counts.back() == 1000);
  CHECK(full.question_counts.front() == 1);
  CHECK(full.question_counts.back() == 50);
  CHECK(full.repeats == 5);
}
