// End-to-end acceptance checks. Each criterion prints exactly one
// "criterion N PASS/FAIL" line; the exit code is the number of failures.
// Tolerances and seeds are pinned so a run is reproducible bit for bit.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "netutil.hpp"
#include "oracles.hpp"
#include "storysim/storysim.hpp"

using namespace storysim;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d %s %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// 1: logistic response identities. p(0, beta) and p(alpha, 0) must be
// exactly 0.5, and p(alpha, beta) + p(-alpha, beta) must equal 1 to 1e-12.
void criterion_1() {
  Timer timer;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> alpha_d(-6.0, 6.0), beta_d(0.0, 1.0);
  bool identities = true;
  double worst_symmetry = 0.0;
  for (int k = 0; k < 1000; ++k) {
    double alpha = alpha_d(rng), beta = beta_d(rng);
    if (response_probability(0.0, beta) != 0.5) identities = false;
    if (response_probability(alpha, 0.0) != 0.5) identities = false;
    double s = response_probability(alpha, beta) + response_probability(-alpha, beta);
    worst_symmetry = std::max(worst_symmetry, std::abs(s - 1.0));
  }
  double elapsed = timer.seconds();
  bool pass = identities && worst_symmetry <= 1e-12 && elapsed < 1.0;
  report(1, pass,
         "anchor identities " + std::string(identities ? "exact" : "violated") +
             ", max symmetry error " + fmt(worst_symmetry) + " (" + fmt(elapsed) + "s)");
}

// 2: exact inference vs full-joint enumeration on random small networks.
void criterion_2() {
  Timer timer;
  std::mt19937_64 rng(22);
  double worst = 0.0;
  int queries = 0;
  for (int trial = 0; trial < 100; ++trial) {
    BayesianNetwork net = netutil::random_net(rng, 5);
    Observation evidence(net.size());
    for (int attempt = 0; attempt < 50; ++attempt) {
      evidence = netutil::random_evidence(net, rng, 0.3);
      if (oracle::evidence_prob(net, evidence) > 0.0) break;
      evidence = Observation(net.size());
    }
    for (int target = 0; target < net.size(); ++target) {
      if (evidence.has(target)) continue;
      std::vector<double> fast = query(net, target, evidence);
      std::vector<double> slow = oracle::query(net, target, evidence);
      for (std::size_t s = 0; s < fast.size(); ++s)
        worst = std::max(worst, std::abs(fast[s] - slow[s]));
      ++queries;
    }
  }
  double elapsed = timer.seconds();
  bool pass = worst <= 1e-9 && elapsed < 30.0;
  report(2, pass,
         std::to_string(queries) + " queries, max deviation " + fmt(worst) + " (" +
             fmt(elapsed) + "s)");
}

// Largest CPT-entry error over rows whose parent assignment was seen at
// least min_count times in the complete data.
double max_supported_error(const BayesianNetwork& truth, const BayesianNetwork& fitted,
                           const std::vector<Observation>& complete, long min_count) {
  double worst = 0.0;
  for (int v = 0; v < truth.size(); ++v) {
    const Cpt& cpt = truth.cpt(v);
    std::vector<long> row_counts(cpt.rows(), 0);
    for (const Observation& obs : complete) {
      std::vector<int> full(static_cast<std::size_t>(truth.size()));
      for (int u = 0; u < truth.size(); ++u) full[static_cast<std::size_t>(u)] = obs[u];
      ++row_counts[cpt.row_index_from_assignment(full)];
    }
    for (std::size_t row = 0; row < row_counts.size(); ++row) {
      if (row_counts[row] < min_count) continue;
      for (int s = 0; s < cpt.child_card; ++s) {
        std::size_t at = row * static_cast<std::size_t>(cpt.child_card) +
                         static_cast<std::size_t>(s);
        worst = std::max(worst, std::abs(cpt.table[at] - fitted.cpt(v).table[at]));
      }
    }
  }
  return worst;
}

// 3: parameter recovery by counting and by EM under 20% missingness.
void criterion_3() {
  Timer timer;
  Dag dag;
  dag.add_variable({"A", {"a0", "a1"}});
  dag.add_variable({"B", {"b0", "b1", "b2"}});
  dag.add_variable({"C", {"c0", "c1"}});
  dag.add_variable({"D", {"d0", "d1"}});
  dag.add_edge(0, 1);
  dag.add_edge(0, 2);
  dag.add_edge(1, 3);

  BayesianNetwork truth;
  truth.dag = dag;
  truth.cpts.resize(4);
  for (int v = 0; v < 4; ++v) truth.cpts[static_cast<std::size_t>(v)] = make_cpt_shell(dag, v);
  truth.cpts[0].table = {0.4, 0.6};
  truth.cpts[1].table = {0.5, 0.3, 0.2, 0.2, 0.3, 0.5};
  truth.cpts[2].table = {0.7, 0.3, 0.35, 0.65};
  truth.cpts[3].table = {0.8, 0.2, 0.5, 0.5, 0.25, 0.75};

  Rng rng = make_rng(33);
  std::vector<Observation> complete = sample_forward(truth, 100000, rng);
  BayesianNetwork mle = fit_mle(dag, complete, 0.0);
  double mle_error = max_supported_error(truth, mle, complete, 1000);

  std::vector<Observation> holed(complete.begin(), complete.begin() + 50000);
  std::mt19937_64 mask(34);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Observation& obs : holed)
    for (int v = 0; v < dag.size(); ++v)
      if (unif(mask) < 0.2) obs.clear(v);

  EmReport em_report;
  EmOptions em_opts;
  em_opts.smoothing = 0.0;
  BayesianNetwork em = fit_em(dag, holed, em_opts, &em_report);
  std::vector<Observation> holed_complete(complete.begin(), complete.begin() + 50000);
  double em_error = max_supported_error(truth, em, holed_complete, 1000);

  bool monotone = true;
  for (std::size_t k = 1; k < em_report.ll_trace.size(); ++k)
    if (em_report.ll_trace[k] < em_report.ll_trace[k - 1] - 1e-9) monotone = false;

  double elapsed = timer.seconds();
  bool pass = mle_error <= 0.01 && em_error <= 0.03 && monotone && elapsed < 120.0;
  report(3, pass,
         "mle error " + fmt(mle_error) + ", em error " + fmt(em_error) + ", em log-likelihood " +
             (monotone ? "monotone" : "NON-MONOTONE") + " (" + fmt(elapsed) + "s)");
}

// 4: full recovery loop at N=500, Q=15 across three seeded replications.
void criterion_4() {
  Timer timer;
  BayesianNetwork net = load_network(std::string(STORYSIM_FIXTURES_DIR) +
                                     "/example_network.json");
  EnvironmentSpec env_spec = load_environment(std::string(STORYSIM_FIXTURES_DIR) +
                                              "/example_environment.json");
  int target = net.dag.index_of("Experienced");
  int risky = net.dag.variables[static_cast<std::size_t>(target)].state_index("Yes");

  const std::uint64_t run_seeds[3] = {9302, 9311, 9320};
  int full_hyper_runs = 0;
  bool every_run_ok = true, every_beta_ok = true, within_time = true;
  std::string hyper_detail, beta_detail;

  for (int r = 0; r < 3; ++r) {
    Timer run_timer;
    SimulationConfig sim;
    sim.seed = run_seeds[r];
    sim.n_agents = 500;
    sim.target = target;
    sim.risky_state = risky;
    sim.environment = env_spec.env;
    sim.beta_prior = {1.0, 1.0};
    SyntheticDataset data = run_simulation(net, sim);

    McmcConfig mcmc;
    mcmc.seed = derive_seed(run_seeds[r], {1});
    PosteriorTrace trace = run_mcmc(data.responses, HierarchicalModelSpec{}, mcmc);

    GroundTruth truth;
    truth.mixture = sim.mixture;
    for (const AgentProfile& agent : data.agents) truth.alphas.push_back(agent.alpha);
    for (const Question& question : data.environment.questions)
      truth.betas.push_back(question.beta);
    CoverageReport coverage = coverage_check(trace, truth);

    if (coverage.hyper_covered < 3) every_run_ok = false;
    if (coverage.hyper_covered == 4) ++full_hyper_runs;
    if (coverage.beta_covered < 13) every_beta_ok = false;
    if (run_timer.seconds() >= 900.0) within_time = false;
    if (r) {
      hyper_detail += ",";
      beta_detail += ",";
    }
    hyper_detail += std::to_string(coverage.hyper_covered) + "/4";
    beta_detail += std::to_string(coverage.beta_covered) + "/15";
  }

  bool pass = every_run_ok && full_hyper_runs >= 2 && every_beta_ok && within_time;
  report(4, pass,
         "hyper coverage " + hyper_detail + ", beta coverage " + beta_detail + " (" +
             fmt(timer.seconds()) + "s)");
}

// 5: HDI width calibration on known distributions.
void criterion_5() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(10000);
  for (double& x : u) x = unif(rng);
  HdiInterval ui = compute_hdi(u, 0.94);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(100000);
  for (double& x : z) x = normal(rng);
  HdiInterval zi = compute_hdi(z, 0.94);

  bool pass = std::abs(ui.width() - 0.94) <= 0.01 && std::abs(zi.lower + 1.88) <= 0.03 &&
              std::abs(zi.upper - 1.88) <= 0.03;
  report(5, pass,
         "uniform width " + fmt(ui.width()) + ", normal bounds [" + fmt(zi.lower) + ", " +
             fmt(zi.upper) + "]");
}

// 6: normalized entropy endpoints under the 50-bin histogram.
void criterion_6() {
  EntropyConfig cfg{50, 0.0, 1.0};

  std::vector<double> point(200, 0.37);
  double h_point = normalized_entropy(point, cfg);

  std::vector<double> spread;
  for (int b = 0; b < 50; ++b) spread.push_back((b + 0.5) / 50.0);
  double h_uniform = normalized_entropy(spread, cfg);

  std::vector<double> split;
  for (int k = 0; k < 100; ++k) split.push_back(k % 2 ? 0.205 : 0.785);
  double h_split = normalized_entropy(split, cfg);
  double expected = 1.0 / std::log2(50.0);

  bool pass = h_point == 0.0 && std::abs(h_uniform - 1.0) <= 1e-12 &&
              std::abs(h_split - expected) <= 1e-5;
  report(6, pass,
         "point " + fmt(h_point) + ", uniform " + fmt(h_uniform) + ", two-bin " + fmt(h_split) +
             " vs " + fmt(expected));
}

// 7: entropy heatmap trends across the reduced design grid.
void criterion_7() {
  Timer timer;
  RobustnessBase base;
  base.net = load_network(std::string(STORYSIM_FIXTURES_DIR) + "/example_network.json");
  base.sim.target = base.net.dag.index_of("Experienced");
  base.sim.risky_state =
      base.net.dag.variables[static_cast<std::size_t>(base.sim.target)].state_index("Yes");
  base.master_seed = 77;

  GridConfig grid = GridConfig::desk_scale();
  GridResult result = robustness_grid(grid, base);

  bool in_range = true;
  for (std::size_t cell = 0; cell < result.valid.size(); ++cell) {
    if (!result.valid[cell]) in_range = false;
    if (result.alpha_entropy[cell] < 0.0 || result.alpha_entropy[cell] > 1.0) in_range = false;
    if (result.beta_entropy[cell] < 0.0 || result.beta_entropy[cell] > 1.0) in_range = false;
  }
  // axis order is {5, 50, 500} x {1, 5, 15}
  double beta_small_n = result.beta_entropy[result.index(0, 2)];
  double beta_large_n = result.beta_entropy[result.index(2, 2)];
  double alpha_one_q = result.alpha_entropy[result.index(2, 0)];
  double alpha_many_q = result.alpha_entropy[result.index(2, 2)];

  double elapsed = timer.seconds();
  bool pass = in_range && beta_large_n < beta_small_n && alpha_many_q < alpha_one_q &&
              elapsed < 2700.0;
  report(7, pass,
         "beta entropy N500/Q15 " + fmt(beta_large_n) + " vs N5/Q15 " + fmt(beta_small_n) +
             ", alpha entropy Q15 " + fmt(alpha_many_q) + " vs Q1 " + fmt(alpha_one_q) + " (" +
             fmt(elapsed) + "s)");
}

// 8: the example network induces a clearly bimodal proneness population.
void criterion_8() {
  Timer timer;
  BayesianNetwork net = load_network(std::string(STORYSIM_FIXTURES_DIR) +
                                     "/example_network.json");
  int target = net.dag.index_of("Experienced");
  int risky = net.dag.variables[static_cast<std::size_t>(target)].state_index("Yes");

  Rng rng = make_rng(88);
  std::vector<AgentProfile> agents =
      generate_population(net, target, risky, 4000, MixtureHyperparams{}, Observation(net.size()),
                          rng);
  std::vector<double> alphas;
  int risky_count = 0;
  for (const AgentProfile& agent : agents) {
    alphas.push_back(agent.alpha);
    if (agent.group == Group::risky) ++risky_count;
  }
  double risky_share = static_cast<double>(risky_count) / static_cast<double>(agents.size());

  oracle::MixtureFit fit = oracle::fit_two_component(alphas);
  double elapsed = timer.seconds();
  bool pass = std::abs(fit.mean_low + 2.0) <= 0.3 && std::abs(fit.mean_high - 0.5) <= 0.3 &&
              fit.weight_high < 0.5 && risky_share < 0.5 && elapsed < 60.0;
  report(8, pass,
         "component means " + fmt(fit.mean_low) + "/" + fmt(fit.mean_high) + ", risky weight " +
             fmt(fit.weight_high) + ", risky share " + fmt(risky_share) + " (" + fmt(elapsed) +
             "s)");
}

int run_cli(const std::string& dir, const std::string& args) {
  std::string cmd = "cd '" + dir + "' && '" + std::string(STORYSIM_CLI_PATH) + "' " + args +
                    " > cli_out.txt 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// 9: the generate command is byte-for-byte reproducible under one seed.
void criterion_9() {
  fs::path base = fs::temp_directory_path() / "storysim_acceptance_9";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base / "first");
  fs::create_directories(base / "second");

  Json cfg;
  cfg["seed"] = 555;
  cfg["generate"] = {{"network",
                      std::string(STORYSIM_FIXTURES_DIR) + "/example_network.json"},
                     {"environment",
                      std::string(STORYSIM_FIXTURES_DIR) + "/example_environment.json"},
                     {"n_agents", 200},
                     {"target", "Experienced"},
                     {"risky_state", "Yes"}};
  for (const char* leg : {"first", "second"}) {
    cfg["output_dir"] = (base / leg).string();
    std::ofstream out(base / leg / "config.json");
    out << cfg.dump(2) << "\n";
  }

  int rc1 = run_cli((base / "first").string(), "generate --config config.json");
  int rc2 = run_cli((base / "second").string(), "generate --config config.json");

  bool identical = rc1 == 0 && rc2 == 0;
  std::string digest_detail;
  if (identical) {
    RunManifest m1 = load_manifest((base / "first" / "generate_manifest.json").string());
    RunManifest m2 = load_manifest((base / "second" / "generate_manifest.json").string());
    identical = m1.outputs.size() == m2.outputs.size();
    for (std::size_t k = 0; identical && k < m1.outputs.size(); ++k) {
      if (m1.outputs[k].digest != m2.outputs[k].digest) identical = false;
      fs::path name1 = fs::path(m1.outputs[k].path).filename();
      if (slurp(base / "first" / name1) != slurp(base / "second" / name1)) identical = false;
    }
    if (!m1.outputs.empty()) digest_detail = ", digest " + m1.outputs[0].digest;
  }
  report(9, identical,
         "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) +
             (identical ? ", outputs byte-identical" : ", outputs differ") + digest_detail);
  fs::remove_all(base, ec);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures ? 1 : 0;
}
