// Command-line driver: train-bn, generate, infer, robustness, report.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure,
// 5 robustness grid completed with invalid cells.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "storysim/storysim.hpp"

namespace fs = std::filesystem;
using namespace storysim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitPartialGrid = 5;

struct AppContext {
  Json config;
  std::string config_origin;  // file path, for error messages
  std::uint64_t seed = 0;
  fs::path output_dir = ".";
};

class StageClock {
 public:
  explicit StageClock(RunManifest& manifest) : manifest_(manifest) {}

  template <typename F>
  auto time(const std::string& stage, F&& f) -> decltype(f()) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, t0);
    } else {
      auto result = f();
      record(stage, t0);
      return result;
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.timings.push_back({stage, s});
  }

  RunManifest& manifest_;
};

AppContext load_context(const std::string& config_path, const std::string& manifest_path) {
  AppContext ctx;
  if (!manifest_path.empty()) {
    RunManifest m = load_manifest(manifest_path);
    ctx.config = m.config;
    ctx.config_origin = manifest_path;
    ctx.seed = m.seed;
  } else {
    if (config_path.empty()) throw ConfigError("no config file given (use --config)");
    ctx.config = jsonio::load_json_file(config_path);
    ctx.config_origin = config_path;
    if (!ctx.config.is_object()) throw ConfigError(config_path + ": expected an object");
    ctx.seed = ctx.config.contains("seed")
                   ? jsonio::as_seed(ctx.config["seed"], config_path + ".seed")
                   : 0;
  }
  ctx.output_dir = jsonio::string_or(ctx.config, "output_dir", ctx.config_origin, ".");

  // The only environment overrides: master seed and output directory.
  if (const char* s = std::getenv("STORYSIM_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') throw ConfigError("STORYSIM_SEED: not an integer");
    ctx.seed = static_cast<std::uint64_t>(v);
  }
  if (const char* d = std::getenv("STORYSIM_OUTPUT_DIR")) ctx.output_dir = d;

  std::error_code ec;
  fs::create_directories(ctx.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + ctx.output_dir.string());
  // keep the effective values in the snapshot so a manifest re-run matches
  ctx.config["seed"] = ctx.seed;
  ctx.config["output_dir"] = ctx.output_dir.string();
  return ctx;
}

std::string out_path(const AppContext& ctx, const std::string& name) {
  fs::path p(name);
  return p.is_absolute() ? p.string() : (ctx.output_dir / p).string();
}

const Json& stage_section(const AppContext& ctx, const char* name) {
  if (!ctx.config.contains(name))
    throw ConfigError(ctx.config_origin + ": missing \"" + name + "\" section");
  const Json& section = ctx.config[name];
  if (!section.is_object())
    throw ConfigError(ctx.config_origin + "." + name + ": expected an object");
  return section;
}

// ---- train-bn ----------------------------------------------------------

int cmd_train_bn(const AppContext& ctx) {
  const Json& section = stage_section(ctx, "train_bn");
  const std::string spath = ctx.config_origin + ".train_bn";
  std::string survey = jsonio::as_string(jsonio::require(section, "survey", spath),
                                         spath + ".survey");
  std::string dag_path = jsonio::as_string(jsonio::require(section, "dag", spath),
                                           spath + ".dag");
  std::string method = jsonio::string_or(section, "method", spath, "mle");
  if (method != "mle" && method != "em")
    throw ConfigError(spath + ".method: expected \"mle\" or \"em\", got \"" + method + "\"");
  double smoothing = jsonio::number_or(section, "smoothing", spath, 1.0);
  int max_iter = jsonio::int_or(section, "max_iter", spath, 200);
  double tol = jsonio::number_or(section, "tol", spath, 1e-6);
  std::string network_out = out_path(ctx, jsonio::string_or(section, "network_out", spath,
                                                            "network.json"));
  std::string report_out = out_path(ctx, jsonio::string_or(section, "report_out", spath,
                                                           "train_report.json"));

  RunManifest manifest;
  manifest.command = "train-bn";
  manifest.seed = ctx.seed;
  manifest.config = ctx.config;
  StageClock clock(manifest);

  Dag dag = clock.time("load-dag", [&] { return load_dag(dag_path); });
  std::vector<Observation> data = clock.time("load-survey", [&] {
    return observations_from_table(read_csv_file(survey), dag);
  });
  if (data.empty()) throw DataError(survey + ": no data rows");

  bool has_missing = false;
  for (const Observation& row : data)
    if (!row.complete()) {
      has_missing = true;
      break;
    }

  BayesianNetwork net;
  Json report;
  report["method"] = method;
  report["rows"] = data.size();
  report["smoothing"] = smoothing;
  if (method == "mle") {
    if (has_missing)
      throw DataError(survey + " has missing cells; set train_bn.method to \"em\"");
    net = clock.time("fit", [&] { return fit_mle(dag, data, smoothing); });
    double ll = 0.0;
    for (const Observation& row : data) ll += std::log(net.joint_prob(row.states));
    report["log_likelihood"] = ll;
  } else {
    EmOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    opts.smoothing = smoothing;
    opts.init_seed = ctx.seed;
    EmReport em;
    net = clock.time("fit", [&] { return fit_em(dag, data, opts, &em); });
    report["iterations"] = em.iterations;
    report["converged"] = em.converged;
    report["log_likelihood"] = em.ll_trace.empty() ? 0.0 : em.ll_trace.back();
    report["ll_trace"] = em.ll_trace;
  }

  ValidationReport check = validate_network(net);
  if (!check.ok())
    throw NumericalError("learned network failed validation: " + check.issues.front().message);

  clock.time("write", [&] {
    save_network(network_out, net);
    jsonio::save_json_file(report_out, report);
  });
  manifest.add_output("network", network_out);
  manifest.add_output("report", report_out);
  save_manifest(out_path(ctx, jsonio::string_or(section, "manifest_out", spath,
                                                "train_bn_manifest.json")),
                manifest);
  std::cout << "trained " << method << " network -> " << network_out << "\n";
  return kExitOk;
}

// ---- generate ----------------------------------------------------------

struct GenerateOutputs {
  std::string observable;
  std::string truth_agents;
  std::string truth_questions;
  std::string manifest;
};

std::vector<int> attribute_columns(const BayesianNetwork& net, int target) {
  std::vector<int> cols;
  for (int v = 0; v < net.size(); ++v)
    if (v != target) cols.push_back(v);
  return cols;
}

void write_observable(const std::string& path, const BayesianNetwork& net, int target,
                      const SyntheticDataset& data) {
  Table t;
  t.header.push_back("agent_id");
  for (int j = 0; j < data.responses.n_questions(); ++j)
    t.header.push_back("Q" + std::to_string(j + 1));
  std::vector<int> attrs = attribute_columns(net, target);
  for (int v : attrs) t.header.push_back(net.dag.variables[v].name);

  for (const AgentProfile& a : data.agents) {
    std::vector<std::string> row;
    row.push_back(std::to_string(a.id));
    for (int j = 0; j < data.responses.n_questions(); ++j) {
      int y = data.responses.at(a.id, j);
      row.push_back(y == kUnanswered ? "" : std::to_string(y));
    }
    for (int v : attrs)
      row.push_back(a.attributes.has(v) ? net.dag.variables[v].states[a.attributes[v]] : "");
    t.rows.push_back(std::move(row));
  }
  write_csv_file(path, t);
}

void write_truth_agents(const std::string& path, const SyntheticDataset& data) {
  Table t;
  t.header = {"agent_id", "group", "alpha", "p_risky"};
  for (const AgentProfile& a : data.agents)
    t.rows.push_back({std::to_string(a.id), std::to_string(static_cast<int>(a.group)),
                      format_double(a.alpha), format_double(a.p_risky)});
  write_csv_file(path, t);
}

void write_truth_questions(const std::string& path, const SyntheticDataset& data) {
  Table t;
  t.header = {"question_id", "beta"};
  for (const Question& q : data.environment.questions)
    t.rows.push_back({std::to_string(q.id), format_double(q.beta)});
  write_csv_file(path, t);
}

int cmd_generate(const AppContext& ctx) {
  const Json& section = stage_section(ctx, "generate");
  const std::string spath = ctx.config_origin + ".generate";
  std::string network_path = jsonio::as_string(jsonio::require(section, "network", spath),
                                               spath + ".network");
  std::string env_path = jsonio::as_string(jsonio::require(section, "environment", spath),
                                           spath + ".environment");
  int n_agents = jsonio::int_or(section, "n_agents", spath, 500);
  if (n_agents < 1) throw ConfigError(spath + ".n_agents: must be at least 1");

  RunManifest manifest;
  manifest.command = "generate";
  manifest.seed = ctx.seed;
  manifest.config = ctx.config;
  StageClock clock(manifest);

  BayesianNetwork net = clock.time("load-network", [&] { return load_network(network_path); });
  EnvironmentSpec env_spec = clock.time("load-environment", [&] {
    return load_environment(env_path);
  });

  std::string target_name = jsonio::as_string(jsonio::require(section, "target", spath),
                                              spath + ".target");
  int target = net.dag.index_of(target_name);
  if (target < 0) throw ConfigError(spath + ".target: unknown variable '" + target_name + "'");
  std::string risky_label = jsonio::as_string(jsonio::require(section, "risky_state", spath),
                                              spath + ".risky_state");
  int risky_state = net.dag.variables[target].state_index(risky_label);
  if (risky_state < 0)
    throw ConfigError(spath + ".risky_state: unknown state label '" + risky_label + "'");

  SimulationConfig cfg;
  cfg.seed = ctx.seed;
  cfg.n_agents = n_agents;
  cfg.mixture = mixture_from_json(section, spath);
  cfg.target = target;
  cfg.risky_state = risky_state;
  cfg.evidence = evidence_from_json(section, spath, net);
  cfg.environment = env_spec.env;
  cfg.beta_prior = env_spec.beta_prior;

  SyntheticDataset data = clock.time("simulate", [&] { return run_simulation(net, cfg); });

  GenerateOutputs outs;
  outs.observable = out_path(ctx, jsonio::string_or(section, "observable_out", spath,
                                                    "observable.csv"));
  outs.truth_agents = out_path(ctx, jsonio::string_or(section, "truth_out", spath,
                                                      "truth_agents.csv"));
  outs.truth_questions = out_path(ctx, jsonio::string_or(section, "betas_out", spath,
                                                         "truth_questions.csv"));
  outs.manifest = out_path(ctx, jsonio::string_or(section, "manifest_out", spath,
                                                  "generate_manifest.json"));
  clock.time("write", [&] {
    write_observable(outs.observable, net, target, data);
    write_truth_agents(outs.truth_agents, data);
    write_truth_questions(outs.truth_questions, data);
  });
  manifest.add_output("observable", outs.observable);
  manifest.add_output("truth_agents", outs.truth_agents);
  manifest.add_output("truth_questions", outs.truth_questions);
  save_manifest(outs.manifest, manifest);
  std::cout << "generated " << data.agents.size() << " agents x "
            << data.responses.n_questions() << " questions -> " << outs.observable << "\n";
  return kExitOk;
}

// ---- infer ---------------------------------------------------------------

ResponseDataset read_observable(const std::string& path) {
  Table t = read_csv_file(path);
  ResponseDataset data;
  std::vector<int> q_cols;
  int id_col = t.column("agent_id");
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    const std::string& h = t.header[k];
    if (h.size() < 2 || h[0] != 'Q') continue;
    bool digits = true;
    for (std::size_t c = 1; c < h.size(); ++c)
      if (!std::isdigit(static_cast<unsigned char>(h[c]))) digits = false;
    if (!digits) continue;
    q_cols.push_back(static_cast<int>(k));
    data.question_ids.push_back(std::atoi(h.c_str() + 1) - 1);
  }
  if (q_cols.empty()) throw DataError(path + ": no Q<number> response columns found");

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    data.agent_ids.push_back(id_col >= 0 ? std::atoi(t.rows[r][id_col].c_str())
                                         : static_cast<int>(r));
    for (std::size_t k = 0; k < q_cols.size(); ++k) {
      const std::string& cell = t.rows[r][static_cast<std::size_t>(q_cols[k])];
      int value = kUnanswered;
      if (!cell.empty()) {
        if (cell == "0")
          value = 0;
        else if (cell == "1")
          value = 1;
        else
          throw DataError(path + ": row " + std::to_string(r + 1) + ", column '" +
                          t.header[static_cast<std::size_t>(q_cols[k])] + "': expected 0, 1, or empty, got '" +
                          cell + "'");
      }
      data.answers.push_back(value);
    }
  }
  if (data.agent_ids.empty()) throw DataError(path + ": no data rows");
  return data;
}

std::optional<GroundTruth> read_ground_truth(const Json& section, const std::string& spath,
                                             const ResponseDataset& data) {
  bool has_agents = section.contains("truth_agents");
  bool has_questions = section.contains("truth_questions");
  bool has_mixture = section.contains("truth_mixture");
  if (!has_agents && !has_questions && !has_mixture) return std::nullopt;
  if (!has_agents || !has_questions || !has_mixture)
    throw ConfigError(spath + ": coverage needs truth_agents, truth_questions, and truth_mixture together");

  GroundTruth truth;
  Table agents = read_csv_file(jsonio::as_string(section["truth_agents"], spath + ".truth_agents"));
  int alpha_col = agents.column("alpha");
  if (alpha_col < 0) throw DataError("truth_agents file has no alpha column");
  for (const auto& row : agents.rows)
    truth.alphas.push_back(std::strtod(row[static_cast<std::size_t>(alpha_col)].c_str(), nullptr));

  Table questions =
      read_csv_file(jsonio::as_string(section["truth_questions"], spath + ".truth_questions"));
  int beta_col = questions.column("beta");
  if (beta_col < 0) throw DataError("truth_questions file has no beta column");
  for (const auto& row : questions.rows)
    truth.betas.push_back(std::strtod(row[static_cast<std::size_t>(beta_col)].c_str(), nullptr));

  const Json& mix = section["truth_mixture"];
  const std::string mpath = spath + ".truth_mixture";
  truth.mixture.mu_safe = jsonio::as_number(jsonio::require(mix, "mu_safe", mpath), mpath + ".mu_safe");
  truth.mixture.sigma_safe =
      jsonio::as_number(jsonio::require(mix, "sigma_safe", mpath), mpath + ".sigma_safe");
  truth.mixture.mu_risky =
      jsonio::as_number(jsonio::require(mix, "mu_risky", mpath), mpath + ".mu_risky");
  truth.mixture.sigma_risky =
      jsonio::as_number(jsonio::require(mix, "sigma_risky", mpath), mpath + ".sigma_risky");

  if (truth.alphas.size() != static_cast<std::size_t>(data.n_agents()))
    throw DataError("truth_agents rows (" + std::to_string(truth.alphas.size()) +
                    ") do not match dataset agents (" + std::to_string(data.n_agents()) + ")");
  if (truth.betas.size() != static_cast<std::size_t>(data.n_questions()))
    throw DataError("truth_questions rows (" + std::to_string(truth.betas.size()) +
                    ") do not match dataset questions (" + std::to_string(data.n_questions()) + ")");
  return truth;
}

void write_trace_csv(const std::string& path, const PosteriorTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "chain,draw";
  for (const std::string& name : trace.names) out << "," << name;
  out << "\n";
  for (int c = 0; c < trace.n_chains; ++c)
    for (int d = 0; d < trace.n_draws; ++d) {
      out << c << "," << d;
      for (int p = 0; p < trace.param_count(); ++p)
        out << "," << format_double(trace.chain(p, c)[static_cast<std::size_t>(d)]);
      out << "\n";
    }
  if (!out) throw DataError("write failed: " + path);
}

const char* family_name(ParamFamily f) {
  switch (f) {
    case ParamFamily::hyper: return "hyper";
    case ParamFamily::alpha: return "alpha";
    case ParamFamily::group: return "group";
    case ParamFamily::beta: return "beta";
  }
  return "?";
}

void write_summary_csv(const std::string& path, const std::vector<ParamSummary>& rows) {
  Table t;
  t.header = {"name", "family", "mean", "sd", "hdi_lower", "hdi_upper", "rhat", "ess",
              "degenerate"};
  for (const ParamSummary& r : rows)
    t.rows.push_back({r.name, family_name(r.family), format_double(r.mean), format_double(r.sd),
                      format_double(r.hdi.lower), format_double(r.hdi.upper),
                      format_double(r.rhat), format_double(r.ess), r.degenerate ? "1" : "0"});
  write_csv_file(path, t);
}

void write_coverage_csv(const std::string& path, const CoverageReport& report) {
  Table t;
  t.header = {"name", "family", "truth", "hdi_lower", "hdi_upper", "covered"};
  for (const CoverageRow& r : report.rows)
    t.rows.push_back({r.name, family_name(r.family), format_double(r.truth),
                      format_double(r.hdi.lower), format_double(r.hdi.upper),
                      r.covered ? "1" : "0"});
  std::vector<std::string> comments = {
      "hyper covered " + std::to_string(report.hyper_covered) + "/" +
          std::to_string(report.hyper_total),
      "alpha covered " + std::to_string(report.alpha_covered) + "/" +
          std::to_string(report.alpha_total),
      "beta covered " + std::to_string(report.beta_covered) + "/" +
          std::to_string(report.beta_total)};
  write_csv_file(path, t, comments);
}

void write_histogram(const std::string& path, const std::string& name,
                     std::span<const double> samples, const EntropyConfig& cfg) {
  std::vector<long> counts(static_cast<std::size_t>(cfg.bins), 0);
  const double scale = static_cast<double>(cfg.bins) / (cfg.hi - cfg.lo);
  for (double x : samples) {
    int idx = static_cast<int>(std::floor((x - cfg.lo) * scale));
    idx = std::clamp(idx, 0, cfg.bins - 1);
    ++counts[static_cast<std::size_t>(idx)];
  }
  Table t;
  t.header = {"bin_lower", "bin_upper", "count"};
  for (int b = 0; b < cfg.bins; ++b) {
    double lo = cfg.lo + (cfg.hi - cfg.lo) * b / cfg.bins;
    double hi = cfg.lo + (cfg.hi - cfg.lo) * (b + 1) / cfg.bins;
    t.rows.push_back({format_double(lo), format_double(hi),
                      std::to_string(counts[static_cast<std::size_t>(b)])});
  }
  write_csv_file(path, t,
                 {"parameter " + name,
                  "normalized_entropy " + format_double(normalized_entropy(samples, cfg))});
}

int cmd_infer(const AppContext& ctx, const std::string& dataset_override) {
  const Json& section = stage_section(ctx, "infer");
  const std::string spath = ctx.config_origin + ".infer";
  std::string dataset = dataset_override.empty()
                            ? jsonio::as_string(jsonio::require(section, "dataset", spath),
                                                spath + ".dataset")
                            : dataset_override;

  RunManifest manifest;
  manifest.command = "infer";
  manifest.seed = ctx.seed;
  manifest.config = ctx.config;
  StageClock clock(manifest);

  ResponseDataset data = clock.time("load-dataset", [&] { return read_observable(dataset); });
  HierarchicalModelSpec model = priors_from_json(section, spath);
  McmcConfig mcmc = mcmc_from_json(section, spath);
  mcmc.seed = ctx.seed;
  double mass = jsonio::number_or(section, "hdi_mass", spath, 0.94);
  if (!(mass > 0.0 && mass < 1.0)) throw ConfigError(spath + ".hdi_mass: must lie in (0,1)");

  PosteriorTrace trace = clock.time("mcmc", [&] { return run_mcmc(data, model, mcmc); });
  if (trace.swap_warning)
    std::cerr << "warning: posterior means of mu_safe and mu_risky are swapped relative to the "
                 "priors; labels may have flipped\n";

  std::vector<ParamSummary> summary =
      clock.time("summarize", [&] { return summarize(trace, mass); });

  std::string trace_out = out_path(ctx, jsonio::string_or(section, "trace_out", spath,
                                                          "trace.csv"));
  std::string summary_out = out_path(ctx, jsonio::string_or(section, "summary_out", spath,
                                                            "summary.csv"));
  clock.time("write", [&] {
    write_trace_csv(trace_out, trace);
    write_summary_csv(summary_out, summary);
  });
  manifest.add_output("trace", trace_out);
  manifest.add_output("summary", summary_out);

  std::optional<GroundTruth> truth = read_ground_truth(section, spath, data);
  if (truth) {
    CoverageReport coverage =
        clock.time("coverage", [&] { return coverage_check(trace, *truth, mass); });
    std::string coverage_out = out_path(ctx, jsonio::string_or(section, "coverage_out", spath,
                                                               "coverage.csv"));
    write_coverage_csv(coverage_out, coverage);
    manifest.add_output("coverage", coverage_out);
    std::cout << "coverage: hyper " << coverage.hyper_covered << "/" << coverage.hyper_total
              << ", alpha " << coverage.alpha_covered << "/" << coverage.alpha_total << ", beta "
              << coverage.beta_covered << "/" << coverage.beta_total << "\n";
  } else {
    std::cout << "no ground truth supplied; coverage skipped\n";
  }

  if (jsonio::bool_or(section, "histograms", spath, true)) {
    EntropyConfig sigma_cfg{50, 0.0, 6.0};
    auto hist_path = [&](const std::string& name) {
      return out_path(ctx, "hist_" + name + ".csv");
    };
    const EntropyConfig mu_cfg = kAlphaEntropy;
    write_histogram(hist_path("mu_safe"), "mu_safe", trace.pooled(PosteriorTrace::kMuSafe), mu_cfg);
    write_histogram(hist_path("sigma_safe"), "sigma_safe",
                    trace.pooled(PosteriorTrace::kSigmaSafe), sigma_cfg);
    write_histogram(hist_path("mu_risky"), "mu_risky", trace.pooled(PosteriorTrace::kMuRisky),
                    mu_cfg);
    write_histogram(hist_path("sigma_risky"), "sigma_risky",
                    trace.pooled(PosteriorTrace::kSigmaRisky), sigma_cfg);
    for (int j = 0; j < trace.n_questions; ++j) {
      std::string name = "beta_" + std::to_string(j + 1);
      write_histogram(hist_path(name), name, trace.pooled(trace.beta_index(j)), kBetaEntropy);
    }
    for (int i = 0; i < std::min(trace.n_agents, 10); ++i) {
      std::string name = "alpha_" + std::to_string(i);
      write_histogram(hist_path(name), name, trace.pooled(trace.alpha_index(i)), kAlphaEntropy);
    }
  }

  save_manifest(out_path(ctx, jsonio::string_or(section, "manifest_out", spath,
                                                "infer_manifest.json")),
                manifest);
  std::cout << "inference done: " << trace.param_count() << " parameters, " << trace.n_chains
            << " chains x " << trace.n_draws << " draws -> " << summary_out << "\n";
  return kExitOk;
}

// ---- robustness ------------------------------------------------------

void write_grid_matrix(const std::string& path, const GridResult& grid, bool alpha) {
  Table t;
  t.header.push_back("n_agents");
  for (int q : grid.question_counts) t.header.push_back("q" + std::to_string(q));
  for (std::size_t ai = 0; ai < grid.agent_counts.size(); ++ai) {
    std::vector<std::string> row;
    row.push_back(std::to_string(grid.agent_counts[ai]));
    for (std::size_t qi = 0; qi < grid.question_counts.size(); ++qi) {
      std::size_t cell = grid.index(ai, qi);
      row.push_back(grid.valid[cell]
                        ? format_double(alpha ? grid.alpha_entropy[cell] : grid.beta_entropy[cell])
                        : "");
    }
    t.rows.push_back(std::move(row));
  }
  write_csv_file(path, t,
                 {std::string(alpha ? "alpha" : "beta") +
                  " posterior mean normalized entropy, repeats " + std::to_string(grid.repeats)});
}

void write_grid_cells(const std::string& path, const GridResult& grid) {
  Table t;
  t.header = {"n_agents", "n_questions", "valid", "alpha_entropy", "beta_entropy", "error"};
  for (std::size_t ai = 0; ai < grid.agent_counts.size(); ++ai)
    for (std::size_t qi = 0; qi < grid.question_counts.size(); ++qi) {
      std::size_t cell = grid.index(ai, qi);
      std::string err = grid.cell_errors[cell];
      for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      t.rows.push_back({std::to_string(grid.agent_counts[ai]),
                        std::to_string(grid.question_counts[qi]), grid.valid[cell] ? "1" : "0",
                        grid.valid[cell] ? format_double(grid.alpha_entropy[cell]) : "",
                        grid.valid[cell] ? format_double(grid.beta_entropy[cell]) : "", err});
    }
  write_csv_file(path, t);
}

std::vector<int> int_list(const Json& section, const char* key, const std::string& path,
                          const std::vector<int>& def) {
  if (!section.contains(key)) return def;
  const Json& j = section[key];
  if (!j.is_array()) throw ConfigError(path + "." + key + ": expected an array");
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(jsonio::as_int(j[k], path + "." + key + "[" + std::to_string(k) + "]"));
  return out;
}

int cmd_robustness(const AppContext& ctx) {
  const Json& section = stage_section(ctx, "robustness");
  const std::string spath = ctx.config_origin + ".robustness";

  RunManifest manifest;
  manifest.command = "robustness";
  manifest.seed = ctx.seed;
  manifest.config = ctx.config;
  StageClock clock(manifest);

  RobustnessBase base;
  base.net = clock.time("load-network", [&] {
    return load_network(jsonio::as_string(jsonio::require(section, "network", spath),
                                          spath + ".network"));
  });
  std::string target_name = jsonio::as_string(jsonio::require(section, "target", spath),
                                              spath + ".target");
  base.sim.target = base.net.dag.index_of(target_name);
  if (base.sim.target < 0)
    throw ConfigError(spath + ".target: unknown variable '" + target_name + "'");
  std::string risky_label = jsonio::as_string(jsonio::require(section, "risky_state", spath),
                                              spath + ".risky_state");
  base.sim.risky_state = base.net.dag.variables[base.sim.target].state_index(risky_label);
  if (base.sim.risky_state < 0)
    throw ConfigError(spath + ".risky_state: unknown state label '" + risky_label + "'");
  base.sim.mixture = mixture_from_json(section, spath);
  base.model = priors_from_json(section, spath);
  base.mcmc = mcmc_from_json(section, spath);
  base.master_seed = ctx.seed;

  GridConfig grid_cfg;
  if (jsonio::bool_or(section, "desk_scale", spath, false)) grid_cfg = GridConfig::desk_scale();
  grid_cfg.agent_counts = int_list(section, "agents", spath, grid_cfg.agent_counts);
  grid_cfg.question_counts = int_list(section, "questions", spath, grid_cfg.question_counts);
  grid_cfg.repeats = jsonio::int_or(section, "repeats", spath, grid_cfg.repeats);

  GridResult grid =
      clock.time("grid", [&] { return robustness_grid(grid_cfg, base); });

  std::string alpha_out = out_path(ctx, jsonio::string_or(section, "alpha_out", spath,
                                                          "alpha_entropy.csv"));
  std::string beta_out = out_path(ctx, jsonio::string_or(section, "beta_out", spath,
                                                         "beta_entropy.csv"));
  std::string cells_out = out_path(ctx, jsonio::string_or(section, "cells_out", spath,
                                                          "grid_cells.csv"));
  clock.time("write", [&] {
    write_grid_matrix(alpha_out, grid, true);
    write_grid_matrix(beta_out, grid, false);
    write_grid_cells(cells_out, grid);
  });
  manifest.add_output("alpha_entropy", alpha_out);
  manifest.add_output("beta_entropy", beta_out);
  manifest.add_output("cells", cells_out);
  save_manifest(out_path(ctx, jsonio::string_or(section, "manifest_out", spath,
                                                "robustness_manifest.json")),
                manifest);

  int invalid = 0;
  for (bool v : grid.valid)
    if (!v) ++invalid;
  if (invalid > 0) {
    std::cerr << "warning: " << invalid << " grid cell(s) failed; see " << cells_out << "\n";
    return kExitPartialGrid;
  }
  std::cout << "grid complete: " << grid.agent_counts.size() << "x"
            << grid.question_counts.size() << " cells -> " << alpha_out << ", " << beta_out
            << "\n";
  return kExitOk;
}

// ---- report ------------------------------------------------------------

int cmd_report(const AppContext& ctx, const std::string& manifest_override) {
  std::string manifest_path = manifest_override;
  if (manifest_path.empty()) {
    const Json& section = stage_section(ctx, "report");
    manifest_path = jsonio::as_string(jsonio::require(section, "manifest",
                                                      ctx.config_origin + ".report"),
                                      ctx.config_origin + ".report.manifest");
  }
  RunManifest m = load_manifest(manifest_path);
  std::cout << "run: " << m.command << " (version " << m.version << ", seed " << m.seed << ")\n";
  std::cout << "outputs:\n";
  for (const OutputRecord& rec : m.outputs) {
    std::string status = "missing";
    if (fs::exists(rec.path))
      status = hex64(fnv1a_file(rec.path)) == rec.digest ? "verified" : "CHANGED";
    std::cout << "  " << rec.name << "  " << rec.path << "  " << rec.bytes << " bytes  digest "
              << rec.digest << "  [" << status << "]\n";
  }
  std::cout << "timings:\n";
  for (const StageTiming& t : m.timings)
    std::cout << "  " << t.stage << "  " << format_double(t.seconds) << " s\n";
  for (const OutputRecord& rec : m.outputs) {
    if (rec.name != "summary" || !fs::exists(rec.path)) continue;
    std::cout << "summary head (" << rec.path << "):\n";
    std::ifstream in(rec.path);
    std::string line;
    for (int k = 0; k < 6 && std::getline(in, line); ++k) std::cout << "  " << line << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic decision-data simulator and Bayesian recovery toolkit"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, dataset_override, report_manifest;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "run configuration file (JSON)");
    sub->add_option("--from-manifest", manifest_path,
                    "re-run from a manifest's recorded config and seed");
  };

  CLI::App* train = app.add_subcommand("train-bn", "fit network parameters from a survey file");
  add_common(train);
  CLI::App* generate = app.add_subcommand("generate", "produce a synthetic dataset");
  add_common(generate);
  CLI::App* infer = app.add_subcommand("infer", "recover parameters from an observable dataset");
  add_common(infer);
  infer->add_option("--dataset", dataset_override, "observable dataset (overrides config)");
  CLI::App* robustness = app.add_subcommand("robustness", "entropy over an (agents x questions) grid");
  add_common(robustness);
  CLI::App* report = app.add_subcommand("report", "render a run manifest as text");
  report->add_option("--config,-c", config_path, "run configuration file (JSON)");
  report->add_option("--manifest,-m", report_manifest, "manifest file (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (report->parsed() && !report_manifest.empty() && config_path.empty()) {
      AppContext ctx;  // report straight from a manifest needs no config
      return cmd_report(ctx, report_manifest);
    }
    AppContext ctx = load_context(config_path, manifest_path);
    if (train->parsed()) return cmd_train_bn(ctx);
    if (generate->parsed()) return cmd_generate(ctx);
    if (infer->parsed()) return cmd_infer(ctx, dataset_override);
    if (robustness->parsed()) return cmd_robustness(ctx);
    if (report->parsed()) return cmd_report(ctx, report_manifest);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ImpossibleEvidenceError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
