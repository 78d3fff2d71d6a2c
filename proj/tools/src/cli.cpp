#include "selshare/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "selshare/bootstrap.hpp"
#include "selshare/counterfactual.hpp"
#include "selshare/errors.hpp"
#include "selshare/io.hpp"
#include "selshare/mcmc.hpp"
#include "selshare/reduced_form.hpp"
#include "selshare/simulator.hpp"

#ifndef SELSHARE_VERSION
#define SELSHARE_VERSION "unknown"
#endif

namespace selshare::cli {
namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

std::optional<std::uint64_t> env_unsigned(const char* name) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string text(raw);
    if (text.front() == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("environment variable ") + name + " must be a nonnegative integer");
  }
}

// Flag, then environment, then the configuration file, then 0.
std::uint64_t resolve_seed(const Globals& g, std::optional<std::uint64_t> from_config) {
  if (g.seed) return *g.seed;
  if (auto env = env_unsigned("SELSHARE_SEED")) return *env;
  return from_config.value_or(0);
}

unsigned resolve_threads(const Globals& g) {
  if (g.threads) return std::max(1u, *g.threads);
  if (auto env = env_unsigned("SELSHARE_THREADS")) return static_cast<unsigned>(std::clamp<std::uint64_t>(*env, 1, 1024));
  return 1;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json dataset_metadata(const Dataset& d, const std::string& digest) {
  return {{"sha256", digest}, {"records", d.size()}, {"offers", d.n_offers()}, {"subjects", d.n_subjects()}};
}

nlohmann::json sim_config_json(const SimConfig& c) {
  return {{"n_subjects", c.n_subjects},
          {"n_offers", c.n_offers},
          {"exposure_distribution", c.exposure_distribution.describe()},
          {"exposure_weights", c.exposure_distribution.weights},
          {"treatment_probability", c.treatment_probability},
          {"seed", c.seed},
          {"min_offer_subjects", c.min_offer_subjects}};
}

nlohmann::json mcmc_config_json(const McmcConfig& c) {
  return {{"chains", c.chains},         {"iterations", c.iterations},       {"burn_in", c.burn_in},
          {"seed", c.seed},             {"hyper_sweeps", c.hyper_sweeps},   {"adapt", c.adapt},
          {"rhat_threshold", c.rhat_threshold}};
}

// Accumulates the manifest for one command and writes outputs atomically.
class Run {
 public:
  explicit Run(const std::vector<std::string>& args) {
    manifest_.tool_version = SELSHARE_VERSION;
    manifest_.started = utc_now();
    std::string joined = "selshare";
    for (const auto& a : args) joined += " " + a;
    manifest_.command = joined;
  }

  void input(const std::filesystem::path& path) { manifest_.inputs.emplace_back(path.string(), sha256_file(path)); }
  void configure(const nlohmann::json& resolved, std::uint64_t seed) {
    manifest_.config_hash = sha256_hex(resolved.dump());
    manifest_.seed = seed;
  }
  void output(const std::filesystem::path& path, const std::string& contents) {
    write_atomic(path, contents);
    manifest_.outputs.emplace_back(path.string(), sha256_hex(contents));
  }
  void finish(const std::filesystem::path& primary) {
    manifest_.finished = utc_now();
    std::filesystem::path m = primary;
    m += ".manifest.json";
    write_atomic(m, dump(manifest_.to_json()));
  }
  const std::string& last_input_digest() const { return manifest_.inputs.back().second; }

 private:
  RunManifest manifest_;
};

// ---- commands -------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, params, out;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, Run& run, std::ostream& out) {
  run.input(a.config);
  run.input(a.params);
  SimConfig config = sim_config_from(KeyValues::load(a.config));
  const auto kv = KeyValues::load(a.params);
  const ModelParams params = params_from(kv);
  config.seed = resolve_seed(g, config.seed);
  config.threads = resolve_threads(g);
  run.configure({{"command", "simulate"}, {"config", sim_config_json(config)}, {"params", to_json(params)}},
                config.seed);
  const Dataset data = simulate(params, config);
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  run.output(a.out, csv.str());
  run.finish(a.out);
  out << "wrote " << data.size() << " records to " << a.out << "\n";
  return kOk;
}

struct FitArgs {
  std::string model, data, mcmc, out;
  std::optional<int> chains, iterations, burn_in;
  int nodes = 20;
};

int cmd_fit(const FitArgs& a, const Globals& g, Run& run, std::ostream& out, std::ostream& err) {
  run.input(a.data);
  const std::string digest = run.last_input_digest();
  const Dataset data = read_dataset_csv(std::filesystem::path(a.data));
  const unsigned threads = resolve_threads(g);
  nlohmann::json result;
  int code = kOk;
  if (a.model == "share" || a.model == "adopt") {
    FitOptions options;
    options.quadrature_nodes = a.nodes;
    options.threads = threads;
    run.configure({{"command", "fit"}, {"model", a.model}, {"quadrature_nodes", a.nodes}}, resolve_seed(g, {}));
    result = a.model == "share" ? to_json(fit_share_probit(data, options)) : to_json(fit_adopt_binomial(data, options));
    for (const auto& w : result["warnings"]) err << "warning: " << w.get<std::string>() << "\n";
  } else {
    McmcConfig config;
    if (!a.mcmc.empty()) {
      run.input(a.mcmc);
      config = mcmc_config_from(KeyValues::load(a.mcmc));
    }
    if (a.chains) config.chains = *a.chains;
    if (a.iterations) config.iterations = *a.iterations;
    if (a.burn_in) config.burn_in = *a.burn_in;
    config.seed = resolve_seed(g, a.mcmc.empty() ? std::nullopt : std::optional(config.seed));
    config.threads = threads;
    config.validate();
    run.configure({{"command", "fit"}, {"model", "joint"}, {"mcmc", mcmc_config_json(config)}}, config.seed);
    const PosteriorDraws posterior = fit_joint(data, config);
    result = to_json(posterior);
    result["mcmc"] = mcmc_config_json(config);
    if (!posterior.converged) {
      err << "error: chains did not converge (rhat above " << config.rhat_threshold << ")\n";
      code = kConvergenceFailure;
    }
  }
  result["dataset"] = dataset_metadata(data, digest);
  run.output(a.out, dump(result));
  run.finish(a.out);
  out << "wrote " << a.model << " fit to " << a.out << "\n";
  return code;
}

struct DecomposeArgs {
  std::string posterior, config, out, csv;
  int iterations = 500;
  std::optional<std::uint64_t> population;
  bool force = false;
};

int cmd_decompose(const DecomposeArgs& a, const Globals& g, Run& run, std::ostream& out, std::ostream& err) {
  run.input(a.posterior);
  run.input(a.config);
  nlohmann::json pj;
  {
    std::ifstream in(a.posterior);
    if (!in) throw InputError("cannot open " + a.posterior);
    try {
      pj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(a.posterior + ": " + e.what());
    }
  }
  const PosteriorDraws posterior = posterior_from_json(pj);
  if (!posterior.converged && !a.force) {
    err << "error: posterior is not converged; rerun with --force to decompose anyway\n";
    return kConvergenceFailure;
  }
  SimConfig config = sim_config_from(KeyValues::load(a.config));
  if (a.population) config.n_subjects = *a.population;
  config.seed = resolve_seed(g, config.seed);
  config.threads = resolve_threads(g);
  config.validate();
  DecomposeOptions options;
  options.iterations = a.iterations;
  options.require_converged = !a.force;
  run.configure({{"command", "decompose"}, {"population", sim_config_json(config)}, {"iterations", a.iterations},
                 {"force", a.force}},
                config.seed);
  const DecompositionResult result = decompose(posterior, config, options);
  std::string csv_path = a.csv;
  if (csv_path.empty()) csv_path = a.out + ".csv";
  std::ostringstream csv;
  write_effects_csv(csv, selection_effect_summary(result));
  run.output(a.out, dump(to_json(result)));
  run.output(csv_path, csv.str());
  run.finish(a.out);
  out << "wrote decomposition to " << a.out << " and " << csv_path << "\n";
  return kOk;
}

struct BootstrapArgs {
  std::string data, statistic = "relative_risk", config, out;
  std::optional<int> replicates;
  std::optional<double> confidence;
};

int cmd_bootstrap(const BootstrapArgs& a, const Globals& g, Run& run, std::ostream& out) {
  run.input(a.data);
  const std::string digest = run.last_input_digest();
  BootstrapConfig config;
  if (!a.config.empty()) {
    run.input(a.config);
    config = bootstrap_config_from(KeyValues::load(a.config));
  }
  if (a.replicates) config.replicates = *a.replicates;
  if (a.confidence) config.confidence_level = *a.confidence;
  config.seed = resolve_seed(g, a.config.empty() ? std::nullopt : std::optional(config.seed));
  config.threads = resolve_threads(g);
  config.validate();
  const Dataset data = read_dataset_csv(std::filesystem::path(a.data));
  run.configure({{"command", "bootstrap"},
                 {"statistic", a.statistic},
                 {"replicates", config.replicates},
                 {"confidence_level", config.confidence_level},
                 {"seed", config.seed}},
                config.seed);
  WeightedStatistic statistic = [](const Dataset& d, std::span<const double> w) { return relative_risk(d, w); };
  const IntervalEstimate interval = multiway_bootstrap(data, statistic, config);
  nlohmann::json j = to_json(interval);
  j["statistic"] = a.statistic;
  j["confidence_level"] = config.confidence_level;
  j["replicates"] = config.replicates;
  j["dataset"] = dataset_metadata(data, digest);
  run.output(a.out, dump(j));
  run.finish(a.out);
  out << "wrote bootstrap interval to " << a.out << "\n";
  return kOk;
}

struct SummarizeArgs {
  std::string data, out;
};

int cmd_summarize(const SummarizeArgs& a, const Globals& g, Run& run, std::ostream& out) {
  run.input(a.data);
  const std::string digest = run.last_input_digest();
  const Dataset data = read_dataset_csv(std::filesystem::path(a.data));
  run.configure({{"command", "summarize"}}, resolve_seed(g, {}));
  nlohmann::json j = to_json(summarize(data));
  j["dataset"] = dataset_metadata(data, digest);
  run.output(a.out, dump(j));
  run.finish(a.out);
  out << "wrote summary to " << a.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate, fit and decompose selection effects in sharing experiments", "selshare"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SELSHARE_VERSION);
  Globals globals;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides SELSHARE_SEED and config files)");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (overrides SELSHARE_THREADS)")
                          ->check(CLI::Range(1u, 1024u));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate an experiment dataset");
  simulate->add_option("--config", sim.config, "Simulation config (key = value)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--params", sim.params, "Model parameters (key = value)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output dataset CSV")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a reduced-form or joint model");
  fit_cmd->add_option("--model", fit.model, "share, adopt or joint")
      ->required()
      ->check(CLI::IsMember({"share", "adopt", "joint"}));
  fit_cmd->add_option("--data", fit.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--mcmc", fit.mcmc, "MCMC config for the joint model (key = value)")->check(CLI::ExistingFile);
  fit_cmd->add_option("--chains", fit.chains, "Override the number of chains");
  fit_cmd->add_option("--iterations", fit.iterations, "Override iterations per chain");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Override burn-in iterations");
  fit_cmd->add_option("--nodes", fit.nodes, "Gauss-Hermite nodes for reduced-form fits")->check(CLI::Range(2, 200));
  fit_cmd->add_option("--out", fit.out, "Output JSON")->required();

  DecomposeArgs dec;
  auto* decompose_cmd = app.add_subcommand("decompose", "Counterfactual relative risks from a joint posterior");
  decompose_cmd->add_option("--posterior", dec.posterior, "Posterior JSON from fit --model joint")
      ->required()
      ->check(CLI::ExistingFile);
  decompose_cmd->add_option("--config", dec.config, "Population config (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  decompose_cmd->add_option("--iterations", dec.iterations, "Simulated populations per scenario")
      ->check(CLI::Range(2, 1000000));
  decompose_cmd->add_option("--population", dec.population, "Override the population size");
  decompose_cmd->add_flag("--force", dec.force, "Decompose even if the posterior is not converged");
  decompose_cmd->add_option("--csv", dec.csv, "Plot-ready CSV (default: <out>.csv)");
  decompose_cmd->add_option("--out", dec.out, "Output JSON")->required();

  BootstrapArgs boot;
  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Two-way clustered bootstrap interval");
  bootstrap_cmd->add_option("--data", boot.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  bootstrap_cmd->add_option("--statistic", boot.statistic, "Statistic to resample")
      ->check(CLI::IsMember({"relative_risk"}));
  bootstrap_cmd->add_option("--config", boot.config, "Bootstrap config (key = value)")->check(CLI::ExistingFile);
  bootstrap_cmd->add_option("--replicates", boot.replicates, "Override the replicate count");
  bootstrap_cmd->add_option("--confidence", boot.confidence, "Override the confidence level");
  bootstrap_cmd->add_option("--out", boot.out, "Output JSON")->required();

  SummarizeArgs summ;
  auto* summarize_cmd = app.add_subcommand("summarize", "Per-condition summary statistics");
  summarize_cmd->add_option("--data", summ.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  summarize_cmd->add_option("--out", summ.out, "Output JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kOk : kInputError;
  }
  if (*seed_opt) globals.seed = seed;
  if (*threads_opt) globals.threads = threads;

  Run manifest(args);
  try {
    if (*simulate) return cmd_simulate(sim, globals, manifest, out);
    if (*fit_cmd) return cmd_fit(fit, globals, manifest, out, err);
    if (*decompose_cmd) return cmd_decompose(dec, globals, manifest, out, err);
    if (*bootstrap_cmd) return cmd_bootstrap(boot, globals, manifest, out);
    if (*summarize_cmd) return cmd_summarize(summ, globals, manifest, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << "\n";
    return kConvergenceFailure;
  } catch (const IdentificationError& e) {
    err << "identification error: " << e.what() << "\n";
    return kIdentificationError;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace selshare::cli
