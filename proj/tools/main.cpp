#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "simplexflow/experiment.hpp"

namespace {

using simplexflow::cli::ConfigError;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::optional<std::string> scores, schedule, dynamics, step, face, output, format;
  std::optional<double> temperature, horizon, tol, eta;
  std::optional<std::size_t> steps, jobs;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  app->add_option("--scores", f.scores, "inline list (1,0,2 or [1,0,2]), random:V, or a file of numbers");
  app->add_option("--temperature", f.temperature, "constant temperature");
  app->add_option("--schedule", f.schedule, "constant:T | piecewise:T0;t1:T1;... | exponential:T0:rate");
  app->add_option("--dynamics", f.dynamics, "literal | entropic");
  app->add_option("--step", f.step, "exact-prox | printed-mw");
  app->add_option("--face", f.face, "none | topk:k | nucleus:m | indices:i,j (1-based)");
  app->add_option("--steps", f.steps, "prox-iterate: step cap; simulate/sweep: trajectory samples");
  app->add_option("--horizon", f.horizon, "integration horizon");
  app->add_option("--tol", f.tol, "prox-iterate: per-step KL tolerance; otherwise integrator rel_tol");
  app->add_option("--eta", f.eta, "mirror step size");
  app->add_option("--seed", f.seed, "seed for random inputs");
  app->add_option("--jobs", f.jobs, "concurrent sweep cells");
  app->add_option("--output", f.output, "output path (stdout when absent); manifest goes to <output>.manifest.json");
  app->add_option("--format", f.format, "csv | json");
}

json overrides_of(const CommonFlags& f, bool prox) {
  json o = json::object();
  if (f.scores) o["scores"] = *f.scores;
  if (f.temperature) o["temperature"] = *f.temperature;
  if (f.schedule) o["schedule"] = *f.schedule;
  if (f.dynamics) o["dynamics"] = *f.dynamics;
  if (f.step) o["step"] = *f.step;
  if (f.face) o["face"] = *f.face;
  if (f.steps) {
    if (prox) o["prox"]["max_steps"] = *f.steps;
    else o["integrator"]["num_samples"] = *f.steps;
  }
  if (f.horizon) o["integrator"]["horizon"] = *f.horizon;
  if (f.tol) {
    if (prox) o["prox"]["kl_tol"] = *f.tol;
    else o["integrator"]["rel_tol"] = *f.tol;
  }
  if (f.eta) o["prox"]["eta"] = *f.eta;
  if (f.seed) o["seed"] = *f.seed;
  if (f.jobs) o["jobs"] = *f.jobs;
  if (f.output) o["output"] = *f.output;
  if (f.format) o["format"] = *f.format;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = simplexflow::cli;
  CLI::App app{"simplexflow: decoding dynamics on the probability simplex"};
  app.set_version_flag("--version", SIMPLEXFLOW_VERSION);
  app.require_subcommand(1);

  CommonFlags sim_f, prox_f, sweep_f, verify_f;
  auto* sim = app.add_subcommand("simulate", "integrate a replicator flow and write the trajectory");
  add_common(sim, sim_f);
  auto* prox = app.add_subcommand("prox-iterate", "iterate a mirror step and write the per-step table");
  add_common(prox, prox_f);
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid and write one record per cell");
  add_common(sweep, sweep_f);
  std::optional<std::string> task;
  sweep->add_option("--task", task, "simulate | prox-iterate | reparameterization | recurrence");
  std::vector<double> grid_T, grid_beta, grid_eta;
  std::vector<std::uint64_t> grid_seed;
  sweep->add_option("--grid-temperature", grid_T, "temperature grid")->delimiter(',');
  sweep->add_option("--grid-beta", grid_beta, "coupling-strength grid")->delimiter(',');
  sweep->add_option("--grid-eta", grid_eta, "step-size grid")->delimiter(',');
  sweep->add_option("--grid-seed", grid_seed, "seed grid")->delimiter(',');
  auto* verify = app.add_subcommand("verify", "run the claim adjudication and compare with the expected matrix");
  add_common(verify, verify_f);
  std::vector<std::string> claims;
  std::optional<std::string> expected;
  cli::VerifyOptions vo;
  verify->add_option("--claims", claims, "restrict to these claim ids")->delimiter(',');
  verify->add_option("--expected", expected, "expected matrix (defaults to the one shipped with the sources)");
  verify->add_option("--write-expected", vo.write_expected, "write the freshly derived matrix to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }

  try {
    if (sim->parsed()) return cli::cmd_simulate(cli::load_config(sim_f.config, overrides_of(sim_f, false)));
    if (prox->parsed()) return cli::cmd_prox_iterate(cli::load_config(prox_f.config, overrides_of(prox_f, true)));
    if (sweep->parsed()) {
      auto o = overrides_of(sweep_f, false);
      if (task) o["sweep"]["task"] = *task;
      if (!grid_T.empty()) o["sweep"]["temperature"] = grid_T;
      if (!grid_beta.empty()) o["sweep"]["beta"] = grid_beta;
      if (!grid_eta.empty()) o["sweep"]["eta"] = grid_eta;
      if (!grid_seed.empty()) o["sweep"]["seed"] = grid_seed;
      return cli::cmd_sweep(cli::load_config(sweep_f.config, o));
    }
    if (verify->parsed()) {
      auto o = overrides_of(verify_f, false);
      if (!claims.empty()) o["verify"]["claims"] = claims;
      if (expected) o["verify"]["expected"] = *expected;
      return cli::cmd_verify(cli::load_config(verify_f.config, o), vo);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const simplexflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == simplexflow::ErrorCode::OracleFailure ? cli::kOracleFailure : cli::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kConfigError;
  }
  return cli::kConfigError;
}
