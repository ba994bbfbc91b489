#ifndef SIMPLEXFLOW_EXPERIMENT_HPP
#define SIMPLEXFLOW_EXPERIMENT_HPP

// Experiment runner behind the command-line tool.
//
// A run is described by an ExperimentConfig, read from a JSON file and then
// patched by command-line flags (flags win). The resolved config is rendered
// canonically (sorted keys, compact) and hashed into the RunManifest.
//
// Config keys:
//   scores       [numbers] | "random:V" | path to a file of numbers
//   temperature  number              (exclusive with schedule)
//   schedule     "constant:T" | "piecewise:T0;t1:T1;..." | "exponential:T0:rate"
//   dynamics     "literal" | "entropic"
//   step         "exact-prox" | "printed-mw"
//   face         "none" | "topk:k" | "nucleus:m" | "indices:1,3"   (1-based)
//   field        {"kind": "constant"} | {"kind": "linear", "B": ...} | {"kind": "rotational", "beta": b}
//   initial      "uniform" | "softmax" | "random" | [numbers]
//   integrator   {horizon, dt0, rel_tol, abs_tol, convergence_kl, num_samples, max_steps}
//   prox         {eta, max_steps, kl_tol}
//   sweep        {task, temperature: [..], beta: [..], eta: [..], seed: [..]}
//   verify       {claims: [..], trials, runs, expected}
//   seed, jobs, output, format

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "io.hpp"
#include "mirror.hpp"
#include "oracles.hpp"
#include "path_fields.hpp"
#include "replicator.hpp"
#include "simplex_core.hpp"

#ifndef SIMPLEXFLOW_VERSION
#define SIMPLEXFLOW_VERSION "0.0.0"
#endif
#ifndef SIMPLEXFLOW_EXPECTED_CLAIMS
#define SIMPLEXFLOW_EXPECTED_CLAIMS "data/expected_claims.json"
#endif

namespace simplexflow::cli {

using nlohmann::json;

enum ExitCode : int { kSuccess = 0, kConfigError = 2, kDiverged = 3, kOracleFailure = 4 };

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// --- option strings ------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& text, const std::string& field) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end) throw ConfigError(field, "not a number: '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& text, const std::string& field) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end) throw ConfigError(field, "not a count: '" + text + "'");
  return v;
}

inline std::pair<std::string, std::string> split_kind(const std::string& spec) {
  const auto pos = spec.find(':');
  if (pos == std::string::npos) return {trim(spec), {}};
  return {trim(spec.substr(0, pos)), spec.substr(pos + 1)};
}

}  // namespace detail

inline TemperatureSchedule parse_schedule(const std::string& spec) {
  const auto [kind, rest] = detail::split_kind(spec);
  try {
    if (kind == "constant") return TemperatureSchedule::constant(detail::parse_double(detail::trim(rest), "schedule"));
    if (kind == "exponential") {
      const auto parts = detail::split(rest, ':');
      if (parts.size() != 2) throw ConfigError("schedule", "expected exponential:T0:rate");
      return TemperatureSchedule::exponential(detail::parse_double(parts[0], "schedule"),
                                              detail::parse_double(parts[1], "schedule"));
    }
    if (kind == "piecewise") {
      const auto pieces = detail::split(rest, ';');
      std::vector<double> bps, vals{detail::parse_double(pieces[0], "schedule")};
      for (std::size_t k = 1; k < pieces.size(); ++k) {
        const auto tv = detail::split(pieces[k], ':');
        if (tv.size() != 2) throw ConfigError("schedule", "expected piecewise:T0;t1:T1;...");
        bps.push_back(detail::parse_double(tv[0], "schedule"));
        vals.push_back(detail::parse_double(tv[1], "schedule"));
      }
      return TemperatureSchedule::piecewise(std::move(bps), std::move(vals));
    }
  } catch (const Error& e) {
    throw ConfigError("schedule", e.what());
  }
  throw ConfigError("schedule", "unknown schedule kind '" + kind + "'");
}

/// nullopt for "none".
inline std::optional<FaceMask> parse_face(const std::string& spec, const ScoreVector& s, Temperature T) {
  const auto [kind, rest] = detail::split_kind(spec);
  try {
    if (kind == "none" || kind.empty()) return std::nullopt;
    if (kind == "topk") return build_face_topk(s, detail::parse_count(detail::trim(rest), "face"));
    if (kind == "nucleus") return build_face_nucleus(s, T, detail::parse_double(detail::trim(rest), "face"));
    if (kind == "indices") {
      std::vector<std::size_t> idx;
      for (const auto& tok : detail::split(rest, ',')) {
        const auto k = detail::parse_count(tok, "face");
        if (k < 1 || k > s.size()) throw ConfigError("face", "index " + tok + " outside [1, V]");
        idx.push_back(k - 1);
      }
      return FaceMask::from_indices(s.size(), idx);
    }
  } catch (const Error& e) {
    throw ConfigError("face", e.what());
  }
  throw ConfigError("face", "unknown face kind '" + kind + "'");
}

inline FieldKind parse_dynamics(const std::string& s) {
  if (s == "literal") return FieldKind::LiteralReplicator;
  if (s == "entropic") return FieldKind::EntropicReplicator;
  throw ConfigError("dynamics", "expected literal or entropic, got '" + s + "'");
}

inline MirrorStepKind parse_step(const std::string& s) {
  if (s == "exact-prox") return MirrorStepKind::ExactProx;
  if (s == "printed-mw") return MirrorStepKind::PrintedMW;
  throw ConfigError("step", "expected exact-prox or printed-mw, got '" + s + "'");
}

/// Numbers separated by commas, whitespace or newlines; a leading '[' means JSON.
inline std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
  const auto t = detail::trim(text);
  if (!t.empty() && t.front() == '[') {
    try {
      return io::doubles_from_json(json::parse(t));
    } catch (const std::exception& e) {
      throw ConfigError(field, e.what());
    }
  }
  std::string norm = t;
  std::replace_if(norm.begin(), norm.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '\t'; }, ' ');
  std::vector<double> out;
  std::istringstream is(norm);
  std::string tok;
  while (is >> tok) out.push_back(detail::parse_double(tok, field));
  if (out.empty()) throw ConfigError(field, "no numbers found");
  return out;
}

// --- config ---------------------------------------------------------------------------

struct SweepGrid {
  std::string task = "simulate";  // simulate | prox-iterate | reparameterization | recurrence
  std::vector<double> temperature, beta, eta;
  std::vector<std::uint64_t> seed;
};

struct ExperimentConfig {
  json scores = json();  // array, "random:V" or a file path
  std::optional<double> temperature;
  std::optional<std::string> schedule;
  std::string dynamics = "entropic";
  std::string step = "exact-prox";
  std::string face = "none";
  json field = {{"kind", "constant"}};
  json initial = "uniform";
  double horizon = 50.0;
  double dt0 = 1e-2, rel_tol = 1e-8, abs_tol = 1e-10, convergence_kl = 1e-10;
  std::size_t num_samples = 200, integrator_max_steps = 5'000'000;
  double eta = 0.5, kl_tol = 1e-12;
  std::size_t prox_max_steps = 10000;
  SweepGrid sweep;
  std::vector<std::string> claims;
  std::size_t verify_trials = 200, verify_runs = 40;
  std::string expected = SIMPLEXFLOW_EXPECTED_CLAIMS;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string output;
  std::string format = "csv";
};

namespace detail {

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(field, "wrong type: " + j.dump());
  }
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using detail::get_as;
  detail::check_keys(j, "", {"scores", "temperature", "schedule", "dynamics", "step", "face", "field", "initial",
                             "integrator", "prox", "sweep", "verify", "seed", "jobs", "output", "format"});
  ExperimentConfig c;
  if (j.contains("scores")) c.scores = j["scores"];
  if (j.contains("temperature") && !j["temperature"].is_null()) c.temperature = get_as<double>(j["temperature"], "temperature");
  if (j.contains("schedule") && !j["schedule"].is_null()) c.schedule = get_as<std::string>(j["schedule"], "schedule");
  if (c.temperature && c.schedule) throw ConfigError("temperature", "give exactly one of temperature and schedule");
  if (j.contains("dynamics")) c.dynamics = get_as<std::string>(j["dynamics"], "dynamics");
  if (j.contains("step")) c.step = get_as<std::string>(j["step"], "step");
  if (j.contains("face")) c.face = get_as<std::string>(j["face"], "face");
  if (j.contains("field")) {
    c.field = j["field"];
    detail::check_keys(c.field, "field", {"kind", "B", "beta"});
  }
  if (j.contains("initial")) c.initial = j["initial"];
  if (j.contains("integrator")) {
    const auto& g = j["integrator"];
    detail::check_keys(g, "integrator",
                       {"horizon", "dt0", "rel_tol", "abs_tol", "convergence_kl", "num_samples", "max_steps"});
    if (g.contains("horizon")) c.horizon = get_as<double>(g["horizon"], "integrator.horizon");
    if (g.contains("dt0")) c.dt0 = get_as<double>(g["dt0"], "integrator.dt0");
    if (g.contains("rel_tol")) c.rel_tol = get_as<double>(g["rel_tol"], "integrator.rel_tol");
    if (g.contains("abs_tol")) c.abs_tol = get_as<double>(g["abs_tol"], "integrator.abs_tol");
    if (g.contains("convergence_kl")) c.convergence_kl = get_as<double>(g["convergence_kl"], "integrator.convergence_kl");
    if (g.contains("num_samples")) c.num_samples = get_as<std::size_t>(g["num_samples"], "integrator.num_samples");
    if (g.contains("max_steps")) c.integrator_max_steps = get_as<std::size_t>(g["max_steps"], "integrator.max_steps");
  }
  if (j.contains("prox")) {
    const auto& g = j["prox"];
    detail::check_keys(g, "prox", {"eta", "max_steps", "kl_tol"});
    if (g.contains("eta")) c.eta = get_as<double>(g["eta"], "prox.eta");
    if (g.contains("max_steps")) c.prox_max_steps = get_as<std::size_t>(g["max_steps"], "prox.max_steps");
    if (g.contains("kl_tol")) c.kl_tol = get_as<double>(g["kl_tol"], "prox.kl_tol");
  }
  if (j.contains("sweep")) {
    const auto& g = j["sweep"];
    detail::check_keys(g, "sweep", {"task", "temperature", "beta", "eta", "seed"});
    if (g.contains("task")) c.sweep.task = get_as<std::string>(g["task"], "sweep.task");
    if (g.contains("temperature")) c.sweep.temperature = get_as<std::vector<double>>(g["temperature"], "sweep.temperature");
    if (g.contains("beta")) c.sweep.beta = get_as<std::vector<double>>(g["beta"], "sweep.beta");
    if (g.contains("eta")) c.sweep.eta = get_as<std::vector<double>>(g["eta"], "sweep.eta");
    if (g.contains("seed")) c.sweep.seed = get_as<std::vector<std::uint64_t>>(g["seed"], "sweep.seed");
  }
  if (j.contains("verify")) {
    const auto& g = j["verify"];
    detail::check_keys(g, "verify", {"claims", "trials", "runs", "expected"});
    if (g.contains("claims")) c.claims = get_as<std::vector<std::string>>(g["claims"], "verify.claims");
    if (g.contains("trials")) c.verify_trials = get_as<std::size_t>(g["trials"], "verify.trials");
    if (g.contains("runs")) c.verify_runs = get_as<std::size_t>(g["runs"], "verify.runs");
    if (g.contains("expected")) c.expected = get_as<std::string>(g["expected"], "verify.expected");
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("jobs")) c.jobs = get_as<std::size_t>(j["jobs"], "jobs");
  if (j.contains("output")) c.output = get_as<std::string>(j["output"], "output");
  if (j.contains("format")) c.format = get_as<std::string>(j["format"], "format");
  if (c.format != "csv" && c.format != "json") throw ConfigError("format", "expected csv or json");
  if (c.jobs == 0) throw ConfigError("jobs", "must be at least 1");
  return c;
}

/// Canonical rendering. Output location and job count do not change results
/// and are left out so they do not perturb the hash.
inline json to_json(const ExperimentConfig& c) {
  json j{{"scores", c.scores},
         {"dynamics", c.dynamics},
         {"step", c.step},
         {"face", c.face},
         {"field", c.field},
         {"initial", c.initial},
         {"integrator",
          {{"horizon", c.horizon},
           {"dt0", c.dt0},
           {"rel_tol", c.rel_tol},
           {"abs_tol", c.abs_tol},
           {"convergence_kl", c.convergence_kl},
           {"num_samples", c.num_samples},
           {"max_steps", c.integrator_max_steps}}},
         {"prox", {{"eta", c.eta}, {"max_steps", c.prox_max_steps}, {"kl_tol", c.kl_tol}}},
         {"sweep",
          {{"task", c.sweep.task},
           {"temperature", c.sweep.temperature},
           {"beta", c.sweep.beta},
           {"eta", c.sweep.eta},
           {"seed", c.sweep.seed}}},
         {"verify", {{"claims", c.claims}, {"trials", c.verify_trials}, {"runs", c.verify_runs}}},
         {"seed", c.seed},
         {"format", c.format}};
  if (c.temperature) j["temperature"] = *c.temperature;
  if (c.schedule) j["schedule"] = *c.schedule;
  return j;
}

/// Reads the config file (if any) and applies `overrides` on top. A
/// temperature override drops a file schedule and vice versa.
inline ExperimentConfig load_config(const std::string& path, const json& overrides) {
  json base = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    try {
      base = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    if (!base.is_object()) throw ConfigError("config", "top level must be an object");
  }
  if (overrides.contains("temperature")) base.erase("schedule");
  if (overrides.contains("schedule")) base.erase("temperature");
  base.merge_patch(overrides);
  return config_from_json(base);
}

// --- resolution ----------------------------------------------------------------------

/// Everything a run needs, with inputs materialized.
struct ResolvedRun {
  ScoreVector scores{0.0, 0.0};
  TemperatureSchedule schedule;
  std::optional<FaceMask> face;
  ScoreField field = ScoreField::constant(ScoreVector{0.0, 0.0});
  SimplexPoint initial{0.5, 0.5};
  FieldKind dynamics = FieldKind::EntropicReplicator;
  MirrorStepKind step = MirrorStepKind::ExactProx;
};

inline ScoreVector resolve_scores(const json& spec, std::uint64_t seed) {
  try {
    if (spec.is_array()) return io::score_vector_from_json(spec);
    if (!spec.is_string()) throw ConfigError("scores", "missing; give an array, random:V or a file path");
    const auto text = spec.get<std::string>();
    if (text.rfind("random:", 0) == 0) {
      const auto v = detail::parse_count(text.substr(7), "scores");
      oracles::InstanceGenerator gen(seed);
      return gen.scores(v);
    }
    if (!text.empty() && (text.front() == '[' || text.find(',') != std::string::npos) &&
        !std::filesystem::exists(text))
      return ScoreVector(parse_number_list(text, "scores"));
    std::ifstream in(text);
    if (!in) throw ConfigError("scores", "file '" + text + "' does not exist");
    std::stringstream ss;
    ss << in.rdbuf();
    return ScoreVector(parse_number_list(ss.str(), "scores"));
  } catch (const Error& e) {
    throw ConfigError("scores", e.what());
  }
}

inline ResolvedRun resolve(const ExperimentConfig& c) {
  ResolvedRun r;
  r.scores = resolve_scores(c.scores, c.seed);
  const std::size_t V = r.scores.size();
  r.schedule = c.schedule ? parse_schedule(*c.schedule) : TemperatureSchedule::constant(c.temperature.value_or(1.0));
  if (c.temperature && !(*c.temperature > 0.0 && std::isfinite(*c.temperature)))
    throw ConfigError("temperature", "must be positive and finite");
  r.dynamics = parse_dynamics(c.dynamics);
  r.step = parse_step(c.step);
  const Temperature T0(r.schedule.at(0.0));
  r.face = parse_face(c.face, r.scores, T0);

  try {
    const auto kind = c.field.value("kind", std::string("constant"));
    if (kind == "constant") {
      r.field = ScoreField::constant(r.scores);
    } else if (kind == "linear") {
      if (!c.field.contains("B")) throw ConfigError("field.B", "linear field needs B");
      r.field = ScoreField::linear(r.scores, io::matrix_from_json(c.field["B"], V));
    } else if (kind == "rotational") {
      r.field = ScoreField::linear(r.scores, cyclic_antisymmetric(V, c.field.value("beta", 1.0)));
    } else {
      throw ConfigError("field.kind", "expected constant, linear or rotational");
    }
  } catch (const Error& e) {
    throw ConfigError("field", e.what());
  } catch (const json::exception& e) {
    throw ConfigError("field", e.what());
  }
  if (r.field.has_coupling() && !r.schedule.is_constant())
    throw ConfigError("schedule", "state-dependent fields need a constant temperature");

  try {
    if (c.initial.is_array()) {
      r.initial = io::simplex_point_from_json(c.initial);
      if (r.initial.size() != V) throw ConfigError("initial", "length differs from the score vector");
    } else {
      const auto how = detail::get_as<std::string>(c.initial, "initial");
      if (how == "uniform") r.initial = SimplexPoint::uniform(V);
      else if (how == "softmax") r.initial = softmax(r.scores, T0);
      else if (how == "random") r.initial = oracles::InstanceGenerator(c.seed + 1).interior_point(V);
      else throw ConfigError("initial", "expected uniform, softmax, random or an array");
    }
    if (r.face) {
      // Move the start onto the face: zero outside, renormalized inside.
      const auto restricted = restrict_to_face(r.scores, r.initial, *r.face);
      SimplexPoint inner = restricted.point;
      if (c.initial.is_string() && c.initial.get<std::string>() == "softmax") inner = softmax(restricted.scores, T0);
      r.initial = lift_from_face(inner, *r.face);
    }
  } catch (const Error& e) {
    throw ConfigError("initial", e.what());
  }
  return r;
}

inline IntegratorControls controls_of(const ExperimentConfig& c) {
  IntegratorControls ctl;
  ctl.dt0 = c.dt0;
  ctl.rel_tol = c.rel_tol;
  ctl.abs_tol = c.abs_tol;
  ctl.convergence_kl = c.convergence_kl;
  ctl.num_samples = c.num_samples;
  ctl.max_steps = c.integrator_max_steps;
  return ctl;
}

// --- runs -------------------------------------------------------------------------------

struct RunOutcome {
  std::string status;
  bool diverged = false;
  std::map<std::string, double> metrics;
};

struct SimulationResult {
  TrajectoryRecord trajectory;
  RunOutcome outcome;
};

inline SimulationResult run_simulation(const ExperimentConfig& c) {
  const auto r = resolve(c);
  if (!(c.horizon >= 0.0)) throw ConfigError("integrator.horizon", "must be nonnegative");
  SimulationResult out;
  if (r.field.has_coupling())
    out.trajectory = integrate_path(r.field, r.dynamics, r.initial, Temperature(r.schedule.at(0.0)), c.horizon,
                                    controls_of(c));
  else
    out.trajectory = integrate(r.dynamics, r.initial, r.scores, r.schedule, c.horizon, controls_of(c));
  const auto& tr = out.trajectory;
  out.outcome.status = to_string(tr.status);
  out.outcome.diverged = tr.status == TerminalStatus::Diverged;
  out.outcome.metrics = {{"terminal_kl", tr.terminal().kl_to_target},
                         {"free_energy_gain", tr.terminal().free_energy - tr.samples.front().free_energy},
                         {"terminal_time", tr.terminal_time},
                         {"step_count", double(tr.accepted_steps)},
                         {"rejected_steps", double(tr.rejected_steps)},
                         {"terminal_field_norm", tr.terminal().field_norm}};
  return out;
}

struct ProxResult {
  MirrorRun run;
  std::optional<FaceMask> face;
  std::size_t V = 0;
  RunOutcome outcome;
};

inline ProxResult run_prox(const ExperimentConfig& c) {
  const auto r = resolve(c);
  if (!r.schedule.is_constant()) throw ConfigError("schedule", "prox iteration needs a constant temperature");
  if (r.field.has_coupling()) throw ConfigError("field", "prox iteration uses constant scores");
  if (!(c.eta > 0.0)) throw ConfigError("prox.eta", "must be positive");
  const Temperature T(r.schedule.at(0.0));
  IterateOptions opt;
  opt.max_steps = c.prox_max_steps;
  opt.kl_tol = c.kl_tol;
  ProxResult out;
  out.V = r.scores.size();
  out.face = r.face;
  try {
    if (r.face) {
      const auto rs = restrict_to_face(r.scores, r.initial, *r.face);
      out.run = iterate(r.step, rs.point, rs.scores, T, StepSize(c.eta), opt);
      for (auto& smp : out.run.samples)
        if (smp.p) smp.p = lift_from_face(*smp.p, *r.face);
      out.run.initial = r.initial;
      out.run.terminal = lift_from_face(out.run.terminal, *r.face);
    } else {
      out.run = iterate(r.step, r.initial, r.scores, T, StepSize(c.eta), opt);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotInterior) throw ConfigError("initial", e.what());
    throw;
  }
  const auto& run = out.run;
  const double f_end = run.samples.empty() ? run.initial_free_energy : run.samples.back().free_energy;
  out.outcome.status = to_string(run.status);
  out.outcome.metrics = {{"terminal_kl", run.terminal_kl_to_softmax},
                         {"free_energy_gain", f_end - run.initial_free_energy},
                         {"step_count", double(run.steps)},
                         {"min_ascent_slack", run.samples.empty() ? 0.0 : run.min_slack}};
  return out;
}

// --- output helpers ----------------------------------------------------------------------

inline io::RunManifest make_manifest(const std::string& command, const ExperimentConfig& c, const RunOutcome& o,
                                     double seconds) {
  io::RunManifest m;
  m.command = command;
  m.config_hash = io::config_hash(to_json(c));
  m.seed = c.seed;
  m.tool_version = SIMPLEXFLOW_VERSION;
  m.wall_clock_seconds = seconds;
  m.terminal_status = o.status;
  m.metrics = o.metrics;
  return m;
}

/// Writes `body` to the output path (stdout when empty) and the manifest to
/// `<output>.manifest.json` (stderr when there is no output path).
inline void emit(const ExperimentConfig& c, const std::string& body, const io::RunManifest& m, std::ostream& out,
                 std::ostream& err) {
  if (c.output.empty()) {
    out << body;
    err << io::serialize(m);
    return;
  }
  const std::filesystem::path p(c.output);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("output", "cannot write '" + c.output + "'");
  f << body;
  std::ofstream mf(c.output + ".manifest.json", std::ios::binary);
  mf << io::serialize(m);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// --- commands -------------------------------------------------------------------------------

inline int cmd_simulate(const ExperimentConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Stopwatch sw;
  const auto res = run_simulation(c);
  std::ostringstream body;
  if (c.format == "csv") io::write_trajectory_csv(body, res.trajectory, res.trajectory.samples.front().p.size());
  else body << io::trajectory_to_json(res.trajectory).dump(2) << '\n';
  emit(c, body.str(), make_manifest("simulate", c, res.outcome, sw.seconds()), out, err);
  if (res.outcome.diverged) {
    err << "diverged: " << res.trajectory.diagnostic << '\n';
    return kDiverged;
  }
  return kSuccess;
}

inline int cmd_prox_iterate(const ExperimentConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Stopwatch sw;
  const auto res = run_prox(c);
  std::ostringstream body;
  if (c.format == "csv") io::write_prox_csv(body, res.run, res.V);
  else body << io::prox_to_json(res.run).dump(2) << '\n';
  emit(c, body.str(), make_manifest("prox-iterate", c, res.outcome, sw.seconds()), out, err);
  return kSuccess;
}

struct SweepCell {
  std::size_t index = 0;
  json parameters = json::object();
  ExperimentConfig config;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& base) {
  const auto& g = base.sweep;
  auto axis = [](const std::vector<double>& v) { return v.empty() ? std::vector<std::optional<double>>{std::nullopt}
                                                                  : std::vector<std::optional<double>>(v.begin(), v.end()); };
  const auto Ts = axis(g.temperature), betas = axis(g.beta), etas = axis(g.eta);
  std::vector<std::optional<std::uint64_t>> seeds{std::nullopt};
  if (!g.seed.empty()) seeds.assign(g.seed.begin(), g.seed.end());

  std::vector<SweepCell> cells;
  for (const auto& T : Ts)
    for (const auto& b : betas)
      for (const auto& e : etas)
        for (const auto& sd : seeds) {
          SweepCell cell;
          cell.index = cells.size();
          cell.config = base;
          if (T) {
            cell.config.temperature = *T;
            cell.config.schedule.reset();
            cell.parameters["temperature"] = *T;
          }
          if (b) {
            if (base.field.value("kind", std::string()) == "linear") {
              const auto& B = base.field.at("B");
              std::vector<double> flat;
              if (B.front().is_array())
                for (const auto& row : B)
                  for (const auto& x : row) flat.push_back(x.get<double>() * *b);
              else
                for (const auto& x : B) flat.push_back(x.get<double>() * *b);
              cell.config.field = {{"kind", "linear"}, {"B", flat}};
            } else {
              cell.config.field = {{"kind", "rotational"}, {"beta", *b}};
            }
            cell.parameters["beta"] = *b;
          }
          if (e) {
            cell.config.eta = *e;
            cell.parameters["eta"] = *e;
          }
          if (sd) {
            cell.config.seed = *sd;
            cell.parameters["seed"] = *sd;
          }
          cells.push_back(std::move(cell));
        }
  return cells;
}

/// Runs one cell; failures are captured in the record instead of thrown.
inline json run_sweep_cell(const SweepCell& cell) {
  json rec{{"cell", cell.index}, {"parameters", cell.parameters}};
  const auto& c = cell.config;
  try {
    RunOutcome o;
    if (c.sweep.task == "simulate") {
      o = run_simulation(c).outcome;
    } else if (c.sweep.task == "prox-iterate") {
      o = run_prox(c).outcome;
    } else if (c.sweep.task == "reparameterization") {
      const auto r = resolve(c);
      IntegratorControls ctl = controls_of(c);
      const double dev = check_time_reparameterization(r.dynamics, r.scores, r.initial, r.schedule, c.horizon, ctl);
      o.status = dev < 1e-7 ? "within-tolerance" : "exceeds-tolerance";
      o.metrics = {{"max_deviation", dev}};
    } else if (c.sweep.task == "recurrence") {
      const auto r = resolve(c);
      IntegratorControls ctl = controls_of(c);
      const std::size_t n = std::max<std::size_t>(c.num_samples, 2000);
      ctl.sample_times.resize(n + 1);
      for (std::size_t k = 0; k <= n; ++k) ctl.sample_times[k] = c.horizon * double(k) / double(n);
      const auto tr = integrate_path(r.field, r.dynamics, r.initial, Temperature(r.schedule.at(0.0)), c.horizon, ctl);
      const auto rec_rep = detect_recurrence(tr);
      o.status = to_string(tr.status);
      o.diverged = tr.status == TerminalStatus::Diverged;
      o.metrics = {{"recurrent", rec_rep.recurrent ? 1.0 : 0.0},
                   {"first_return_time", rec_rep.first_return_time.value_or(std::numeric_limits<double>::quiet_NaN())},
                   {"return_distance", rec_rep.return_distance},
                   {"drift_per_cycle", rec_rep.drift_per_cycle},
                   {"curl_magnitude", is_conservative(r.field).curl_magnitude}};
      rec["recurrent"] = rec_rep.recurrent;
    } else {
      throw ConfigError("sweep.task", "expected simulate, prox-iterate, reparameterization or recurrence");
    }
    json metrics = json::object();
    for (const auto& [k, v] : o.metrics) metrics[k] = io::number_to_json(v);
    rec["ok"] = !o.diverged;
    rec["status"] = o.status;
    rec["metrics"] = std::move(metrics);
  } catch (const std::exception& e) {
    rec["ok"] = false;
    rec["status"] = "error";
    rec["error"] = e.what();
  }
  return rec;
}

inline int cmd_sweep(const ExperimentConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Stopwatch sw;
  const auto cells = sweep_cells(c);
  static const char* tasks[] = {"simulate", "prox-iterate", "reparameterization", "recurrence"};
  if (std::find(std::begin(tasks), std::end(tasks), c.sweep.task) == std::end(tasks))
    throw ConfigError("sweep.task", "expected simulate, prox-iterate, reparameterization or recurrence");
  // Validate the first cell eagerly so config mistakes surface as exit 2.
  (void)resolve(cells.front().config);

  std::vector<json> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) records[k] = run_sweep_cell(cells[k]);
  };
  const std::size_t nthreads = std::min(c.jobs, cells.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }

  std::size_t failed = 0;
  json arr = json::array();
  for (auto& r : records) {
    if (!r.value("ok", false)) ++failed;
    arr.push_back(std::move(r));
  }
  RunOutcome o;
  o.status = failed == 0 ? "completed" : "cell-failures";
  o.metrics = {{"cells", double(cells.size())}, {"failed_cells", double(failed)}};
  json body{{"task", c.sweep.task}, {"cells", std::move(arr)}};
  emit(c, body.dump(2) + "\n", make_manifest("sweep", c, o, sw.seconds()), out, err);
  if (failed == 0) return kSuccess;
  err << failed << " of " << cells.size() << " sweep cells failed\n";
  return kDiverged;
}

// --- verify ------------------------------------------------------------------------------

inline json expected_matrix(const std::vector<oracles::ClaimVerdict>& verdicts) {
  json arr = json::array();
  for (const auto& v : verdicts) arr.push_back({{"claim_id", v.claim_id}, {"dynamics", v.dynamics}, {"holds", v.holds}});
  return arr;
}

struct VerifyOptions {
  std::string write_expected;  // when set, write the matrix there instead of comparing
};

inline int cmd_verify(const ExperimentConfig& c, const VerifyOptions& vo = {}, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  Stopwatch sw;
  for (const auto& id : c.claims)
    if (!oracles::is_known_claim(id)) throw ConfigError("claims", "unknown claim id '" + id + "'");
  oracles::AdjudicationOptions opt;
  opt.seed = c.seed == 0 ? opt.seed : c.seed;
  opt.trials = c.verify_trials;
  opt.runs = c.verify_runs;
  opt.claims = c.claims;

  std::vector<oracles::ClaimVerdict> verdicts;
  try {
    verdicts = oracles::run_adjudication(opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OracleFailure) throw;
    err << "oracle failure: " << e.what() << '\n';
    return kOracleFailure;
  }

  if (!vo.write_expected.empty()) {
    std::ofstream f(vo.write_expected, std::ios::binary);
    if (!f) throw ConfigError("write-expected", "cannot write '" + vo.write_expected + "'");
    f << expected_matrix(verdicts).dump(2) << '\n';
  }

  json expected = json::array();
  {
    std::ifstream in(c.expected);
    if (!in) throw ConfigError("verify.expected", "cannot open '" + c.expected + "'");
    try {
      expected = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("verify.expected", e.what());
    }
  }

  std::size_t mismatches = 0;
  json report = json::array();
  char line[256];
  std::snprintf(line, sizeof line, "%-26s %-11s %-6s %-8s %s\n", "claim", "dynamics", "holds", "expected", "witness");
  out << line;
  for (const auto& v : verdicts) {
    std::optional<bool> want;
    for (const auto& e : expected)
      if (e.at("claim_id") == v.claim_id && e.at("dynamics") == v.dynamics) want = e.at("holds").get<bool>();
    const bool match = want && *want == v.holds;
    if (!match) ++mismatches;
    std::string wit;
    if (const auto* st = std::get_if<oracles::Statistic>(&v.witness))
      wit = st->name + "=" + io::format_double(st->value);
    else
      wit = "counterexample, measured=" + io::format_double(std::get<oracles::Counterexample>(v.witness).measured);
    std::snprintf(line, sizeof line, "%-26s %-11s %-6s %-8s %s\n", v.claim_id.c_str(), v.dynamics.c_str(),
                  v.holds ? "yes" : "no", want ? (*want ? "yes" : "no") : "?", wit.c_str());
    out << line;
    auto j = io::to_json(v);
    j["matches_expected"] = match;
    report.push_back(std::move(j));
  }

  RunOutcome o;
  o.status = mismatches == 0 ? "matches-expected" : "mismatch";
  o.metrics = {{"verdicts", double(verdicts.size())}, {"mismatches", double(mismatches)}};
  const auto manifest = make_manifest("verify", c, o, sw.seconds());
  if (!c.output.empty()) {
    std::ostringstream body;
    body << json{{"verdicts", report}}.dump(2) << '\n';
    std::ostringstream sink;
    emit(c, body.str(), manifest, sink, err);
  } else {
    err << io::serialize(manifest);
  }
  if (mismatches != 0) {
    err << mismatches << " verdict(s) differ from " << c.expected << '\n';
    return kOracleFailure;
  }
  return kSuccess;
}

}  // namespace simplexflow::cli

#endif  // SIMPLEXFLOW_EXPERIMENT_HPP
