#ifndef SIMPLEXFLOW_IO_HPP
#define SIMPLEXFLOW_IO_HPP

// Serialization: JSON for values, manifests and verdicts; CSV for per-sample
// and per-step tables. Doubles are written with 17 significant digits.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "mirror.hpp"
#include "oracles.hpp"
#include "path_fields.hpp"
#include "replicator.hpp"
#include "simplex_core.hpp"

namespace simplexflow::io {

using nlohmann::json;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Non-finite doubles become the strings "nan", "inf", "-inf".
inline json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::InvalidInput, "expected a number, got " + j.dump());
}

inline std::vector<double> doubles_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidInput, "expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(number_from_json(x));
  return v;
}

// --- values -----------------------------------------------------------------------

inline json to_json(const ScoreVector& s) { return s.vector(); }
inline ScoreVector score_vector_from_json(const json& j) { return ScoreVector(doubles_from_json(j)); }

inline json to_json(const SimplexPoint& p) { return p.vector(); }
inline SimplexPoint simplex_point_from_json(const json& j) { return SimplexPoint(doubles_from_json(j)); }

/// {"kind": "constant"|"linear", "s0": [...], "B": [row-major, V*V]}.
inline json to_json(const ScoreField& f) {
  json j{{"kind", f.kind() == ScoreField::Kind::Constant ? "constant" : "linear"}, {"s0", f.s0().vector()}};
  if (f.kind() == ScoreField::Kind::Linear) j["B"] = f.B().data;
  return j;
}

inline Matrix matrix_from_json(const json& j, std::size_t n) {
  Matrix B(n);
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    if (j.size() != n) throw Error(ErrorCode::InvalidInput, "B must have V rows");
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = doubles_from_json(j[i]);
      if (row.size() != n) throw Error(ErrorCode::InvalidInput, "B rows must have V entries");
      for (std::size_t k = 0; k < n; ++k) B(i, k) = row[k];
    }
    return B;
  }
  auto flat = doubles_from_json(j);
  if (flat.size() != n * n) throw Error(ErrorCode::InvalidInput, "B must have V*V entries");
  B.data = std::move(flat);
  return B;
}

inline ScoreField score_field_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  auto s0 = score_vector_from_json(j.at("s0"));
  if (kind == "constant") return ScoreField::constant(std::move(s0));
  if (kind == "linear") {
    const auto n = s0.size();
    return ScoreField::linear(std::move(s0), matrix_from_json(j.at("B"), n));
  }
  throw Error(ErrorCode::InvalidInput, "unknown field kind '" + kind + "'");
}

// --- tables -----------------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& traj, std::size_t V) {
  os << "t";
  for (std::size_t i = 1; i <= V; ++i) os << ",p_" << i;
  os << ",free_energy,kl_to_target,field_norm\n";
  for (const auto& smp : traj.samples) {
    os << format_double(smp.t);
    for (std::size_t i = 0; i < V; ++i) os << ',' << format_double(smp.p[i]);
    os << ',' << format_double(smp.free_energy) << ',' << format_double(smp.kl_to_target) << ','
       << format_double(smp.field_norm) << '\n';
  }
}

inline json trajectory_to_json(const TrajectoryRecord& traj) {
  json rows = json::array();
  for (const auto& smp : traj.samples)
    rows.push_back({{"t", smp.t},
                    {"p", smp.p.vector()},
                    {"free_energy", number_to_json(smp.free_energy)},
                    {"kl_to_target", number_to_json(smp.kl_to_target)},
                    {"field_norm", number_to_json(smp.field_norm)}});
  return {{"status", to_string(traj.status)},
          {"diagnostic", traj.diagnostic},
          {"accepted_steps", traj.accepted_steps},
          {"rejected_steps", traj.rejected_steps},
          {"samples", std::move(rows)}};
}

inline void write_prox_csv(std::ostream& os, const MirrorRun& run, std::size_t V) {
  os << "step";
  for (std::size_t i = 1; i <= V; ++i) os << ",p_" << i;
  os << ",free_energy,kl_step,kl_to_softmax,ascent_slack\n";
  for (const auto& smp : run.samples) {
    os << smp.step;
    for (std::size_t i = 0; i < V; ++i) os << ',' << (smp.p ? format_double((*smp.p)[i]) : std::string("nan"));
    os << ',' << format_double(smp.free_energy) << ',' << format_double(smp.kl_step) << ','
       << format_double(smp.kl_to_softmax) << ',' << format_double(smp.certificate.slack) << '\n';
  }
}

inline json prox_to_json(const MirrorRun& run) {
  json rows = json::array();
  for (const auto& smp : run.samples) {
    json r{{"step", smp.step},
           {"free_energy", number_to_json(smp.free_energy)},
           {"kl_step", number_to_json(smp.kl_step)},
           {"kl_to_softmax", number_to_json(smp.kl_to_softmax)},
           {"ascent_slack", number_to_json(smp.certificate.slack)}};
    if (smp.p) r["p"] = smp.p->vector();
    rows.push_back(std::move(r));
  }
  return {{"kind", to_string(run.kind)}, {"status", to_string(run.status)}, {"steps", run.steps}, {"samples", rows}};
}

// --- verdicts -----------------------------------------------------------------------

inline json to_json(const oracles::ClaimVerdict& v) {
  json j{{"claim_id", v.claim_id}, {"dynamics", v.dynamics}, {"holds", v.holds}, {"tolerance", v.tolerance}};
  if (const auto* st = std::get_if<oracles::Statistic>(&v.witness)) {
    j["witness"] = {{"type", "statistic"}, {"name", st->name}, {"value", number_to_json(st->value)}, {"trials", st->trials}};
  } else {
    const auto& c = std::get<oracles::Counterexample>(v.witness);
    j["witness"] = {{"type", "counterexample"}, {"description", c.description}, {"point", c.point},
                    {"scores", c.scores},       {"temperature", c.temperature}, {"measured", number_to_json(c.measured)}};
  }
  return j;
}

// --- manifests ------------------------------------------------------------------------

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical (key-sorted, compact) JSON rendering.
inline std::string config_hash(const json& canonical_config) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config.dump())));
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  double wall_clock_seconds = 0.0;
  std::string terminal_status;
  std::map<std::string, double> metrics;

  bool operator==(const RunManifest& o) const {
    if (std::tie(command, config_hash, seed, tool_version, terminal_status) !=
        std::tie(o.command, o.config_hash, o.seed, o.tool_version, o.terminal_status))
      return false;
    if (format_double(wall_clock_seconds) != format_double(o.wall_clock_seconds)) return false;
    if (metrics.size() != o.metrics.size()) return false;
    for (const auto& [k, v] : metrics) {
      const auto it = o.metrics.find(k);
      if (it == o.metrics.end() || format_double(v) != format_double(it->second)) return false;
    }
    return true;
  }
};

inline json to_json(const RunManifest& m) {
  json metrics = json::object();
  for (const auto& [k, v] : m.metrics) metrics[k] = number_to_json(v);
  return {{"command", m.command},
          {"config_hash", m.config_hash},
          {"seed", m.seed},
          {"tool_version", m.tool_version},
          {"wall_clock_seconds", m.wall_clock_seconds},
          {"terminal_status", m.terminal_status},
          {"metrics", std::move(metrics)}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.wall_clock_seconds = number_from_json(j.at("wall_clock_seconds"));
  m.terminal_status = j.at("terminal_status").get<std::string>();
  for (const auto& [k, v] : j.at("metrics").items()) m.metrics[k] = number_from_json(v);
  return m;
}

inline std::string serialize(const RunManifest& m) { return to_json(m).dump(2) + "\n"; }
inline RunManifest parse_manifest(const std::string& text) { return manifest_from_json(json::parse(text)); }

}  // namespace simplexflow::io

#endif  // SIMPLEXFLOW_IO_HPP
