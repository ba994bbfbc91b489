#ifndef SIMPLEXFLOW_PATH_FIELDS_HPP
#define SIMPLEXFLOW_PATH_FIELDS_HPP

// State-dependent scores s(p) = s0 + B p and the two phenomena they can
// produce on the simplex: recurrent loops (curl, B antisymmetric) and
// multi-basin lock-in (B symmetric with several local maxima of
// G(p) = <p, s0> + 1/2 <p, B p> + T H(p)).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replicator.hpp"
#include "simplex_core.hpp"

namespace simplexflow {

class ScoreField {
 public:
  enum class Kind { Constant, Linear };

  static ScoreField constant(ScoreVector s0) { return ScoreField(Kind::Constant, std::move(s0), Matrix(0)); }

  static ScoreField linear(ScoreVector s0, Matrix B) {
    if (B.n != s0.size()) throw Error(ErrorCode::InvalidInput, "B must be V x V");
    if (!detail::all_finite(B.data)) throw Error(ErrorCode::InvalidInput, "non-finite entry in B");
    return ScoreField(Kind::Linear, std::move(s0), std::move(B));
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return s0_.size(); }
  const ScoreVector& s0() const noexcept { return s0_; }
  /// Zero matrix for the constant kind.
  const Matrix& B() const noexcept { return B_; }
  /// Operator 2-norm of the Jacobian of s(p), i.e. ||B||_2.
  double lipschitz_bound() const noexcept { return lipschitz_; }

  bool has_coupling() const {
    if (kind_ == Kind::Constant) return false;
    for (double b : B_.data)
      if (b != 0.0) return true;
    return false;
  }

  std::vector<double> scores_at(std::span<const double> p) const {
    std::vector<double> s(s0_.vector());
    if (kind_ == Kind::Linear) {
      const std::size_t n = s.size();
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += B_(i, j) * p[j];
        s[i] += acc;
      }
    }
    return s;
  }
  ScoreVector scores_at(const SimplexPoint& p) const { return ScoreVector(scores_at(p.probs())); }

  ScoreField with_shifted_s0(double c) const {
    ScoreField f = *this;
    f.s0_ = s0_.shifted(c);
    return f;
  }

 private:
  ScoreField(Kind kind, ScoreVector s0, Matrix B) : kind_(kind), s0_(std::move(s0)), B_(std::move(B)) {
    if (kind_ == Kind::Constant) B_ = Matrix(s0_.size());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        B_.data.data(), static_cast<Eigen::Index>(B_.n), static_cast<Eigen::Index>(B_.n));
    lipschitz_ = B_.n == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  }

  Kind kind_;
  ScoreVector s0_;
  Matrix B_;
  double lipschitz_ = 0.0;
};

inline std::vector<double> eval_path_field(const ScoreField& field, FieldKind kind, const SimplexPoint& p, Temperature T) {
  return eval_field(kind, p, field.scores_at(p), T);
}

/// G(p) = <p, s0> + 1/2 <p, B p> + T H(p); reduces to the free energy when B = 0.
inline double generalized_free_energy(const ScoreField& field, const SimplexPoint& p, Temperature T) {
  const auto s = field.scores_at(p.probs());
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    lin += p[i] * field.s0()[i];
    quad += p[i] * (s[i] - field.s0()[i]);
  }
  return lin + 0.5 * quad + T.value() * entropy(p);
}

struct ConservativeReport {
  bool conservative = true;
  double curl_magnitude = 0.0;  // ||B - B^T||_F
};

/// A linear field s0 + B p is a gradient field exactly when B is symmetric.
inline ConservativeReport is_conservative(const ScoreField& field, double tolerance = 1e-12) {
  ConservativeReport r;
  const Matrix& B = field.B();
  double acc = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < B.n; ++i)
    for (std::size_t j = 0; j < B.n; ++j) {
      const double d = B(i, j) - B(j, i);
      acc += d * d;
      worst = std::max(worst, std::abs(d));
    }
  r.curl_magnitude = std::sqrt(acc);
  r.conservative = worst <= tolerance;
  return r;
}

namespace detail {

class PathFieldDynamics {
 public:
  PathFieldDynamics(FieldKind kind, const ScoreField& field, Temperature T) : kind_(kind), field_(field), T_(T) {}

  std::size_t size() const { return field_.size(); }
  bool entropic() const { return kind_ == FieldKind::EntropicReplicator; }
  double next_breakpoint(double) const { return std::numeric_limits<double>::infinity(); }

  void fitness(double, std::span<const double> p, std::span<const double> lp, std::span<double> g) const {
    const auto s = field_.scores_at(p);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p[i] <= 0.0) {
        g[i] = 0.0;
        continue;
      }
      g[i] = entropic() ? s[i] / T_.value() - std::max(lp[i], kLogClamp) : s[i] / T_.value();
    }
  }

  double free_energy(double, const SimplexPoint& p) const { return generalized_free_energy(field_, p, T_); }

  /// Entropic: D(p || softmax(s(p), T)) on the support, which vanishes exactly
  /// at rest points. Literal: no closed-form target.
  double kl_to_target(double, std::span<const double> p, std::span<const double> lp) const {
    if (!entropic()) return std::numeric_limits<double>::quiet_NaN();
    const auto s = field_.scores_at(p);
    std::vector<double> z;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (p[i] > 0.0) z.push_back(s[i] / T_.value());
    const double lse = log_sum_exp(z);
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (p[i] > 0.0) d += p[i] * (lp[i] - (s[i] / T_.value() - lse));
    return std::max(d, 0.0);
  }

 private:
  FieldKind kind_;
  const ScoreField& field_;
  Temperature T_;
};

}  // namespace detail

/// Integrates the replicator flow with state-dependent scores. Fields without
/// coupling are handed to the fixed-score integrator unchanged.
inline TrajectoryRecord integrate_path(const ScoreField& field, FieldKind kind, const SimplexPoint& p0, Temperature T,
                                       double horizon, const IntegratorControls& controls = {}) {
  if (p0.size() != field.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  if (!field.has_coupling())
    return integrate(kind, p0, field.s0(), TemperatureSchedule::constant(T.value()), horizon, controls);
  detail::PathFieldDynamics dyn(kind, field, T);
  return integrate_flow(dyn, p0, horizon, controls);
}

// --- recurrence -----------------------------------------------------------------

struct RecurrenceOptions {
  double delta = 1e-3;           // return radius
  double min_separation = 0.5;   // minimum loop duration
  double excursion_factor = 5.0; // path must leave a ball of excursion_factor * delta
};

struct RecurrenceReport {
  bool recurrent = false;
  std::optional<double> first_return_time;  // t2 - t1 of the detected loop
  std::optional<double> loop_start;         // t1
  double return_distance = std::numeric_limits<double>::infinity();
  double drift_per_cycle = 0.0;  // recorded free-energy change over the loop
};

namespace detail {
inline double dist_inf(const SimplexPoint& a, const SimplexPoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}
}  // namespace detail

/// Finds the first sampled pair (t1, t2), t2 - t1 >= min_separation, with
/// ||p(t2) - p(t1)||_inf <= delta after the path has left the ball of radius
/// excursion_factor * delta around p(t1). When nothing qualifies,
/// return_distance is the closest qualifying-excursion return seen.
inline RecurrenceReport detect_recurrence(const TrajectoryRecord& traj, const RecurrenceOptions& opt = {}) {
  if (traj.samples.size() < 2) throw Error(ErrorCode::InvalidInput, "recurrence needs at least two samples");
  RecurrenceReport r;
  const auto& S = traj.samples;
  const double ball = opt.excursion_factor * opt.delta;
  for (std::size_t i = 0; i + 1 < S.size(); ++i) {
    bool left = false;
    for (std::size_t j = i + 1; j < S.size(); ++j) {
      const double d = detail::dist_inf(S[j].p, S[i].p);
      if (d > ball) left = true;
      if (!left || S[j].t - S[i].t < opt.min_separation) continue;
      r.return_distance = std::min(r.return_distance, d);
      if (d <= opt.delta) {
        r.recurrent = true;
        r.return_distance = d;
        r.loop_start = S[i].t;
        r.first_return_time = S[j].t - S[i].t;
        r.drift_per_cycle = S[j].free_energy - S[i].free_energy;
        return r;
      }
    }
  }
  return r;
}

// --- lock-in ----------------------------------------------------------------------

struct Basin {
  SimplexPoint center{1.0};  // terminal point of the first member
  std::vector<std::size_t> members;
  std::vector<double> terminal_free_energy;
};

struct LockinReport {
  std::vector<Basin> basins;
  std::vector<std::size_t> diverged;
  std::vector<std::size_t> unconverged;  // reached the horizon; still clustered
};

/// Integrates every start and groups terminal points that lie within
/// cluster_radius (max-norm) of an existing basin center.
inline LockinReport lockin_probe(const ScoreField& field, FieldKind kind, std::span<const SimplexPoint> starts,
                                 Temperature T, double horizon, const IntegratorControls& controls = {},
                                 double cluster_radius = 1e-4) {
  LockinReport rep;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (!starts[k].is_interior()) throw Error(ErrorCode::NotInterior, "lock-in starts must be interior");
    const auto traj = integrate_path(field, kind, starts[k], T, horizon, controls);
    if (traj.status == TerminalStatus::Diverged) {
      rep.diverged.push_back(k);
      continue;
    }
    if (traj.status != TerminalStatus::Converged) rep.unconverged.push_back(k);
    const auto& end = traj.terminal();
    auto it = std::find_if(rep.basins.begin(), rep.basins.end(),
                           [&](const Basin& b) { return detail::dist_inf(b.center, end.p) <= cluster_radius; });
    if (it == rep.basins.end()) {
      rep.basins.push_back(Basin{end.p, {}, {}});
      it = std::prev(rep.basins.end());
    }
    it->members.push_back(k);
    it->terminal_free_energy.push_back(end.free_energy);
  }
  return rep;
}

/// Cyclic rock-paper-scissors coupling: B(i, i+1) = beta, B(i+1, i) = -beta.
inline Matrix cyclic_antisymmetric(std::size_t v, double beta) {
  Matrix B(v);
  for (std::size_t i = 0; i < v; ++i) {
    B(i, (i + 1) % v) += beta;
    B((i + 1) % v, i) -= beta;
  }
  return B;
}

}  // namespace simplexflow

#endif  // SIMPLEXFLOW_PATH_FIELDS_HPP
