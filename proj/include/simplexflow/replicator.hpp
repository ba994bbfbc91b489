#ifndef SIMPLEXFLOW_REPLICATOR_HPP
#define SIMPLEXFLOW_REPLICATOR_HPP

// Continuous-time replicator flows on the simplex.
//
// Both fields share the form X_i(p) = p_i (g_i - sum_j p_j g_j) for a fitness
// vector g:
//   LiteralReplicator   g_i = s_i / T
//   EntropicReplicator  g_i = (s_i - T log p_i) / T
// The literal field keeps every face invariant and drives interior starts to
// the argmax set of s. The entropic field is the Shahshahani gradient of the
// free energy and has softmax(s, T) as its only interior rest point.
//
// The integrator works in log coordinates y_i = log p_i, where the flow reads
// dy_i/dt = g_i - gbar. Each step is a Dormand-Prince 5(4) pair on y followed
// by a log-sum-exp renormalization, so positivity and normalization hold by
// construction. Coordinates that start at exactly zero are never touched.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mirror.hpp"
#include "simplex_core.hpp"

namespace simplexflow {

enum class FieldKind { LiteralReplicator, EntropicReplicator };

inline const char* to_string(FieldKind k) { return k == FieldKind::LiteralReplicator ? "literal" : "entropic"; }

// --- temperature schedules -----------------------------------------------------

struct EffectiveTime {
  double tau = 0.0;
};

/// Positive temperature as a function of time t >= 0.
class TemperatureSchedule {
 public:
  enum class Kind { Constant, PiecewiseConstant, Exponential };

  static TemperatureSchedule constant(double T) {
    TemperatureSchedule s;
    s.kind_ = Kind::Constant;
    s.values_ = {Temperature(T).value()};
    return s;
  }

  /// values[0] on [0, breakpoints[0]), values[j] on [breakpoints[j-1], breakpoints[j]), ...
  static TemperatureSchedule piecewise(std::vector<double> breakpoints, std::vector<double> values) {
    if (values.size() != breakpoints.size() + 1)
      throw Error(ErrorCode::InvalidInput, "piecewise schedule needs one more value than breakpoints");
    for (double v : values) (void)Temperature(v);
    for (std::size_t j = 0; j < breakpoints.size(); ++j) {
      if (!std::isfinite(breakpoints[j]) || breakpoints[j] <= (j == 0 ? 0.0 : breakpoints[j - 1]))
        throw Error(ErrorCode::InvalidInput, "breakpoints must be positive and strictly increasing");
    }
    TemperatureSchedule s;
    s.kind_ = Kind::PiecewiseConstant;
    s.breakpoints_ = std::move(breakpoints);
    s.values_ = std::move(values);
    return s;
  }

  /// T(t) = T0 exp(rate t); negative rates anneal.
  static TemperatureSchedule exponential(double T0, double rate) {
    if (!std::isfinite(rate)) throw Error(ErrorCode::InvalidInput, "non-finite schedule rate");
    TemperatureSchedule s;
    s.kind_ = Kind::Exponential;
    s.values_ = {Temperature(T0).value()};
    s.rate_ = rate;
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept {
    return kind_ == Kind::Constant || (kind_ == Kind::Exponential && rate_ == 0.0) ||
           (kind_ == Kind::PiecewiseConstant && breakpoints_.empty());
  }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double rate() const noexcept { return rate_; }

  double at(double t) const {
    switch (kind_) {
      case Kind::Constant: return values_[0];
      case Kind::PiecewiseConstant: {
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
      }
      case Kind::Exponential: return values_[0] * std::exp(rate_ * t);
    }
    return values_[0];
  }

  /// tau(t) = integral_0^t du / T(u), in closed form.
  double effective_time(double t) const {
    if (t < 0.0) throw Error(ErrorCode::InvalidInput, "effective time needs t >= 0");
    switch (kind_) {
      case Kind::Constant: return t / values_[0];
      case Kind::PiecewiseConstant: {
        double tau = 0.0, lo = 0.0;
        for (std::size_t j = 0; j < values_.size(); ++j) {
          const double hi = j < breakpoints_.size() ? breakpoints_[j] : std::numeric_limits<double>::infinity();
          if (t <= lo) break;
          tau += (std::min(t, hi) - lo) / values_[j];
          lo = hi;
        }
        return tau;
      }
      case Kind::Exponential:
        if (rate_ == 0.0) return t / values_[0];
        return -std::expm1(-rate_ * t) / (rate_ * values_[0]);
    }
    return 0.0;
  }

  /// First discontinuity strictly after t, or +inf.
  double next_breakpoint(double t) const {
    if (kind_ != Kind::PiecewiseConstant) return std::numeric_limits<double>::infinity();
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return it == breakpoints_.end() ? std::numeric_limits<double>::infinity() : *it;
  }

 private:
  Kind kind_ = Kind::Constant;
  std::vector<double> breakpoints_;
  std::vector<double> values_{1.0};
  double rate_ = 0.0;
};

inline EffectiveTime effective_time(const TemperatureSchedule& schedule, double t) {
  return {schedule.effective_time(t)};
}

// --- fields ------------------------------------------------------------------

namespace detail {
// X_i = p_i (g_i - gbar) with gbar over the support; mean is removed before scaling.
inline std::vector<double> field_from_fitness(std::span<const double> p, std::span<const double> g) {
  double gbar = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) gbar += p[i] * g[i];
  std::vector<double> x(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) x[i] = p[i] * (g[i] - gbar);
  return x;
}

inline double norm2(std::span<const double> v) {
  double a = 0.0;
  for (double x : v) a += x * x;
  return std::sqrt(a);
}
}  // namespace detail

/// Evaluates the chosen replicator field at p. The entropic field needs an
/// interior point (log p enters the fitness).
inline std::vector<double> eval_field(FieldKind kind, const SimplexPoint& p, const ScoreVector& s, Temperature T) {
  if (p.size() != s.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  std::vector<double> g(s.size());
  if (kind == FieldKind::LiteralReplicator) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = s[i];
  } else {
    if (!p.is_interior()) throw Error(ErrorCode::NotInterior, "entropic field is singular on the boundary");
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = s[i] - T.value() * std::log(p[i]);
  }
  auto x = detail::field_from_fitness(p.probs(), g);
  for (double& v : x) v /= T.value();
  return x;
}

// --- trajectories -------------------------------------------------------------

enum class TerminalStatus { Converged, MaxTime, Diverged };

inline const char* to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::Converged: return "converged";
    case TerminalStatus::MaxTime: return "max-time";
    case TerminalStatus::Diverged: return "diverged";
  }
  return "unknown";
}

struct TrajectorySample {
  double t = 0.0;
  SimplexPoint p{1.0};
  double free_energy = 0.0;
  double kl_to_target = 0.0;  // NaN when the flow has no known target
  double field_norm = 0.0;    // Euclidean norm of X(p)
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  TerminalStatus status = TerminalStatus::MaxTime;
  std::string diagnostic;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t renormalizations = 0;  // steps whose log-sum-exp drift exceeded kNormTolerance
  double terminal_time = 0.0;

  const TrajectorySample& terminal() const { return samples.back(); }
};

struct IntegratorControls {
  double dt0 = 1e-2;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double convergence_kl = 1e-10;
  // Used instead of convergence_kl when the flow has no known target.
  double stationary_field_tol = 1e-12;
  bool stop_on_convergence = true;
  std::size_t num_samples = 200;
  // Explicit sample times (strictly increasing, >= 0); overrides the geometric grid.
  std::vector<double> sample_times;
  std::size_t max_steps = 5'000'000;
};

/// Default sampling cadence: t = 0 plus a geometric grid ending at the horizon.
inline std::vector<double> geometric_sample_times(double first, double horizon, std::size_t n) {
  std::vector<double> ts{0.0};
  if (n < 2 || !(horizon > 0.0)) return ts;
  first = std::min(first, horizon);
  if (n == 2) {
    ts.push_back(horizon);
    return ts;
  }
  const double ratio = std::log(horizon / first) / double(n - 2);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double t = (k + 2 == n) ? horizon : first * std::exp(ratio * double(k));
    if (t > ts.back()) ts.push_back(t);
  }
  return ts;
}

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  };
  // 5th-order weights minus embedded 4th-order weights.
  static constexpr std::array<double, 7> e{71.0 / 57600,  0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                           22.0 / 525, -1.0 / 40};
};

inline constexpr double kLogClamp = -690.7755278982137;  // log(1e-300)

}  // namespace detail

/// Integrates a replicator-type flow described by `dyn`:
///   dyn.size()                              -> V
///   dyn.fitness(t, p, logp, g)              -> fills g on the support of p
///   dyn.free_energy(t, SimplexPoint)        -> value recorded per sample
///   dyn.kl_to_target(t, p, logp)            -> divergence to the known limit, NaN if none
///   dyn.next_breakpoint(t)                  -> next discontinuity in time, +inf if none
///   dyn.entropic()                          -> whether log p enters the fitness
template <class Dynamics>
TrajectoryRecord integrate_flow(const Dynamics& dyn, const SimplexPoint& p0, double horizon,
                                const IntegratorControls& ctl = {}) {
  using DP = detail::DormandPrince;
  const std::size_t V = p0.size();
  if (V != dyn.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidInput, "horizon must be finite and >= 0");
  if (!(ctl.dt0 > 0.0) || !(ctl.rel_tol > 0.0) || !(ctl.abs_tol >= 0.0))
    throw Error(ErrorCode::InvalidInput, "integrator controls must be positive");

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < V; ++i)
    if (p0[i] > 0.0) active.push_back(i);
  const std::size_t m = active.size();

  std::vector<double> times = ctl.sample_times.empty() ? geometric_sample_times(ctl.dt0, horizon, ctl.num_samples)
                                                       : ctl.sample_times;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1])))
      throw Error(ErrorCode::InvalidInput, "sample times must be nonnegative and strictly increasing");
  if (times.empty() || times.front() > 0.0) times.insert(times.begin(), 0.0);
  while (times.size() > 1 && times.back() > horizon) times.pop_back();

  // Full-length scratch buffers handed to the dynamics.
  std::vector<double> p_full(V, 0.0), lp_full(V, -std::numeric_limits<double>::infinity()), g_full(V, 0.0);

  std::vector<double> y(m);
  for (std::size_t a = 0; a < m; ++a) y[a] = std::log(p0[active[a]]);

  auto normalize = [&](std::vector<double>& v) {
    const double lse = detail::log_sum_exp(v);
    for (double& x : v) x -= lse;
    return lse;
  };
  normalize(y);

  auto load = [&](const std::vector<double>& ya) {
    for (std::size_t a = 0; a < m; ++a) {
      lp_full[active[a]] = ya[a];
      p_full[active[a]] = std::exp(ya[a]);
    }
  };

  // dy/dt on the support; gbar is taken with the current normalization.
  auto rhs = [&](double t, const std::vector<double>& ya, std::vector<double>& out) {
    std::vector<double> yn = ya;
    normalize(yn);
    load(yn);
    dyn.fitness(t, std::span<const double>(p_full), std::span<const double>(lp_full), std::span<double>(g_full));
    double gbar = 0.0;
    for (std::size_t a = 0; a < m; ++a) gbar += p_full[active[a]] * g_full[active[a]];
    for (std::size_t a = 0; a < m; ++a) out[a] = g_full[active[a]] - gbar;
  };

  TrajectoryRecord rec;
  double t = 0.0;

  auto make_sample = [&](double ts) {
    load(y);
    TrajectorySample smp;
    smp.t = ts;
    smp.p = SimplexPoint(p_full);
    smp.free_energy = dyn.free_energy(ts, smp.p);
    smp.kl_to_target = dyn.kl_to_target(ts, std::span<const double>(p_full), std::span<const double>(lp_full));
    dyn.fitness(ts, std::span<const double>(p_full), std::span<const double>(lp_full), std::span<double>(g_full));
    smp.field_norm = detail::norm2(detail::field_from_fitness(p_full, g_full));
    return smp;
  };
  auto converged = [&](const TrajectorySample& smp) {
    if (!ctl.stop_on_convergence) return false;
    if (std::isfinite(smp.kl_to_target)) return smp.kl_to_target < ctl.convergence_kl;
    return smp.field_norm < ctl.stationary_field_tol;
  };

  rec.samples.push_back(make_sample(0.0));
  std::size_t next_sample = 1;
  if (converged(rec.samples.back()) || m <= 1) {
    rec.status = TerminalStatus::Converged;
    if (m > 1) rec.diagnostic = "started at the target";
    else rec.diagnostic = "single-vertex support is stationary";
    return rec;
  }

  const double t_end = times.back() < horizon && ctl.sample_times.empty() ? horizon : times.back();
  std::array<std::vector<double>, 7> k;
  for (auto& ki : k) ki.assign(m, 0.0);
  std::vector<double> ystage(m), ynew(m);
  rhs(t, y, k[0]);
  double h = ctl.dt0;

  while (t < t_end) {
    if (rec.accepted_steps + rec.rejected_steps >= ctl.max_steps) {
      rec.status = TerminalStatus::Diverged;
      rec.diagnostic = "step budget exhausted at t=" + std::to_string(t);
      break;
    }
    const double target = next_sample < times.size() ? times[next_sample] : t_end;
    const double stop = std::min(target, dyn.next_breakpoint(t));
    const bool clipped = t + h >= stop;
    const double hs = clipped ? stop - t : h;
    if (hs <= 1e-14 * std::max(1.0, std::abs(t))) {
      if (clipped) {  // sample time coincides with current t up to rounding
        t = stop;
      } else {
        rec.status = TerminalStatus::Diverged;
        rec.diagnostic = "step size underflow at t=" + std::to_string(t);
        break;
      }
    } else {
      for (std::size_t st = 1; st < 7; ++st) {
        for (std::size_t a = 0; a < m; ++a) {
          double acc = y[a];
          for (std::size_t j = 0; j < st; ++j) acc += hs * DP::a[st][j] * k[j][a];
          ystage[a] = acc;
        }
        rhs(t + DP::c[st] * hs, ystage, k[st]);
      }
      ynew = ystage;  // stage 7 point is the 5th-order solution (FSAL)

      // Error in p-space: constant shifts of log p are irrelevant after normalization.
      double err = 0.0;
      {
        std::vector<double> e(m);
        double ebar = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
          double acc = 0.0;
          for (std::size_t j = 0; j < 7; ++j) acc += DP::e[j] * k[j][a];
          e[a] = hs * acc;
          ebar += std::exp(y[a]) * e[a];
        }
        for (std::size_t a = 0; a < m; ++a) {
          const double pa = std::exp(y[a]);
          const double sc = ctl.abs_tol + ctl.rel_tol * pa;
          err = std::max(err, pa * std::abs(e[a] - ebar) / sc);
        }
      }
      if (!std::isfinite(err)) err = 1e10;

      if (err <= 1.0) {
        t = clipped ? stop : t + hs;
        const double shift = normalize(ynew);
        if (std::abs(std::expm1(shift)) > kNormTolerance) ++rec.renormalizations;
        y.swap(ynew);
        k[0] = k[6];
        ++rec.accepted_steps;
        const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
        if (!clipped || hs >= h) h = hs * grow;
        if (dyn.entropic() && *std::min_element(y.begin(), y.end()) < detail::kLogClamp) {
          rec.status = TerminalStatus::Diverged;
          rec.diagnostic = "log-probability fell below log(1e-300) at t=" + std::to_string(t);
          rec.samples.push_back(make_sample(t));
          break;
        }
      } else {
        ++rec.rejected_steps;
        h = hs * std::max(0.2, 0.9 * std::pow(err, -0.2));
        continue;
      }
    }

    const bool at_sample = next_sample < times.size() && t >= times[next_sample];
    bool done = false;
    if (at_sample || t >= t_end) {
      rec.samples.push_back(make_sample(t));
      ++next_sample;
      done = converged(rec.samples.back());
    } else if (ctl.stop_on_convergence) {
      auto smp = make_sample(t);
      if (converged(smp)) {
        rec.samples.push_back(std::move(smp));
        done = true;
      }
    }
    if (done) {
      rec.status = TerminalStatus::Converged;
      break;
    }
  }
  if (rec.status != TerminalStatus::Converged && rec.status != TerminalStatus::Diverged)
    rec.status = TerminalStatus::MaxTime;
  rec.terminal_time = rec.samples.back().t;
  return rec;
}

namespace detail {

// Fixed scores under a temperature schedule, restricted to the support of p0.
class FixedScoreDynamics {
 public:
  FixedScoreDynamics(FieldKind kind, const ScoreVector& s, const TemperatureSchedule& schedule, const SimplexPoint& p0)
      : kind_(kind), s_(s), schedule_(schedule), support_(p0.size()) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p0.size(); ++i) {
      support_[i] = p0[i] > 0.0;
      if (support_[i]) best = std::max(best, s[i]);
    }
    // Literal target: argmax set with the initial within-set ratios frozen.
    double mass = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i)
      if (support_[i] && s[i] == best) mass += p0[i];
    literal_target_.assign(p0.size(), 0.0);
    for (std::size_t i = 0; i < p0.size(); ++i)
      if (support_[i] && s[i] == best) literal_target_[i] = p0[i] / mass;
  }

  std::size_t size() const { return s_.size(); }
  bool entropic() const { return kind_ == FieldKind::EntropicReplicator; }
  double next_breakpoint(double t) const { return schedule_.next_breakpoint(t); }

  void fitness(double t, std::span<const double> p, std::span<const double> lp, std::span<double> g) const {
    const double T = schedule_.at(t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p[i] <= 0.0 && !support_[i]) {
        g[i] = 0.0;
        continue;
      }
      g[i] = entropic() ? s_[i] / T - std::max(lp[i], kLogClamp) : s_[i] / T;
    }
  }

  double free_energy(double t, const SimplexPoint& p) const {
    return simplexflow::free_energy(p, s_, Temperature(schedule_.at(t))).value;
  }

  /// Entropic: D(p || softmax on the support). Literal: D(target || p), target on the argmax set.
  double kl_to_target(double t, std::span<const double> p, std::span<const double> lp) const {
    if (entropic()) {
      const double T = schedule_.at(t);
      std::vector<double> z;
      for (std::size_t i = 0; i < s_.size(); ++i)
        if (support_[i]) z.push_back(s_[i] / T);
      const double lse = log_sum_exp(z);
      double d = 0.0;
      for (std::size_t i = 0; i < s_.size(); ++i)
        if (support_[i] && p[i] > 0.0) d += p[i] * (lp[i] - (s_[i] / T - lse));
      return std::max(d, 0.0);
    }
    double d = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i)
      if (literal_target_[i] > 0.0) d += literal_target_[i] * (std::log(literal_target_[i]) - lp[i]);
    return std::max(d, 0.0);
  }

 private:
  FieldKind kind_;
  const ScoreVector& s_;
  const TemperatureSchedule& schedule_;
  std::vector<bool> support_;
  std::vector<double> literal_target_;
};

}  // namespace detail

/// Integrates the chosen field from p0 under a temperature schedule. Zero
/// coordinates of p0 stay exactly zero (the run lives on that face).
inline TrajectoryRecord integrate(FieldKind kind, const SimplexPoint& p0, const ScoreVector& s,
                                  const TemperatureSchedule& schedule, double horizon,
                                  const IntegratorControls& controls = {}) {
  if (p0.size() != s.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  detail::FixedScoreDynamics dyn(kind, s, schedule, p0);
  return integrate_flow(dyn, p0, horizon, controls);
}

// --- temperature as time -------------------------------------------------------

namespace detail {

// max_k || p(t_k) - p~(tau(t_k)) ||_inf between the scheduled run and the
// unit-temperature run, on a uniform grid of t. Works for any field so the
// entropic failure of the identity can be measured too.
inline double reparameterization_deviation(FieldKind kind, const ScoreVector& s, const SimplexPoint& p0,
                                           const TemperatureSchedule& schedule, double horizon,
                                           IntegratorControls controls, std::size_t grid = 101) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidInput, "horizon must be positive");
  std::vector<double> ts(grid), taus(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    ts[k] = horizon * double(k) / double(grid - 1);
    taus[k] = schedule.effective_time(ts[k]);
  }
  controls.stop_on_convergence = false;
  controls.sample_times = ts;
  const auto a = integrate(kind, p0, s, schedule, horizon, controls);
  controls.sample_times = taus;
  const auto unit = TemperatureSchedule::constant(1.0);
  const auto b = integrate(kind, p0, s, unit, taus.back(), controls);
  if (a.samples.size() != grid || b.samples.size() != grid) return std::numeric_limits<double>::infinity();
  double dev = 0.0;
  for (std::size_t k = 0; k < grid; ++k)
    for (std::size_t i = 0; i < s.size(); ++i)
      dev = std::max(dev, std::abs(a.samples[k].p[i] - b.samples[k].p[i]));
  return dev;
}

}  // namespace detail

/// Checks p(t) = p~(tau(t)) for the literal field, where p~ runs at unit
/// temperature. Returns the max-norm deviation over a uniform grid of t.
inline double check_time_reparameterization(FieldKind kind, const ScoreVector& s, const SimplexPoint& p0,
                                            const TemperatureSchedule& schedule, double horizon,
                                            const IntegratorControls& controls = {}) {
  if (kind != FieldKind::LiteralReplicator)
    throw Error(ErrorCode::UnsupportedIdentity,
                "time reparameterization is exact only when T enters the field as a pure 1/T prefactor");
  return detail::reparameterization_deviation(kind, s, p0, schedule, horizon, controls);
}

// --- monitors --------------------------------------------------------------------

struct LyapunovReport {
  bool monotone = true;
  double worst_drop = 0.0;  // smallest consecutive difference F(k+1) - F(k)
};

inline LyapunovReport lyapunov_report(const TrajectoryRecord& traj, const ScoreVector& s, Temperature T,
                                      double tolerance = 1e-9) {
  LyapunovReport r;
  if (traj.samples.size() < 2) return r;
  r.worst_drop = std::numeric_limits<double>::infinity();
  double prev = free_energy(traj.samples.front().p, s, T).value;
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const double f = free_energy(traj.samples[k].p, s, T).value;
    r.worst_drop = std::min(r.worst_drop, f - prev);
    prev = f;
  }
  r.monotone = r.worst_drop >= -tolerance;
  return r;
}

struct EulerConsistency {
  std::vector<double> etas;
  std::vector<double> residuals;
  double order = 0.0;  // least-squares slope of log r vs log eta; +inf if every residual is 0
};

/// r(eta) = || (step(p, eta) - p)/eta - X(p) ||_inf along a ladder of eta.
/// Literal pairs the printed MW step with the literal field. Entropic pairs the
/// exact prox step, taken with step eta/T so both sides share the field's
/// clock, with the entropic field.
inline EulerConsistency euler_consistency(const SimplexPoint& p, const ScoreVector& s, Temperature T,
                                          std::span<const double> etas,
                                          FieldKind kind = FieldKind::LiteralReplicator) {
  if (!p.is_interior()) throw Error(ErrorCode::NotInterior, "euler consistency needs an interior point");
  const auto x = eval_field(kind, p, s, T);
  EulerConsistency out;
  std::vector<double> lx, ly;
  for (double eta : etas) {
    const auto q = kind == FieldKind::LiteralReplicator ? printed_mw_step(p, s, T, StepSize(eta))
                                                        : exact_prox_step(p, s, T, StepSize(eta / T.value()));
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) r = std::max(r, std::abs((q[i] - p[i]) / eta - x[i]));
    out.etas.push_back(eta);
    out.residuals.push_back(r);
    if (r > 0.0) {
      lx.push_back(std::log(eta));
      ly.push_back(std::log(r));
    }
  }
  if (lx.size() < 2) {
    out.order = std::numeric_limits<double>::infinity();
    return out;
  }
  const double n = double(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  out.order = sxy / sxx;
  return out;
}

}  // namespace simplexflow

#endif  // SIMPLEXFLOW_REPLICATOR_HPP
