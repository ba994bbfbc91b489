#ifndef SIMPLEXFLOW_ORACLES_HPP
#define SIMPLEXFLOW_ORACLES_HPP

// Independent checks for the rest of the library: finite differences, a
// numerical maximizer for the prox objective, the closed-form literal flow,
// reproducible random instances, and the runner that turns all of it into a
// matrix of claim verdicts.
//
// Nothing here calls into the code paths it certifies except through their
// public results; the oracles keep their own long-double log-sum-exp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mirror.hpp"
#include "path_fields.hpp"
#include "replicator.hpp"
#include "simplex_core.hpp"

namespace simplexflow::oracles {

// --- finite differences ---------------------------------------------------------

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

inline std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> x, double step = 1e-5) {
  std::vector<double> xp(x.begin(), x.end()), g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = xp[i];
    xp[i] = xi + step;
    const double fp = f(xp);
    xp[i] = xi - step;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Column j holds the central difference of F along e_j.
inline Matrix fd_jacobian(const VectorFn& F, std::span<const double> x, double step = 1e-5) {
  std::vector<double> xp(x.begin(), x.end());
  Matrix J(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = xp[j];
    xp[j] = xj + step;
    const auto fp = F(xp);
    xp[j] = xj - step;
    const auto fm = F(xp);
    xp[j] = xj;
    for (std::size_t i = 0; i < x.size(); ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * step);
  }
  return J;
}

/// Richardson estimate of the truncation error of fd_gradient at `step`:
/// ||g(2h) - g(h)||_inf / 3. Throws OracleFailure if it exceeds `budget`.
inline double fd_richardson_check(const ScalarFn& f, std::span<const double> x, double step, double budget) {
  const auto g1 = fd_gradient(f, x, step);
  const auto g2 = fd_gradient(f, x, 2.0 * step);
  double e = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) e = std::max(e, std::abs(g2[i] - g1[i]) / 3.0);
  if (!(e <= budget))
    throw Error(ErrorCode::OracleFailure, "finite-difference Richardson estimate " + std::to_string(e) +
                                              " exceeds budget " + std::to_string(budget));
  return e;
}

// --- closed forms -----------------------------------------------------------------

namespace detail {
inline long double lse_ld(std::span<const long double> v) {
  long double m = -std::numeric_limits<long double>::infinity();
  for (auto x : v) m = std::max(m, x);
  long double acc = 0.0L;
  for (auto x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}
}  // namespace detail

/// Literal flow with constant scores and temperature: p_i(t) ∝ p_i(0) exp(s_i t / T).
/// Evaluated in extended precision.
inline SimplexPoint closed_form_literal(const SimplexPoint& p0, const ScoreVector& s, Temperature T, double t) {
  std::vector<long double> l(p0.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    l[i] = p0[i] > 0.0 ? std::log(static_cast<long double>(p0[i])) +
                             static_cast<long double>(s[i]) * static_cast<long double>(t) / T.value()
                       : -std::numeric_limits<long double>::infinity();
  const long double z = detail::lse_ld(l);
  std::vector<double> p(l.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(std::exp(l[i] - z));
  return SimplexPoint(std::move(p));
}

/// Central-difference Jacobian of softmax(., T) in extended precision. In double,
/// a coordinate near 1 loses its low bits and the quotient by 2*step amplifies
/// that to about eps/step, which swamps tiny Hessian entries.
inline Matrix fd_softmax_jacobian(const ScoreVector& s, Temperature T, double step = 1e-5) {
  const std::size_t v = s.size();
  const long double Tl = T.value();
  std::vector<long double> x(v);
  for (std::size_t i = 0; i < v; ++i) x[i] = s[i];
  auto probs = [&](std::vector<long double>& out) {
    std::vector<long double> l(v);
    for (std::size_t i = 0; i < v; ++i) l[i] = x[i] / Tl;
    const long double z = detail::lse_ld(l);
    for (std::size_t i = 0; i < v; ++i) out[i] = std::exp(l[i] - z);
  };
  Matrix J(v);
  std::vector<long double> fp(v), fm(v);
  for (std::size_t j = 0; j < v; ++j) {
    const long double xj = x[j];
    x[j] = xj + step;
    probs(fp);
    x[j] = xj - step;
    probs(fm);
    x[j] = xj;
    for (std::size_t i = 0; i < v; ++i) J(i, j) = static_cast<double>((fp[i] - fm[i]) / (2.0L * step));
  }
  return J;
}

// --- prox objective -------------------------------------------------------------------

/// <q,s> + T H(q) - D(q||p)/eta.
inline double prox_objective(const SimplexPoint& q, const SimplexPoint& p, const ScoreVector& s, Temperature T,
                             StepSize eta) {
  double v = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    const double lq = std::log(q[i]);
    v += q[i] * s[i] - T.value() * q[i] * lq - q[i] * (lq - std::log(p[i])) / eta.value();
  }
  return v;
}

/// Maximizes the prox objective numerically by Gauss-Southwell pairwise
/// exchange: move mass between the coordinates with the largest and smallest
/// partial derivative, with an exact bisection line search, until the
/// partials agree (the KKT condition on the simplex).
inline SimplexPoint prox_objective_maximizer(const SimplexPoint& p, const ScoreVector& s, Temperature T, StepSize eta,
                                             std::size_t max_iter = 2'000'000) {
  if (!p.is_interior()) throw Error(ErrorCode::NotInterior, "prox oracle needs an interior point");
  const std::size_t n = p.size();
  const double Tv = T.value(), ie = 1.0 / eta.value();
  std::vector<double> q(p.vector()), lp(n);
  for (std::size_t i = 0; i < n; ++i) lp[i] = std::log(p[i]);

  auto partial = [&](std::size_t i, double qi) { return s[i] - Tv * (1.0 + std::log(qi)) - ie * (std::log(qi) - lp[i] + 1.0); };

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(s[i]) + ie * std::abs(lp[i]));
  std::vector<double> g(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    double lqmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = partial(i, q[i]);
      lqmax = std::max(lqmax, std::abs(std::log(q[i])));
    }
    const auto hi = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    const auto lo = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
    const double tol = 1e-13 * (scale + (Tv + ie) * (1.0 + lqmax));
    if (g[hi] - g[lo] <= tol) return SimplexPoint(q);

    // Shift mass u * q[lo] from lo to hi; the directional derivative decreases in u.
    const double qh = q[hi], ql = q[lo];
    auto dir = [&](double u) { return partial(hi, qh + u * ql) - partial(lo, ql * (1.0 - u)); };
    double a = 0.0, b = 1.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      (dir(mid) > 0.0 ? a : b) = mid;
    }
    const double u = 0.5 * (a + b);
    q[hi] = qh + u * ql;
    q[lo] = ql * (1.0 - u);
  }
  throw Error(ErrorCode::OracleFailure, "prox maximizer did not reach tolerance");
}

// --- random instances -------------------------------------------------------------------

/// Reproducible instance source: scores i.i.d. U[-3, 3], temperatures
/// log-uniform on [0.25, 4], interior points Dirichlet(1).
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return rng_; }

  static constexpr std::size_t kSizes[] = {2, 3, 8, 64, 1000};

  std::size_t size_from(std::span<const std::size_t> sizes) {
    return sizes[std::uniform_int_distribution<std::size_t>(0, sizes.size() - 1)(rng_)];
  }
  ScoreVector scores(std::size_t v) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> s(v);
    for (double& x : s) x = u(rng_);
    return ScoreVector(std::move(s));
  }
  Temperature temperature() {
    std::uniform_real_distribution<double> u(std::log(0.25), std::log(4.0));
    return Temperature(std::exp(u(rng_)));
  }
  SimplexPoint interior_point(std::size_t v) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(v);
    double sum = 0.0;
    for (double& x : w) {
      x = std::max(e(rng_), 1e-12);
      sum += x;
    }
    for (double& x : w) x /= sum;
    return SimplexPoint(std::move(w));
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

// --- witness search -----------------------------------------------------------------

struct MultiBasinInstance {
  Matrix B{3};
  std::size_t basins = 0;
  std::size_t candidates_tried = 0;
  LockinReport report;
};

/// Seeded interior starts for V = 3 probes. Random rather than a lattice so
/// no start sits on a symmetry line of the candidate field.
inline std::vector<SimplexPoint> probe_starts(std::uint64_t seed, std::size_t count = 24) {
  InstanceGenerator gen(seed);
  std::vector<SimplexPoint> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(gen.interior_point(3));
  return out;
}

/// Brute-force search over symmetric integer 3x3 matrices B with entries in
/// [-max_entry, max_entry], ordered by increasing max |entry|, for the first
/// one whose entropic flow at temperature T has at least two terminal basins.
inline MultiBasinInstance find_multibasin_instance(Temperature T, int max_entry = 2, double horizon = 200.0,
                                                   std::uint64_t seed = 7) {
  MultiBasinInstance out;
  const auto starts = probe_starts(seed);
  const ScoreVector s0{0.0, 0.0, 0.0};
  IntegratorControls ctl;
  ctl.num_samples = 20;
  ctl.convergence_kl = 1e-12;
  for (int level = 1; level <= max_entry; ++level) {
    // upper-triangular entries b00 b01 b02 b11 b12 b22
    const int w = 2 * level + 1;
    std::size_t total = 1;
    for (int k = 0; k < 6; ++k) total *= static_cast<std::size_t>(w);
    for (std::size_t code = 0; code < total; ++code) {
      int e[6];
      std::size_t c = code;
      int mx = 0;
      for (int k = 0; k < 6; ++k) {
        e[k] = static_cast<int>(c % static_cast<std::size_t>(w)) - level;
        c /= static_cast<std::size_t>(w);
        mx = std::max(mx, std::abs(e[k]));
      }
      if (mx != level) continue;
      Matrix B(3);
      B(0, 0) = e[0]; B(0, 1) = B(1, 0) = e[1]; B(0, 2) = B(2, 0) = e[2];
      B(1, 1) = e[3]; B(1, 2) = B(2, 1) = e[4]; B(2, 2) = e[5];
      ++out.candidates_tried;
      const auto field = ScoreField::linear(s0, B);
      auto rep = lockin_probe(field, FieldKind::EntropicReplicator, starts, T, horizon, ctl);
      if (rep.basins.size() >= 2 && rep.diverged.empty() && rep.unconverged.empty()) {
        out.B = B;
        out.basins = rep.basins.size();
        out.report = std::move(rep);
        return out;
      }
    }
  }
  throw Error(ErrorCode::OracleFailure, "no multi-basin symmetric instance found");
}

// --- adjudication -----------------------------------------------------------------

struct Statistic {
  std::string name;
  double value = 0.0;
  std::size_t trials = 0;
};

struct Counterexample {
  std::string description;
  std::vector<double> point;
  std::vector<double> scores;
  double temperature = 0.0;
  double measured = 0.0;
};

struct ClaimVerdict {
  std::string claim_id;
  std::string dynamics;  // exact-prox | printed-mw | literal | entropic
  bool holds = false;
  double tolerance = 0.0;
  std::variant<Statistic, Counterexample> witness;
};

struct AdjudicationOptions {
  std::uint64_t seed = 20240917;
  std::size_t trials = 200;  // Monte-Carlo trials for the discrete claims
  std::size_t runs = 40;     // random integrations for the continuous claims
  std::vector<std::string> claims;  // empty = all
};

inline const std::vector<std::pair<std::string, std::string>>& claim_matrix() {
  static const std::vector<std::pair<std::string, std::string>> m = {
      {"cor-convergence", "entropic"},
      {"cor-convergence", "literal"},
      {"cor-faces", "literal"},
      {"cor-temp-rescale", "entropic"},
      {"cor-temp-rescale", "literal"},
      {"lemma-forward-invariance", "literal"},
      {"prop-ascent", "exact-prox"},
      {"prop-ascent", "printed-mw"},
      {"prop-lyapunov", "entropic"},
      {"prop-lyapunov", "literal"},
      {"thm-manifold-3", "entropic"},
      {"thm-manifold-3", "literal"},
  };
  return m;
}

inline bool is_known_claim(const std::string& id) {
  return std::any_of(claim_matrix().begin(), claim_matrix().end(), [&](const auto& c) { return c.first == id; });
}

/// The trivial oracle examples; throws OracleFailure on the first miss.
inline void run_self_tests() {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::OracleFailure, "self-test: " + what); };
  {
    const std::vector<double> c{1.5, -2.0, 0.25};
    const auto g = fd_gradient(
        [&](std::span<const double> x) { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2]; },
        std::vector<double>{0.3, 0.1, -0.7});
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(g[i] - c[i]) > 1e-9) fail("fd_gradient of a linear map");
  }
  {
    const ScoreVector s{1.0, 0.0, -0.5};
    const SimplexPoint p0{0.2, 0.5, 0.3};
    const auto q = closed_form_literal(p0, s, Temperature(1.0), 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(q[i] - p0[i]) > 1e-15) fail("closed_form_literal at t = 0");
    const auto r = closed_form_literal(p0, ScoreVector{2.0, 2.0, 2.0}, Temperature(0.5), 7.0);
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(r[i] - p0[i]) > 1e-15) fail("closed_form_literal with constant scores");
    const auto v = closed_form_literal(p0, s, Temperature(1.0), 1e4);
    if (v[0] < 1.0 - 1e-15) fail("closed_form_literal large-t limit");
  }
  {
    const SimplexPoint p{0.6, 0.3, 0.1};
    const auto q = prox_objective_maximizer(p, ScoreVector{1.0, 0.0, 2.0}, Temperature(1.0), StepSize(1e-9));
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(q[i] - p[i]) > 1e-7) fail("prox maximizer as eta -> 0");
  }
}

namespace detail {

inline double max_abs_diff(const SimplexPoint& a, const SimplexPoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline ClaimVerdict verdict_stat(std::string id, std::string dyn, bool holds, double tol, std::string stat, double value,
                                 std::size_t trials) {
  return ClaimVerdict{std::move(id), std::move(dyn), holds, tol, Statistic{std::move(stat), value, trials}};
}

inline ClaimVerdict verdict_counter(std::string id, std::string dyn, double tol, std::string what,
                                    const SimplexPoint& p, const ScoreVector& s, Temperature T, double measured) {
  return ClaimVerdict{std::move(id), std::move(dyn), false, tol,
                      Counterexample{std::move(what), p.vector(), s.vector(), T.value(), measured}};
}

}  // namespace detail

/// Runs the claim matrix. Each verdict is backed either by a statistic over
/// random runs (claims that hold) or by a concrete counterexample.
inline std::vector<ClaimVerdict> run_adjudication(const AdjudicationOptions& opt = {}) {
  run_self_tests();
  auto wanted = [&](const std::string& id) {
    return opt.claims.empty() || std::find(opt.claims.begin(), opt.claims.end(), id) != opt.claims.end();
  };
  for (const auto& c : opt.claims)
    if (!is_known_claim(c)) throw Error(ErrorCode::InvalidInput, "unknown claim id '" + c + "'");

  std::vector<ClaimVerdict> out;
  const ScoreVector s2{1.0, 0.0};
  const Temperature T1(1.0);
  const auto pi2 = softmax(s2, T1);
  const std::size_t small_sizes[] = {2, 3, 8, 64};

  if (wanted("prop-ascent")) {
    InstanceGenerator gen(opt.seed);
    double worst_exact = std::numeric_limits<double>::infinity();
    double worst_mw = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < opt.trials; ++k) {
      const auto v = gen.size_from(small_sizes);
      const auto s = gen.scores(v);
      const auto T = gen.temperature();
      const auto p = gen.interior_point(v);
      const StepSize eta(gen.uniform(0.05, 2.0));
      worst_exact = std::min(worst_exact, ascent_certificate(MirrorStepKind::ExactProx, p, s, T, eta).slack);
      worst_mw = std::min(worst_mw, ascent_certificate(MirrorStepKind::PrintedMW, p, s, T, eta).slack);
      // the certificate is only meaningful if the step really is the prox point
      if (k < 20 && v <= 8) {
        const auto q = exact_prox_step(p, s, T, eta);
        const auto m = prox_objective_maximizer(p, s, T, eta);
        if (detail::max_abs_diff(q, m) > 1e-8)
          throw Error(ErrorCode::OracleFailure, "exact prox step disagrees with the numerical maximizer");
      }
    }
    out.push_back(detail::verdict_stat("prop-ascent", "exact-prox", worst_exact >= -1e-10, 1e-10, "min_ascent_slack",
                                       worst_exact, opt.trials));
    const auto c = ascent_certificate(MirrorStepKind::PrintedMW, pi2, s2, T1, StepSize(0.5));
    if (c.f_after < c.f_before && c.slack < -1e-10) {
      out.push_back(detail::verdict_counter("prop-ascent", "printed-mw", 1e-10,
                                            "printed MW step from softmax(s,T) lowers the free energy by f_before - f_after",
                                            pi2, s2, T1, c.f_before - c.f_after));
    } else {
      out.push_back(detail::verdict_stat("prop-ascent", "printed-mw", worst_mw >= -1e-10, 1e-10, "min_ascent_slack",
                                         worst_mw, opt.trials));
    }
  }

  // Entropic random runs back prop-lyapunov, thm-manifold-3 and cor-convergence.
  const bool need_entropic = wanted("prop-lyapunov") || wanted("thm-manifold-3") || wanted("cor-convergence");
  double worst_drop = std::numeric_limits<double>::infinity(), worst_kl = 0.0, worst_rest = 0.0;
  if (need_entropic) {
    InstanceGenerator gen(opt.seed + 1);
    for (std::size_t k = 0; k < opt.runs; ++k) {
      const auto v = gen.size_from(small_sizes);
      const auto s = gen.scores(v);
      const auto T = gen.temperature();
      const auto p0 = gen.interior_point(v);
      const auto traj = integrate(FieldKind::EntropicReplicator, p0, s, TemperatureSchedule::constant(T.value()), 1e3);
      worst_drop = std::min(worst_drop, lyapunov_report(traj, s, T).worst_drop);
      worst_kl = std::max(worst_kl, traj.status == TerminalStatus::Converged ? traj.terminal().kl_to_target
                                                                             : std::numeric_limits<double>::infinity());
      worst_rest = std::max(worst_rest, ::simplexflow::detail::norm2(eval_field(FieldKind::EntropicReplicator, softmax(s, T), s, T)));
    }
  }

  if (wanted("prop-lyapunov")) {
    out.push_back(detail::verdict_stat("prop-lyapunov", "entropic", worst_drop >= -1e-9, 1e-9,
                                       "min_consecutive_free_energy_change", worst_drop, opt.runs));
    const auto traj = integrate(FieldKind::LiteralReplicator, pi2, s2, TemperatureSchedule::constant(1.0), 50.0);
    const auto rep = lyapunov_report(traj, s2, T1);
    if (!rep.monotone)
      out.push_back(detail::verdict_counter("prop-lyapunov", "literal", 1e-9,
                                            "literal flow started at softmax(s,T) loses free energy (worst drop)", pi2,
                                            s2, T1, rep.worst_drop));
    else
      out.push_back(detail::verdict_stat("prop-lyapunov", "literal", true, 1e-9, "min_consecutive_free_energy_change",
                                         rep.worst_drop, 1));
  }

  if (wanted("thm-manifold-3")) {
    out.push_back(detail::verdict_stat("thm-manifold-3", "entropic", worst_kl < 1e-8 && worst_rest <= 1e-12, 1e-8,
                                       "max_terminal_kl_to_softmax", worst_kl, opt.runs));
    const double norm = ::simplexflow::detail::norm2(eval_field(FieldKind::LiteralReplicator, pi2, s2, T1));
    if (norm > 1e-12)
      out.push_back(detail::verdict_counter("thm-manifold-3", "literal", 1e-12,
                                            "literal field does not vanish at softmax(s,T) (field norm)", pi2, s2, T1,
                                            norm));
    else
      out.push_back(detail::verdict_stat("thm-manifold-3", "literal", true, 1e-12, "field_norm_at_softmax", norm, 1));
  }

  if (wanted("cor-convergence")) {
    out.push_back(detail::verdict_stat("cor-convergence", "entropic", worst_kl < 1e-8, 1e-8,
                                       "max_terminal_kl_to_softmax", worst_kl, opt.runs));
    const auto p0 = SimplexPoint::uniform(2);
    const auto traj = integrate(FieldKind::LiteralReplicator, p0, s2, TemperatureSchedule::constant(1.0), 1e3);
    const double kl = kl_divergence(pi2, traj.terminal().p.is_interior() ? traj.terminal().p : p0);
    const auto& end = traj.terminal().p;
    double kl_end = 0.0;
    for (std::size_t i = 0; i < 2; ++i) kl_end += pi2[i] * (std::log(pi2[i]) - std::log(std::max(end[i], 1e-300)));
    (void)kl;
    if (kl_end > 1e-8)
      out.push_back(detail::verdict_counter("cor-convergence", "literal", 1e-8,
                                            "literal flow from the uniform point ends at the argmax vertex; "
                                            "measured D(softmax || p_end)",
                                            end, s2, T1, kl_end));
    else
      out.push_back(detail::verdict_stat("cor-convergence", "literal", true, 1e-8, "kl_softmax_to_terminal", kl_end, 1));
  }

  if (wanted("cor-temp-rescale")) {
    InstanceGenerator gen(opt.seed + 2);
    IntegratorControls tight;
    tight.rel_tol = 1e-10;
    tight.abs_tol = 1e-12;
    const std::size_t sizes3[] = {3};
    const auto s = gen.scores(gen.size_from(sizes3));
    const auto p0 = gen.interior_point(3);
    const TemperatureSchedule schedules[] = {TemperatureSchedule::constant(0.5),
                                             TemperatureSchedule::piecewise({1.0}, {1.0, 0.5}),
                                             TemperatureSchedule::exponential(1.0, -0.3)};
    double worst = 0.0;
    for (const auto& sch : schedules)
      worst = std::max(worst, check_time_reparameterization(FieldKind::LiteralReplicator, s, p0, sch, 3.0, tight));
    out.push_back(detail::verdict_stat("cor-temp-rescale", "literal", worst < 1e-7, 1e-7,
                                       "max_reparameterization_deviation", worst, 3));
    const double dev = ::simplexflow::detail::reparameterization_deviation(
        FieldKind::EntropicReplicator, s, p0, TemperatureSchedule::constant(0.5), 3.0, tight);
    if (dev > 1e-7)
      out.push_back(detail::verdict_counter("cor-temp-rescale", "entropic", 1e-7,
                                            "entropic flow at T=0.5 is not the unit-temperature flow at tau = t/0.5 "
                                            "(max deviation)",
                                            p0, s, Temperature(0.5), dev));
    else
      out.push_back(detail::verdict_stat("cor-temp-rescale", "entropic", true, 1e-7, "max_reparameterization_deviation",
                                         dev, 1));
  }

  if (wanted("lemma-forward-invariance") || wanted("cor-faces")) {
    InstanceGenerator gen(opt.seed + 3);
    double leaked = 0.0, mismatch = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < std::max<std::size_t>(opt.runs / 4, 4); ++k, ++n) {
      const std::size_t sizes[] = {4, 8, 64};
      const auto v = gen.size_from(sizes);
      const auto s = gen.scores(v);
      const auto T = gen.temperature();
      const auto mask = build_face_topk(s, std::max<std::size_t>(2, v / 2));
      const auto full = gen.interior_point(v);
      std::vector<double> w(v, 0.0);
      double sum = 0.0;
      for (std::size_t i = 0; i < v; ++i)
        if (mask.contains(i)) sum += (w[i] = full[i]);
      for (double& x : w) x /= sum;
      const SimplexPoint p0(w);
      IntegratorControls ctl;
      ctl.stop_on_convergence = false;
      ctl.num_samples = 50;
      const auto sched = TemperatureSchedule::constant(T.value());
      const auto traj = integrate(FieldKind::LiteralReplicator, p0, s, sched, 20.0, ctl);
      for (const auto& smp : traj.samples)
        for (std::size_t i = 0; i < v; ++i)
          if (!mask.contains(i)) leaked = std::max(leaked, std::abs(smp.p[i]));
      const auto r = restrict_to_face(s, p0, mask);
      const auto traj_r = integrate(FieldKind::LiteralReplicator, r.point, r.scores, sched, 20.0, ctl);
      for (std::size_t j = 0; j < traj.samples.size() && j < traj_r.samples.size(); ++j)
        mismatch = std::max(mismatch, detail::max_abs_diff(traj.samples[j].p, lift_from_face(traj_r.samples[j].p, mask)));
      if (traj.samples.size() != traj_r.samples.size()) mismatch = std::numeric_limits<double>::infinity();
    }
    if (wanted("cor-faces"))
      out.push_back(detail::verdict_stat("cor-faces", "literal", mismatch <= 1e-8, 1e-8, "max_face_vs_restricted_deviation",
                                         mismatch, n));
    if (wanted("lemma-forward-invariance"))
      out.push_back(detail::verdict_stat("lemma-forward-invariance", "literal", leaked == 0.0, 0.0,
                                         "max_off_face_mass", leaked, n));
  }

  std::sort(out.begin(), out.end(), [](const ClaimVerdict& a, const ClaimVerdict& b) {
    return std::tie(a.claim_id, a.dynamics) < std::tie(b.claim_id, b.dynamics);
  });
  return out;
}

}  // namespace simplexflow::oracles

#endif  // SIMPLEXFLOW_ORACLES_HPP
