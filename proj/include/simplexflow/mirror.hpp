#ifndef SIMPLEXFLOW_MIRROR_HPP
#define SIMPLEXFLOW_MIRROR_HPP

// Discrete-time updates on the simplex.
//
// Two step maps are provided side by side:
//   ExactProx  - the maximizer of <q,s> + T H(q) - D(q||p)/eta, which solves to
//                q_i ∝ p_i^{1/(1+eta T)} exp(eta s_i / (1+eta T)). Its fixed point
//                is softmax(s, T).
//   PrintedMW  - q_i ∝ p_i exp((eta/T) s_i), the multiplicative-weights form with
//                the entropy gradient dropped. Its iterates concentrate on argmax s.
// Only ExactProx carries the ascent inequality
//   F(q) >= F(p) + D(q||p)/eta;
// for PrintedMW the slack is measured and reported without a sign guarantee.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simplex_core.hpp"

namespace simplexflow {

enum class MirrorStepKind { ExactProx, PrintedMW };

inline const char* to_string(MirrorStepKind k) {
  return k == MirrorStepKind::ExactProx ? "exact-prox" : "printed-mw";
}

class StepSize {
 public:
  explicit StepSize(double eta) : eta_(eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::InvalidInput, "step size must be positive and finite");
  }
  double value() const noexcept { return eta_; }

 private:
  double eta_;
};

struct AscentCertificate {
  double f_before = 0.0;
  double f_after = 0.0;
  double kl_move = 0.0;  // D(p+ || p)
  double slack = 0.0;    // f_after - f_before - kl_move / eta
};

namespace detail {

inline void normalize_log(std::vector<double>& l) {
  const double lse = log_sum_exp(l);
  for (double& x : l) x -= lse;
}

inline std::vector<double> log_of(const SimplexPoint& p) {
  std::vector<double> l(p.size());
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = std::log(p[i]);
  return l;
}

// D(q || p) from normalized log-probabilities; entries of q at -inf carry no mass.
inline double kl_log(std::span<const double> lq, std::span<const double> lp) {
  double d = 0.0;
  for (std::size_t i = 0; i < lq.size(); ++i) {
    const double qi = std::exp(lq[i]);
    if (qi == 0.0) continue;
    d += qi * (lq[i] - lp[i]);
  }
  return std::max(d, 0.0);
}

inline double free_energy_log(std::span<const double> lp, const ScoreVector& s, Temperature T) {
  double f = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double pi = std::exp(lp[i]);
    if (pi == 0.0) continue;
    f += pi * (s[i] - T.value() * lp[i]);
  }
  return f;
}

inline std::vector<double> exact_prox_log(std::span<const double> lp, const ScoreVector& s, Temperature T, StepSize eta) {
  const double a = 1.0 + eta.value() * T.value();
  std::vector<double> lq(lp.size());
  for (std::size_t i = 0; i < lq.size(); ++i) lq[i] = (lp[i] + eta.value() * s[i]) / a;
  normalize_log(lq);
  return lq;
}

inline std::vector<double> printed_mw_log(std::span<const double> lp, const ScoreVector& s, Temperature T, StepSize eta) {
  const double r = eta.value() / T.value();
  std::vector<double> lq(lp.size());
  for (std::size_t i = 0; i < lq.size(); ++i) lq[i] = lp[i] + r * s[i];
  normalize_log(lq);
  return lq;
}

inline std::vector<double> step_log(MirrorStepKind kind, std::span<const double> lp, const ScoreVector& s, Temperature T,
                                    StepSize eta) {
  return kind == MirrorStepKind::ExactProx ? exact_prox_log(lp, s, T, eta) : printed_mw_log(lp, s, T, eta);
}

inline void require_interior(const SimplexPoint& p, const ScoreVector& s) {
  if (p.size() != s.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  if (!p.is_interior()) throw Error(ErrorCode::NotInterior, "mirror step needs a strictly interior point");
}

}  // namespace detail

inline SimplexPoint exact_prox_step(const SimplexPoint& p, const ScoreVector& s, Temperature T, StepSize eta) {
  detail::require_interior(p, s);
  return SimplexPoint::from_log(detail::exact_prox_log(detail::log_of(p), s, T, eta));
}

inline SimplexPoint printed_mw_step(const SimplexPoint& p, const ScoreVector& s, Temperature T, StepSize eta) {
  detail::require_interior(p, s);
  return SimplexPoint::from_log(detail::printed_mw_log(detail::log_of(p), s, T, eta));
}

inline SimplexPoint mirror_step(MirrorStepKind kind, const SimplexPoint& p, const ScoreVector& s, Temperature T,
                                StepSize eta) {
  return kind == MirrorStepKind::ExactProx ? exact_prox_step(p, s, T, eta) : printed_mw_step(p, s, T, eta);
}

namespace detail {
inline AscentCertificate certificate_log(std::span<const double> lp, std::span<const double> lq, const ScoreVector& s,
                                         Temperature T, StepSize eta) {
  AscentCertificate c;
  c.f_before = free_energy_log(lp, s, T);
  c.f_after = free_energy_log(lq, s, T);
  c.kl_move = kl_log(lq, lp);
  c.slack = c.f_after - c.f_before - c.kl_move / eta.value();
  return c;
}
}  // namespace detail

inline AscentCertificate ascent_certificate(MirrorStepKind kind, const SimplexPoint& p, const ScoreVector& s,
                                            Temperature T, StepSize eta) {
  detail::require_interior(p, s);
  const auto lp = detail::log_of(p);
  const auto lq = detail::step_log(kind, lp, s, T, eta);
  return detail::certificate_log(lp, lq, s, T, eta);
}

// --- iteration driver --------------------------------------------------------

struct IterateOptions {
  std::size_t max_steps = 10000;
  double kl_tol = 1e-12;  // stop once D(p_{t+1} || p_t) < kl_tol
  // Optional second stopping rule on D(p_t || softmax); 0 disables it.
  double target_kl = 0.0;
  bool record_points = true;
};

struct MirrorSample {
  std::size_t step = 0;
  std::optional<SimplexPoint> p;  // empty when record_points is off
  double free_energy = 0.0;
  double kl_step = 0.0;
  double kl_to_softmax = 0.0;
  AscentCertificate certificate;
};

enum class IterateStatus { Converged, MaxSteps };

inline const char* to_string(IterateStatus s) { return s == IterateStatus::Converged ? "converged" : "max-steps"; }

struct MirrorRun {
  MirrorStepKind kind = MirrorStepKind::ExactProx;
  IterateStatus status = IterateStatus::MaxSteps;
  std::size_t steps = 0;
  std::vector<MirrorSample> samples;  // one per executed step
  SimplexPoint initial{1.0};
  SimplexPoint terminal{1.0};
  double initial_free_energy = 0.0;
  double terminal_kl_to_softmax = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
};

/// Iterates the chosen step from p0. State is kept as normalized
/// log-probabilities so PrintedMW runs can concentrate mass far past the
/// point where the losing coordinates underflow in linear space.
inline MirrorRun iterate(MirrorStepKind kind, const SimplexPoint& p0, const ScoreVector& s, Temperature T, StepSize eta,
                         const IterateOptions& opt = {}) {
  detail::require_interior(p0, s);
  const auto lpi = log_softmax(s, T);

  MirrorRun run;
  run.kind = kind;
  run.initial = p0;
  auto lp = detail::log_of(p0);
  run.initial_free_energy = detail::free_energy_log(lp, s, T);
  run.terminal_kl_to_softmax = detail::kl_log(lp, lpi);
  run.samples.reserve(std::min<std::size_t>(opt.max_steps, 1u << 16));

  for (std::size_t t = 1; t <= opt.max_steps; ++t) {
    auto lq = detail::step_log(kind, lp, s, T, eta);
    MirrorSample sm;
    sm.step = t;
    sm.certificate = detail::certificate_log(lp, lq, s, T, eta);
    sm.free_energy = sm.certificate.f_after;
    sm.kl_step = sm.certificate.kl_move;
    sm.kl_to_softmax = detail::kl_log(lq, lpi);
    if (opt.record_points) sm.p = SimplexPoint::from_log(lq);
    run.min_slack = std::min(run.min_slack, sm.certificate.slack);
    run.terminal_kl_to_softmax = sm.kl_to_softmax;
    const bool done = sm.kl_step < opt.kl_tol || (opt.target_kl > 0.0 && sm.kl_to_softmax < opt.target_kl);
    run.samples.push_back(std::move(sm));
    lp = std::move(lq);
    run.steps = t;
    if (done) {
      run.status = IterateStatus::Converged;
      break;
    }
  }
  run.terminal = SimplexPoint::from_log(lp);
  return run;
}

}  // namespace simplexflow

#endif  // SIMPLEXFLOW_MIRROR_HPP
