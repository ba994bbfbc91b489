// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "simplexflow/experiment.hpp"

using namespace simplexflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const SimplexPoint& a, const SimplexPoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Outcome duality_and_gradients() {
  oracles::InstanceGenerator gen(101);
  const std::size_t sizes[] = {2, 8, 64};
  double dual = 0.0, grad = 0.0, hess = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto v = gen.size_from(sizes);
    const auto s = gen.scores(v);
    const auto T = gen.temperature();
    const auto pi = softmax(s, T);
    const double A = log_partition(s, T);
    dual = std::max(dual, std::abs(free_energy(pi, s, T).value - A));

    auto wrap = [](std::span<const double> x) { return ScoreVector(std::vector<double>(x.begin(), x.end())); };
    const auto g = oracles::fd_gradient([&](std::span<const double> x) { return log_partition(wrap(x), T); }, s.values());
    for (std::size_t i = 0; i < v; ++i) grad = std::max(grad, std::abs(g[i] - pi[i]));

    const auto fd = oracles::fd_softmax_jacobian(s, T);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t j = 0; j < v; ++j) {
        const double h = ((i == j ? pi[i] : 0.0) - pi[i] * pi[j]) / T.value();
        num = std::max(num, std::abs(fd(i, j) - h));
        den = std::max(den, std::abs(h));
      }
    hess = std::max(hess, num / den);
  }
  return {dual <= 1e-10 && grad <= 1e-6 && hess <= 1e-5,
          fmt("duality %.2e, gradient %.2e, hessian rel %.2e", dual, grad, hess)};
}

Outcome exact_prox_convergence() {
  oracles::InstanceGenerator gen(102);
  double worst_kl = 0.0, worst_slack = INFINITY;
  std::size_t worst_steps = 0;
  bool ok = true;
  for (std::size_t v : {2u, 8u, 64u, 1000u})
    for (double T : {0.25, 1.0, 4.0})
      for (double eta : {0.1, 1.0}) {
        IterateOptions opt;
        opt.max_steps = 10000;
        opt.kl_tol = 0.0;
        opt.target_kl = 1e-11;
        opt.record_points = false;
        const auto run = iterate(MirrorStepKind::ExactProx, gen.interior_point(v), gen.scores(v), Temperature(T),
                                 StepSize(eta), opt);
        ok = ok && run.status == IterateStatus::Converged && run.terminal_kl_to_softmax < 1e-10;
        worst_kl = std::max(worst_kl, run.terminal_kl_to_softmax);
        worst_slack = std::min(worst_slack, run.min_slack);
        worst_steps = std::max(worst_steps, run.steps);
      }
  ok = ok && worst_slack >= -1e-10;
  return {ok, fmt("max terminal KL %.2e, min slack %.2e, max steps %zu", worst_kl, worst_slack, worst_steps)};
}

Outcome printed_mw_adjudication() {
  oracles::InstanceGenerator gen(103);
  const std::size_t sizes[] = {2, 3, 8, 64};
  double tele = 0.0, min_mass = 1.0, max_change = -INFINITY;
  for (int k = 0; k < 100; ++k) {
    const auto v = gen.size_from(sizes);
    const auto s = gen.scores(v);
    const auto T = gen.temperature();
    const auto p0 = gen.interior_point(v);
    const double eta = gen.uniform(0.05, 1.0);

    auto p = p0;
    for (int t = 0; t < 10; ++t) p = printed_mw_step(p, s, T, StepSize(eta));
    tele = std::max(tele, max_abs_diff(p, printed_mw_step(p0, s, T, StepSize(10 * eta))));

    const auto order = detail::descending_order(s.values());
    const double gap = s[order[0]] - s[order[1]];
    IterateOptions opt;
    opt.kl_tol = 0.0;
    opt.record_points = false;
    opt.max_steps = static_cast<std::size_t>(std::ceil(40.0 * T.value() / (eta * gap))) + 10;
    const auto run = iterate(MirrorStepKind::PrintedMW, p0, s, T, StepSize(eta), opt);
    min_mass = std::min(min_mass, run.terminal[order[0]]);

    const auto c = ascent_certificate(MirrorStepKind::PrintedMW, softmax(s, T), s, T, StepSize(eta));
    max_change = std::max(max_change, c.f_after - c.f_before);
  }
  return {tele <= 1e-12 && min_mass > 1.0 - 1e-8 && max_change < 0.0,
          fmt("telescoping %.2e, min argmax mass 1-%.2e, max first-step F change %.2e", tele, 1.0 - min_mass,
              max_change)};
}

Outcome literal_closed_form() {
  oracles::InstanceGenerator gen(104);
  double worst = 0.0;
  bool ok = true;
  for (std::size_t v : {2u, 3u, 8u, 64u, 1000u})
    for (int k = 0; k < 4; ++k) {
      const auto s = gen.scores(v);
      const auto T = gen.temperature();
      const auto p0 = gen.interior_point(v);
      IntegratorControls ctl;
      ctl.stop_on_convergence = false;
      ctl.num_samples = 60;
      const auto tr = integrate(FieldKind::LiteralReplicator, p0, s, TemperatureSchedule::constant(T.value()), 20.0, ctl);
      ok = ok && tr.status == TerminalStatus::MaxTime && std::abs(tr.terminal_time - 20.0) < 1e-12;
      for (const auto& smp : tr.samples) {
        const auto q = oracles::closed_form_literal(p0, s, T, smp.t);
        for (std::size_t i = 0; i < v; ++i)
          if (q[i] > 1e-250) worst = std::max(worst, std::abs(smp.p[i] - q[i]) / q[i]);
      }
    }
  return {ok && worst < 1e-6, fmt("max relative error %.2e", worst)};
}

Outcome entropic_lyapunov() {
  oracles::InstanceGenerator gen(105);
  const std::size_t sizes[] = {2, 3, 8, 64, 1000};
  double worst_kl = 0.0, worst_drop = INFINITY;
  std::size_t failures = 0;
  for (int k = 0; k < 500; ++k) {
    const auto v = gen.size_from(sizes);
    const auto s = gen.scores(v);
    const auto T = gen.temperature();
    IntegratorControls ctl;
    ctl.convergence_kl = 1e-10;
    const auto tr = integrate(FieldKind::EntropicReplicator, gen.interior_point(v), s,
                              TemperatureSchedule::constant(T.value()), 200.0, ctl);
    const double kl = tr.samples.back().kl_to_target;
    const auto rep = lyapunov_report(tr, s, T, 1e-9);
    if (tr.status != TerminalStatus::Converged || !(kl < 1e-8) || !rep.monotone) ++failures;
    worst_kl = std::max(worst_kl, kl);
    worst_drop = std::min(worst_drop, rep.worst_drop);
  }
  return {failures == 0, fmt("max terminal KL %.2e, worst F step %.2e, failures %zu", worst_kl, worst_drop, failures)};
}

Outcome temperature_as_time() {
  oracles::InstanceGenerator gen(106);
  IntegratorControls tight;
  tight.rel_tol = 1e-10;
  tight.abs_tol = 1e-12;
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::size_t sizes[] = {3, 8, 64};
    const auto v = gen.size_from(sizes);
    const auto s = gen.scores(v);
    const auto p0 = gen.interior_point(v);
    const TemperatureSchedule schedules[] = {
        TemperatureSchedule::constant(gen.temperature().value()),
        TemperatureSchedule::piecewise({1.0, 2.5}, {1.0, 0.5, 2.0}),
        TemperatureSchedule::exponential(gen.temperature().value(), -0.3),
    };
    for (const auto& sc : schedules)
      worst = std::max(worst, check_time_reparameterization(FieldKind::LiteralReplicator, s, p0, sc, 5.0, tight));
  }
  return {worst < 1e-7, fmt("max deviation %.2e", worst)};
}

Outcome face_invariance() {
  oracles::InstanceGenerator gen(107);
  double leaked = 0.0, mismatch = 0.0;
  for (int k = 0; k < 12; ++k) {
    const std::size_t sizes[] = {4, 8, 64};
    const auto v = gen.size_from(sizes);
    const auto s = gen.scores(v);
    const auto T = gen.temperature();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v; ++i)
      if (gen.uniform(0.0, 1.0) < 0.5) idx.push_back(i);
    if (idx.size() < 2) idx = {0, v - 1};
    const FaceMask mask = FaceMask::from_indices(v, idx);
    const auto full = gen.interior_point(v);
    std::vector<double> w(v, 0.0);
    double sum = 0.0;
    for (auto i : idx) sum += (w[i] = full[i]);
    for (double& x : w) x /= sum;
    const SimplexPoint p0(w);
    for (auto kind : {FieldKind::LiteralReplicator, FieldKind::EntropicReplicator}) {
      IntegratorControls ctl;
      ctl.stop_on_convergence = false;
      ctl.num_samples = 50;
      const auto sched = TemperatureSchedule::constant(T.value());
      const auto tr = integrate(kind, p0, s, sched, 20.0, ctl);
      for (const auto& smp : tr.samples)
        for (std::size_t i = 0; i < v; ++i)
          if (!mask.contains(i)) leaked = std::max(leaked, std::abs(smp.p[i]));
      const auto r = restrict_to_face(s, p0, mask);
      const auto tr_r = integrate(kind, r.point, r.scores, sched, 20.0, ctl);
      if (tr.samples.size() != tr_r.samples.size()) {
        mismatch = INFINITY;
        continue;
      }
      for (std::size_t j = 0; j < tr.samples.size(); ++j)
        mismatch = std::max(mismatch, max_abs_diff(tr.samples[j].p, lift_from_face(tr_r.samples[j].p, mask)));
    }
  }
  return {leaked == 0.0 && mismatch <= 1e-8, fmt("off-face mass %.2e, face vs restricted %.2e", leaked, mismatch)};
}

Outcome euler_order() {
  oracles::InstanceGenerator gen(108);
  const double etas[] = {1e-2, 1e-3, 1e-4};
  double worst = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const std::size_t sizes[] = {2, 3, 8, 64};
    const auto v = gen.size_from(sizes);
    const auto e = euler_consistency(gen.interior_point(v), gen.scores(v), gen.temperature(), etas);
    worst = std::min(worst, e.order);
  }
  return {worst >= 0.9, fmt("min measured order %.3f", worst)};
}

Outcome path_dependence() {
  std::ostringstream detail;
  bool ok = true;

  // (a) rotational coupling: the detector must fire somewhere on the beta grid
  {
    const ScoreVector s0{0.2, 0.0, 0.0};
    IntegratorControls ctl;
    ctl.sample_times.resize(2001);
    for (std::size_t k = 0; k <= 2000; ++k) ctl.sample_times[k] = 50.0 * double(k) / 2000.0;
    double hit = NAN;
    for (double beta : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0}) {
      const auto f = ScoreField::linear(s0, cyclic_antisymmetric(3, beta));
      const auto tr = integrate_path(f, FieldKind::LiteralReplicator, SimplexPoint::uniform(3), Temperature(1.0), 50.0, ctl);
      if (detect_recurrence(tr).recurrent) {
        hit = beta;
        break;
      }
    }
    ok = ok && std::isfinite(hit);
    detail << "recurrent at beta " << hit;
  }
  // (b) converging constant-score run
  {
    const ScoreVector s{0.3, -0.4, 1.0};
    const auto tr = integrate(FieldKind::EntropicReplicator, SimplexPoint({0.6, 0.3, 0.1}), s,
                              TemperatureSchedule::constant(1.0), 200.0);
    const bool rec = detect_recurrence(tr).recurrent;
    ok = ok && !rec && tr.status == TerminalStatus::Converged;
    detail << ", converging run recurrent=" << rec;
  }
  // (c) symmetric coupling with several basins
  {
    const auto mb = oracles::find_multibasin_instance(Temperature(0.2));
    ok = ok && mb.basins >= 2;
    detail << ", " << mb.basins << " basins after " << mb.candidates_tried << " candidates";
  }
  // (d) generalized free energy along symmetric-coupling entropic runs
  {
    oracles::InstanceGenerator gen(109);
    double worst = INFINITY;
    for (int k = 0; k < 30; ++k) {
      const std::size_t v = k % 2 ? 3 : 8;
      Matrix B(v);
      for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = i; j < v; ++j) B(i, j) = B(j, i) = gen.uniform(-3.0, 3.0);
      const auto f = ScoreField::linear(gen.scores(v), B);
      const auto T = gen.temperature();
      IntegratorControls ctl;
      ctl.num_samples = 400;
      const auto tr = integrate_path(f, FieldKind::EntropicReplicator, gen.interior_point(v), T, 200.0, ctl);
      double prev = generalized_free_energy(f, tr.samples.front().p, T);
      for (std::size_t j = 1; j < tr.samples.size(); ++j) {
        const double g = generalized_free_energy(f, tr.samples[j].p, T);
        worst = std::min(worst, g - prev);
        prev = g;
      }
    }
    ok = ok && worst >= -1e-9;
    detail << fmt(", worst G step %.2e", worst);
  }
  return {ok, detail.str()};
}

Outcome adjudication_matrix() {
  std::ostringstream out, err;
  const auto c = cli::config_from_json(nlohmann::json::object());
  const int rc = cli::cmd_verify(c, {}, out, err);

  const auto v = oracles::run_adjudication();
  bool lit_fails = false, mw_witness = false;
  for (const auto& x : v) {
    if (x.claim_id == "thm-manifold-3" && x.dynamics == "literal") lit_fails = !x.holds;
    if (x.claim_id == "prop-ascent" && x.dynamics == "printed-mw") {
      const auto* ce = std::get_if<oracles::Counterexample>(&x.witness);
      mw_witness = !x.holds && ce && ce->measured > 0.0;
    }
  }
  return {rc == 0 && lit_fails && mw_witness,
          fmt("verify exit %d, literal manifold fails %d, printed-mw F-decrease witness %d", rc, int(lit_fails),
              int(mw_witness))};
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "duality and gradients", 10, duality_and_gradients},
      {2, "exact-prox convergence", 60, exact_prox_convergence},
      {3, "printed-mw adjudication", 10, printed_mw_adjudication},
      {4, "literal field vs closed form", 30, literal_closed_form},
      {5, "entropic convergence and lyapunov", 60, entropic_lyapunov},
      {6, "temperature as time", 30, temperature_as_time},
      {7, "face invariance", 10, face_invariance},
      {8, "euler consistency", 10, euler_order},
      {9, "path-dependence witnesses", 120, path_dependence},
      {10, "adjudication matrix", 120, adjudication_matrix},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.budget_seconds;
    failed += !pass;
    std::printf("%s criterion %2d  %-34s %7.2fs / %3.0fs  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                c.budget_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
