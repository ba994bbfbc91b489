#include <gtest/gtest.h>

#include <cmath>

#include "simplexflow/oracles.hpp"

using namespace simplexflow;

namespace {

double lse_T(std::span<const double> x, double T) {
  return log_partition(ScoreVector(std::vector<double>(x.begin(), x.end())), Temperature(T));
}

}  // namespace

TEST(FdGradient, LogPartitionMatchesSoftmax) {
  const std::vector<double> x{1.0, 0.0};
  const auto g = oracles::fd_gradient([](std::span<const double> v) { return lse_T(v, 1.0); }, x, 1e-5);
  const auto pi = softmax(ScoreVector{1.0, 0.0}, Temperature(1.0));
  EXPECT_NEAR(g[0], pi[0], 1e-6);
  EXPECT_NEAR(g[1], pi[1], 1e-6);
}

TEST(FdGradient, LinearIsExact) {
  const std::vector<double> c{2.0, -3.0, 0.5};
  const auto g = oracles::fd_gradient(
      [&](std::span<const double> v) { return c[0] * v[0] + c[1] * v[1] + c[2] * v[2]; }, std::vector<double>{1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g[i], c[i], 1e-9);
}

TEST(FdGradient, ShiftInvariant) {
  const std::vector<double> x{0.3, -1.0, 2.0}, y{5.3, 4.0, 7.0};
  auto f = [](std::span<const double> v) { return lse_T(v, 0.7); };
  const auto a = oracles::fd_gradient(f, x), b = oracles::fd_gradient(f, y);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(FdGradient, RichardsonBudget) {
  const std::vector<double> x{0.3, -1.0, 2.0};
  auto f = [](std::span<const double> v) { return lse_T(v, 0.7); };
  EXPECT_LE(oracles::fd_richardson_check(f, x, 1e-5, 1e-7), 1e-7);
  auto rough = [](std::span<const double> v) { return std::abs(v[0]); };
  try {
    oracles::fd_richardson_check(rough, std::vector<double>{1e-5}, 1e-5, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OracleFailure);
  }
}

TEST(ClosedForm, Examples) {
  const SimplexPoint p0({0.2, 0.5, 0.3});
  const ScoreVector s{1.0, 0.0, -0.5};
  const auto a = oracles::closed_form_literal(p0, s, Temperature(1.0), 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], p0[i]);
  const auto b = oracles::closed_form_literal(p0, s, Temperature(1.0), 1e4);
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  const auto c = oracles::closed_form_literal(p0, ScoreVector{3.0, 3.0, 3.0}, Temperature(0.4), 12.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c[i], p0[i], 1e-16);
}

TEST(ProxMaximizer, SmallStepReturnsStart) {
  const SimplexPoint p({0.1, 0.6, 0.3});
  const auto q = oracles::prox_objective_maximizer(p, ScoreVector{2.0, -1.0, 0.0}, Temperature(1.0), StepSize(1e-9));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(q[i], p[i], 1e-7);
}

TEST(ProxMaximizer, HugeStepReturnsSoftmax) {
  const ScoreVector s{2.0, -1.0, 0.0};
  const Temperature T(0.8);
  const auto q = oracles::prox_objective_maximizer(SimplexPoint({0.1, 0.6, 0.3}), s, T, StepSize(1e9));
  const auto pi = softmax(s, T);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(q[i], pi[i], 1e-7);
}

TEST(ProxMaximizer, WorkedExampleAndObjective) {
  const SimplexPoint p = SimplexPoint::uniform(2);
  const ScoreVector s{1.0, 0.0};
  const auto q = oracles::prox_objective_maximizer(p, s, Temperature(1.0), StepSize(1.0));
  EXPECT_NEAR(q[0], 0.622459331201854565, 1e-8);
  // objective at the maximizer beats nearby points
  const double best = oracles::prox_objective(q, p, s, Temperature(1.0), StepSize(1.0));
  for (double d : {-1e-3, 1e-3})
    EXPECT_LT(oracles::prox_objective(SimplexPoint({q[0] + d, q[1] - d}), p, s, Temperature(1.0), StepSize(1.0)), best);
}

TEST(ProxMaximizer, RejectsBoundary) {
  EXPECT_THROW(
      oracles::prox_objective_maximizer(SimplexPoint({1.0, 0.0}), ScoreVector{1.0, 0.0}, Temperature(1.0), StepSize(1.0)),
      Error);
}

TEST(ProxMaximizer, IterationBudgetIsOracleFailure) {
  try {
    oracles::prox_objective_maximizer(SimplexPoint({0.1, 0.2, 0.7}), ScoreVector{1.0, 0.0, 2.0}, Temperature(1.0),
                                      StepSize(1.0), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OracleFailure);
  }
}

TEST(Generator, Reproducible) {
  oracles::InstanceGenerator a(99), b(99);
  EXPECT_EQ(a.scores(10).vector(), b.scores(10).vector());
  EXPECT_EQ(a.temperature().value(), b.temperature().value());
  EXPECT_EQ(a.interior_point(5).vector(), b.interior_point(5).vector());
}

TEST(Generator, Ranges) {
  oracles::InstanceGenerator g(5);
  for (int k = 0; k < 1000; ++k) {
    const auto s = g.scores(4);
    for (double x : s.values()) {
      EXPECT_GE(x, -3.0);
      EXPECT_LE(x, 3.0);
    }
    const double T = g.temperature().value();
    EXPECT_GE(T, 0.25);
    EXPECT_LE(T, 4.0);
    EXPECT_TRUE(g.interior_point(6).is_interior());
  }
}

TEST(SelfTests, Pass) { EXPECT_NO_THROW(oracles::run_self_tests()); }

TEST(Adjudication, ExpectedVerdicts) {
  const auto v = oracles::run_adjudication();
  ASSERT_EQ(v.size(), oracles::claim_matrix().size());
  auto find = [&](const std::string& id, const std::string& dyn) {
    for (const auto& x : v)
      if (x.claim_id == id && x.dynamics == dyn) return x;
    ADD_FAILURE() << "missing " << id << "/" << dyn;
    return v.front();
  };
  EXPECT_TRUE(find("prop-ascent", "exact-prox").holds);
  EXPECT_TRUE(find("thm-manifold-3", "entropic").holds);
  EXPECT_TRUE(find("cor-temp-rescale", "literal").holds);

  const auto lit = find("thm-manifold-3", "literal");
  EXPECT_FALSE(lit.holds);
  const auto* ce = std::get_if<oracles::Counterexample>(&lit.witness);
  ASSERT_NE(ce, nullptr);
  EXPECT_EQ(ce->scores, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(ce->temperature, 1.0);
  EXPECT_GT(ce->measured, 0.0);

  const auto mw = find("prop-ascent", "printed-mw");
  EXPECT_FALSE(mw.holds);
  ASSERT_TRUE(std::holds_alternative<oracles::Counterexample>(mw.witness));

  for (const auto& x : v) {
    const bool stat = std::holds_alternative<oracles::Statistic>(x.witness);
    EXPECT_EQ(stat, x.holds) << x.claim_id;
  }
  for (std::size_t k = 1; k < v.size(); ++k)
    EXPECT_LE(std::tie(v[k - 1].claim_id, v[k - 1].dynamics), std::tie(v[k].claim_id, v[k].dynamics));
}

TEST(Adjudication, FilterAndUnknownClaim) {
  oracles::AdjudicationOptions opt;
  opt.claims = {"cor-faces"};
  const auto v = oracles::run_adjudication(opt);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].claim_id, "cor-faces");
  opt.claims = {"no-such-claim"};
  EXPECT_THROW(oracles::run_adjudication(opt), Error);
}

TEST(FdSoftmaxJacobian, ResolvesConcentratedSoftmax) {
  // pi_2 is about e^-16, so the Jacobian entries are about 5e-7.
  const ScoreVector s{4.0, 0.0};
  const Temperature T(0.25);
  const auto J = softmax_jacobian(s, T);
  const auto fd = oracles::fd_softmax_jacobian(s, T);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(fd(i, j), J(i, j), 1e-6 * std::abs(J(i, j)));
}
