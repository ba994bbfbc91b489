#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "simplexflow/oracles.hpp"
#include "simplexflow/path_fields.hpp"

using namespace simplexflow;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix B(rows.size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double x : r) B(i, j++) = x;
    ++i;
  }
  return B;
}

double frobenius(const Matrix& B) {
  double a = 0.0;
  for (double x : B.data) a += x * x;
  return std::sqrt(a);
}

}  // namespace

TEST(ScoreField, Validation) {
  EXPECT_THROW(ScoreField::linear(ScoreVector{1.0, 0.0}, Matrix(3)), Error);
  Matrix bad(2);
  bad(0, 1) = NAN;
  EXPECT_THROW(ScoreField::linear(ScoreVector{1.0, 0.0}, bad), Error);
}

TEST(ScoreField, LipschitzBoundIsSpectralNorm) {
  const auto f = ScoreField::linear(ScoreVector{0.0, 0.0}, from_rows({{3.0, 0.0}, {0.0, -4.0}}));
  EXPECT_NEAR(f.lipschitz_bound(), 4.0, 1e-12);
  EXPECT_EQ(ScoreField::constant(ScoreVector{1.0, 2.0}).lipschitz_bound(), 0.0);
}

TEST(PathField, ReducesToFixedScores) {
  const ScoreVector s0{0.5, -0.2, 1.0};
  const SimplexPoint p({0.2, 0.3, 0.5});
  const Temperature T(0.9);
  for (auto kind : {FieldKind::LiteralReplicator, FieldKind::EntropicReplicator}) {
    const auto a = eval_path_field(ScoreField::constant(s0), kind, p, T);
    const auto b = eval_path_field(ScoreField::linear(s0, Matrix(3)), kind, p, T);
    const auto c = eval_field(kind, p, s0, T);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(a[i], c[i]);
      EXPECT_EQ(b[i], c[i]);
    }
  }
}

TEST(PathField, RotationAtUniform) {
  const auto f = ScoreField::linear(ScoreVector{0.0, 0.0, 0.0}, cyclic_antisymmetric(3, 2.0));
  const auto p = SimplexPoint::uniform(3);
  const auto s = f.scores_at(p.probs());
  EXPECT_NEAR(s[0] + s[1] + s[2], 0.0, 1e-15);
  const auto x = eval_path_field(f, FieldKind::LiteralReplicator, p, Temperature(1.0));
  EXPECT_NEAR(x[0] + x[1] + x[2], 0.0, 1e-15);
}

TEST(PathField, TangencyAndShiftInvariance) {
  oracles::InstanceGenerator gen(41);
  for (int k = 0; k < 200; ++k) {
    Matrix B(4);
    for (double& b : B.data) b = gen.uniform(-2.0, 2.0);
    const auto f = ScoreField::linear(gen.scores(4), B);
    const auto g = f.with_shifted_s0(gen.uniform(-5.0, 5.0));
    const auto p = gen.interior_point(4);
    const Temperature T = gen.temperature();
    for (auto kind : {FieldKind::LiteralReplicator, FieldKind::EntropicReplicator}) {
      const auto x = eval_path_field(f, kind, p, T);
      const auto y = eval_path_field(g, kind, p, T);
      EXPECT_NEAR(std::accumulate(x.begin(), x.end(), 0.0), 0.0, 1e-14);
      for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
    }
  }
}

TEST(PathField, AntisymmetricQuadraticFormVanishes) {
  oracles::InstanceGenerator gen(42);
  for (int k = 0; k < 100; ++k) {
    Matrix A(5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) {
        A(i, j) = gen.uniform(-3.0, 3.0);
        A(j, i) = -A(i, j);
      }
    const auto s0 = gen.scores(5);
    const auto f = ScoreField::linear(s0, A);
    const auto p = gen.interior_point(5);
    const auto s = f.scores_at(p.probs());
    double with = 0.0, without = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      with += p[i] * s[i];
      without += p[i] * s0[i];
    }
    EXPECT_NEAR(with, without, 1e-13);
  }
}

TEST(Conservative, SymmetricAndAntisymmetric) {
  const auto sym = ScoreField::linear(ScoreVector{0.0, 0.0}, from_rows({{1.0, 2.0}, {2.0, -1.0}}));
  EXPECT_TRUE(is_conservative(sym).conservative);
  EXPECT_EQ(is_conservative(sym).curl_magnitude, 0.0);

  const auto B = cyclic_antisymmetric(3, 1.5);
  const auto anti = is_conservative(ScoreField::linear(ScoreVector{0.0, 0.0, 0.0}, B));
  EXPECT_FALSE(anti.conservative);
  EXPECT_NEAR(anti.curl_magnitude, 2.0 * frobenius(B), 1e-12);
}

TEST(Conservative, MixedPartsMeasureCurl) {
  oracles::InstanceGenerator gen(43);
  Matrix S(4), A(4), B(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i; j < 4; ++j) {
      S(i, j) = S(j, i) = gen.uniform(-1.0, 1.0);
      if (i != j) {
        A(i, j) = gen.uniform(-1.0, 1.0);
        A(j, i) = -A(i, j);
      }
    }
  for (std::size_t k = 0; k < 16; ++k) B.data[k] = S.data[k] + A.data[k];
  EXPECT_NEAR(is_conservative(ScoreField::linear(ScoreVector{0.0, 0.0, 0.0, 0.0}, B)).curl_magnitude, 2.0 * frobenius(A),
              1e-12);
}

TEST(Recurrence, ConvergingRunIsNotRecurrent) {
  const ScoreVector s{0.3, -0.4, 1.0};
  const auto tr = integrate(FieldKind::EntropicReplicator, SimplexPoint({0.6, 0.3, 0.1}), s,
                            TemperatureSchedule::constant(1.0), 200.0);
  EXPECT_FALSE(detect_recurrence(tr).recurrent);
}

TEST(Recurrence, StationaryStartNeverLeaves) {
  const ScoreVector s{0.3, -0.4, 1.0};
  IntegratorControls ctl;
  ctl.stop_on_convergence = false;
  const auto tr = integrate(FieldKind::EntropicReplicator, softmax(s, Temperature(1.0)), s,
                            TemperatureSchedule::constant(1.0), 50.0, ctl);
  EXPECT_FALSE(detect_recurrence(tr).recurrent);
}

TEST(Recurrence, RotationalLiteralFieldCloses) {
  const auto f = ScoreField::linear(ScoreVector{0.2, 0.0, 0.0}, cyclic_antisymmetric(3, 1.0));
  IntegratorControls ctl;
  ctl.sample_times.resize(2001);
  for (std::size_t k = 0; k <= 2000; ++k) ctl.sample_times[k] = 50.0 * double(k) / 2000.0;
  const auto tr = integrate_path(f, FieldKind::LiteralReplicator, SimplexPoint::uniform(3), Temperature(1.0), 50.0, ctl);
  const auto r = detect_recurrence(tr);
  ASSERT_TRUE(r.recurrent);
  EXPECT_LE(r.return_distance, 1e-3);
  EXPECT_GT(*r.first_return_time, 0.5);
}

TEST(Recurrence, NeedsTwoSamples) {
  TrajectoryRecord tr;
  tr.samples.push_back(TrajectorySample{});
  EXPECT_THROW(detect_recurrence(tr), Error);
}

TEST(Lockin, ConstantEntropicSingleBasin) {
  oracles::InstanceGenerator gen(44);
  const auto s0 = gen.scores(4);
  std::vector<SimplexPoint> starts;
  for (int k = 0; k < 50; ++k) starts.push_back(gen.interior_point(4));
  const Temperature T(0.8);
  const auto rep = lockin_probe(ScoreField::constant(s0), FieldKind::EntropicReplicator, starts, T, 1e3);
  ASSERT_EQ(rep.basins.size(), 1u);
  EXPECT_EQ(rep.basins[0].members.size(), 50u);
  const auto pi = softmax(s0, T);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(rep.basins[0].center[i], pi[i], 1e-4);
}

TEST(Lockin, ConstantLiteralSingleVertex) {
  const ScoreVector s0{0.1, 1.2, -0.3};
  oracles::InstanceGenerator gen(45);
  std::vector<SimplexPoint> starts;
  for (int k = 0; k < 50; ++k) starts.push_back(gen.interior_point(3));
  const auto rep = lockin_probe(ScoreField::constant(s0), FieldKind::LiteralReplicator, starts, Temperature(1.0), 1e3);
  ASSERT_EQ(rep.basins.size(), 1u);
  EXPECT_GT(rep.basins[0].center[1], 1.0 - 1e-4);
}

TEST(Lockin, SymmetricCouplingFindsSeveralBasins) {
  const auto mb = oracles::find_multibasin_instance(Temperature(0.2));
  EXPECT_GE(mb.basins, 2u);
  EXPECT_TRUE(is_conservative(ScoreField::linear(ScoreVector{0.0, 0.0, 0.0}, mb.B)).conservative);
}

TEST(Lockin, BoundaryStartRejected) {
  const SimplexPoint starts[] = {SimplexPoint({1.0, 0.0})};
  try {
    lockin_probe(ScoreField::constant(ScoreVector{1.0, 0.0}), FieldKind::EntropicReplicator, starts, Temperature(1.0), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInterior);
  }
}

TEST(GeneralizedFreeEnergy, ReducesAndIsMonotoneForSymmetricCoupling) {
  const ScoreVector s0{0.2, -0.1, 0.4};
  const SimplexPoint p({0.3, 0.3, 0.4});
  EXPECT_DOUBLE_EQ(generalized_free_energy(ScoreField::constant(s0), p, Temperature(1.0)),
                   free_energy(p, s0, Temperature(1.0)).value);

  oracles::InstanceGenerator gen(46);
  for (int k = 0; k < 30; ++k) {
    Matrix B(3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) B(i, j) = B(j, i) = gen.uniform(-3.0, 3.0);
    const auto f = ScoreField::linear(gen.scores(3), B);
    const Temperature T = gen.temperature();
    IntegratorControls ctl;
    ctl.num_samples = 400;
    const auto tr = integrate_path(f, FieldKind::EntropicReplicator, gen.interior_point(3), T, 200.0, ctl);
    for (std::size_t j = 1; j < tr.samples.size(); ++j)
      ASSERT_GE(tr.samples[j].free_energy - tr.samples[j - 1].free_energy, -1e-9);
  }
}
