#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <memory>

#include "diffsw/calibrate.hpp"
#include "diffsw/errors.hpp"
#include "diffsw/gradcheck.hpp"
#include "test_support.hpp"

using namespace diffsw;
using namespace diffsw::gradcheck;

namespace {

ad::NamedInputs one_scalar(double x) {
  ad::NamedInputs in;
  in.add("x", Field::scalar(x));
  return in;
}

struct SmallProblem {
  GridSpec g = make_channel_grid(16, 12, 1e6, 7.5e5, 500.0, -1e-4, 2e-11);
  PhysParams p;
  StepConfig c;
  ModelState s0;

  SmallProblem() {
    p.A_h = kTruthAh;
    p.r_bot = kTruthRbot;
    p.tau0 = 0.1;
    p.kappa_T = 500.0;
    p.lambda_relax = 1e-6;
    p.T_star = linear_temperature(g, 2.0, 12.0);
    c = StepConfig{0.5 * cfl_limit_dt(g, p), 1};
    s0 = calibrate::spun_up_state(g, p, c, 200, 0.3, 0, 5);
  }

  LossFamily family() const { return calibrate::bsf_loss_family(s0, p, g, c, 1.5, 0.5); }
};

}  // namespace

TEST(FdDirectional, QuadraticAndCubic) {
  ad::PureFunction sq([](const auto& x) { return ops::square(x[0]); });
  EXPECT_NEAR(fd_directional(sq, {Field::scalar(3.0)}, {Field::scalar(1.0)}, 1e-4), 6.0, 1e-10);
  ad::PureFunction cube([](const auto& x) { return ops::mul(ops::square(x[0]), x[0]); });
  EXPECT_NEAR(fd_directional(cube, {Field::scalar(1.0)}, {Field::scalar(1.0)}, 1e-2), 3.0001,
              1e-12);
}

TEST(FdDirectional, ExactlyTwoEvaluations) {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ad::PureFunction sq([calls](const auto& x) {
    ++*calls;
    return ops::square(x[0]);
  });
  (void)fd_directional(sq, {Field::scalar(3.0)}, {Field::scalar(1.0)}, 1e-3);
  EXPECT_EQ(calls->load(), 2);
}

TEST(FdDirectional, Preconditions) {
  ad::PureFunction sq([](const auto& x) { return ops::square(x[0]); });
  EXPECT_THROW(fd_directional(sq, {Field::scalar(3.0)}, {Field::scalar(1.0)}, 0.0), InvalidArgument);
  EXPECT_THROW(fd_directional(sq, {Field::scalar(3.0)}, {Field::scalar(1.0 + 1e-9)}, 1e-4),
               InvalidArgument);
  ad::PureFunction huge([](const auto& x) { return ops::cmul(1e308, ops::square(x[0])); });
  EXPECT_THROW(fd_directional(huge, {Field::scalar(10.0)}, {Field::scalar(1.0)}, 1e-4),
               NonFiniteState);
}

TEST(RandomDirection, UnitNormAndFrozenZero) {
  ad::NamedInputs in;
  in.add("a", Field(4, 4, Stagger::center, 1.0));
  in.add("b", Field(4, 4, Stagger::u_face, 1.0));
  std::vector<Field> k = random_direction(in, ad::DiffSelector::only({"b"}), 3);
  EXPECT_EQ(max_abs(k[0]), 0.0);
  EXPECT_NEAR(dot(k[1], k[1]), 1.0, 1e-15);
  std::vector<Field> again = random_direction(in, ad::DiffSelector::only({"b"}), 3);
  EXPECT_TRUE(bitwise_equal(k[1], again[1]));
  EXPECT_THROW(random_direction(in, ad::DiffSelector::none(), 3), InvalidArgument);
}

TEST(GradError, ConstantLossHasUndefinedAccuracy) {
  ad::PureFunction constant([](const auto& x) {
    using V = std::decay_t<decltype(x[0])>;
    return ops::add(ops::cmul(0.0, ops::sum(x[0])), ops::scalar<V>(5.0));
  });
  for (Mode m : {Mode::jvp, Mode::vjp}) {
    Report r = grad_error(constant, one_scalar(2.0), ad::DiffSelector::all(), 1e-4, 1, m);
    EXPECT_EQ(r.ad_value, 0.0);
    EXPECT_EQ(r.fd_value, 0.0);
    EXPECT_EQ(r.error, 0.0);
    EXPECT_FALSE(r.accuracy.has_value());
  }
}

TEST(GradError, SingleModelStepWithinTolerance) {
  SmallProblem sp;
  LossProblem prob = sp.family()(1);
  EXPECT_NEAR(prob.loss(prob.point.values)[0].item(), 1.0, 1e-15);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Report a = grad_error(prob.loss, prob.point, ad::DiffSelector::all(), 1e-4, seed, Mode::jvp, 1);
    Report b = grad_error(prob.loss, prob.point, ad::DiffSelector::all(), 1e-4, seed, Mode::vjp, 1);
    EXPECT_LE(a.error, 1e-6);
    EXPECT_LE(b.error, 1e-6);
    EXPECT_LE(test_util::rel_diff(a.ad_value, b.ad_value), 1e-10);
    EXPECT_EQ(a.fd_value, b.fd_value);
    EXPECT_GE(a.error, 0.0);
    EXPECT_LE(*a.accuracy, 1.0);
  }
}

TEST(GradError, DeterministicGivenSeed) {
  SmallProblem sp;
  LossProblem prob = sp.family()(3);
  Report a = grad_error(prob.loss, prob.point, ad::DiffSelector::all(), 1e-4, 9, Mode::vjp, 3);
  Report b = grad_error(prob.loss, prob.point, ad::DiffSelector::all(), 1e-4, 9, Mode::vjp, 3);
  EXPECT_EQ(std::memcmp(&a.ad_value, &b.ad_value, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&a.fd_value, &b.fd_value, sizeof(double)), 0);
}

TEST(GradError, ErrorShrinksWithEpsInTruncationRegime) {
  SmallProblem sp;
  LossProblem prob = sp.family()(24);
  const ad::DiffSelector sel = ad::DiffSelector::only({"A_h", "r_bot"});
  Report e3 = grad_error(prob.loss, prob.point, sel, 1e-3, 4, Mode::jvp, 24);
  Report e4 = grad_error(prob.loss, prob.point, sel, 1e-4, 4, Mode::jvp, 24);
  Report e5 = grad_error(prob.loss, prob.point, sel, 1e-5, 4, Mode::jvp, 24);
  EXPECT_LT(e4.error, e3.error);
  EXPECT_LE(e5.error, 10 * e4.error);  // floors at round-off, does not blow up
}

TEST(AccuracyOverSteps, ReportsEveryStepAndMode) {
  SmallProblem sp;
  std::vector<Report> r =
      accuracy_over_steps(sp.family(), {1, 2, 4}, ad::DiffSelector::only({"r_bot"}), 1e-4, 2);
  ASSERT_EQ(r.size(), 6u);
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_EQ(r[k].mode, k % 2 == 0 ? Mode::jvp : Mode::vjp);
    ASSERT_TRUE(r[k].accuracy.has_value());
    EXPECT_GE(*r[k].accuracy, 0.99);
  }
  EXPECT_EQ(r[4].n_steps, 4);
  EXPECT_THROW(accuracy_over_steps(sp.family(), {4, 1}, ad::DiffSelector::only({"r_bot"}), 1e-4, 2),
               InvalidArgument);
}

TEST(AccuracyOverSteps, LinearLossIsExact) {
  LossFamily fam = [](int n) {
    ad::NamedInputs in;
    in.add("r_bot", Field::scalar(1e-5));
    const double c = 3.0 * n;
    return LossProblem{ad::PureFunction([c](const auto& x) { return ops::cmul(c, x[0]); }), in};
  };
  for (const Report& r :
       accuracy_over_steps(fam, {1, 2, 4, 8}, ad::DiffSelector::all(), 1e-4, 1)) {
    EXPECT_NEAR(*r.accuracy, 1.0, 1e-10);
  }
}

TEST(CostScaling, TableAndSlope) {
  SmallProblem sp;
  std::vector<TimingRow> rows = cost_scaling(sp.family(), {2, 4}, 3, ad::DiffSelector::all());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].n_steps, 4);
  EXPECT_GT(rows[0].vjp_ms, 0.0);
  EXPECT_GT(rows[0].forward_ms, 0.0);
  EXPECT_THROW(cost_scaling(sp.family(), {2}, 2, ad::DiffSelector::all()), InvalidArgument);

  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 6, 12, 24}), 1.0, 1e-12);
  EXPECT_NEAR(loglog_slope({1, 10, 100}, {5, 500, 50000}), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope({1, 2}, {1, -1}), DomainError);
}

TEST(NormalizeAt, ScalesToUnit) {
  ad::PureFunction sq([](const auto& x) { return ops::square(x[0]); });
  ad::PureFunction n = normalize_at(sq, {Field::scalar(-4.0)});
  EXPECT_EQ(n(std::vector<Field>{Field::scalar(-4.0)})[0].item(), 1.0);
  ad::PureFunction z = normalize_at(sq, {Field::scalar(0.0)});
  EXPECT_EQ(z(std::vector<Field>{Field::scalar(2.0)})[0].item(), 4.0);
}
