#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diffsw/autodiff.hpp"
#include "diffsw/dyncore.hpp"
#include "diffsw/errors.hpp"
#include "test_support.hpp"

using namespace diffsw;
using namespace diffsw::ad;
using diffsw::test_util::random_field;
using diffsw::test_util::rel_diff;

namespace {

Field fscalar(double x) { return Field::scalar(x); }

double inner(const std::vector<Field>& a, const std::vector<Field>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += dot(a[k], b[k]);
  return acc;
}

std::vector<Field> random_like(const std::vector<Field>& xs, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Field> out;
  for (const Field& x : xs) {
    Field f = Field::zeros_like(x);
    for (double& v : f.values()) v = n(rng);
    if (f.stagger() == Stagger::v_face) {
      for (int i = 0; i < f.nx(); ++i) f(i, f.ny() - 1) = 0.0;  // wall row carries no flow
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::optional<Field>> as_tangents(const std::vector<Field>& k) {
  return {k.begin(), k.end()};
}

// Small quadratic-drag model so the sqrt override and every primitive are exercised.
struct SmallModel {
  GridSpec g = make_channel_grid(6, 5, 6e5, 5e5, 400.0, -1e-4, 2e-11);
  PhysParams p;
  StepConfig c;
  ModelState s0;

  explicit SmallModel(DragMode mode = DragMode::quadratic, std::uint64_t seed = 1) {
    p.A_h = 2e4;
    p.r_bot = 2e-5;
    p.drag_mode = mode;
    p.C_d = 2e-3;
    p.tau0 = 0.1;
    p.kappa_T = 1e3;
    p.lambda_relax = 1e-6;
    p.T_star = linear_temperature(g, 1.0, 9.0);
    c = StepConfig{0.5 * cfl_limit_dt(g, p), 1};
    s0 = diffsw::test_util::random_state(g, seed, 0.2);
  }

  std::vector<Field> leaves() const { return model_inputs(s0, p).values; }
};

// Scales tangents so perturbations of the parameters stay proportionate.
std::vector<Field> scaled_direction(const std::vector<Field>& x, std::mt19937_64& rng) {
  std::vector<Field> k = random_like(x, rng);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = max_abs(x[i]);
    k[i] *= (s > 0 ? s : 1.0);
  }
  return k;
}

}  // namespace

TEST(Jvp, SquareAtThree) {
  PureFunction f([](const auto& x) { return ops::square(x[0]); });
  JvpResult r = jvp(f, {fscalar(3.0)}, {fscalar(1.0)});
  EXPECT_EQ(r.values[0].item(), 9.0);
  EXPECT_EQ(r.tangents[0].item(), 6.0);
}

TEST(Vjp, SquareAtThree) {
  PureFunction f([](const auto& x) { return ops::square(x[0]); });
  VjpResult r = vjp(f, {fscalar(3.0)}, {fscalar(1.0)});
  EXPECT_EQ(r.values[0].item(), 9.0);
  EXPECT_EQ(r.gradients[0]->item(), 6.0);
}

TEST(Grad, SumOfSquares) {
  PureFunction f([](const auto& x) {
    using V = std::decay_t<decltype(x[0])>;
    return ops::add<V>(ops::square(x[0]), ops::square(x[1]));
  });
  NamedInputs in;
  in.add("a", fscalar(1.0));
  in.add("b", fscalar(2.0));
  GradResult r = grad(f, in, DiffSelector::all());
  EXPECT_EQ(r.loss, 5.0);
  EXPECT_EQ(r.at("a").item(), 2.0);
  EXPECT_EQ(r.at("b").item(), 4.0);

  GradResult frozen = grad(f, in, DiffSelector::none());
  EXPECT_EQ(frozen.loss, 5.0);
  EXPECT_TRUE(frozen.gradients.empty());

  GradResult only_b = grad(f, in, DiffSelector::only({"b"}));
  ASSERT_EQ(only_b.names.size(), 1u);
  EXPECT_EQ(only_b.names[0], "b");
  EXPECT_THROW(only_b.at("a"), InvalidArgument);
  EXPECT_THROW(grad(f, in, DiffSelector::only({"c"})), InvalidArgument);
}

TEST(Grad, RejectsNonScalarLoss) {
  PureFunction f([](const auto& x) { return x[0]; });
  NamedInputs in;
  in.add("x", Field(4, 4, Stagger::center, 1.0));
  EXPECT_THROW(grad(f, in, DiffSelector::all()), ShapeMismatch);
}

TEST(SqrtReg, Examples) {
  EXPECT_EQ(sqrt_reg(4.0), 2.0);
  EXPECT_EQ(sqrt_reg_grad(4.0), 0.25);
  EXPECT_EQ(sqrt_reg(0.0), 0.0);
  EXPECT_DOUBLE_EQ(sqrt_reg_grad(0.0, 1e-12), 5e5);
  const double eps = 1e-12;
  const double at = sqrt_reg_grad(eps, eps);
  EXPECT_DOUBLE_EQ(at, 1.0 / (2.0 * std::sqrt(eps)));
  EXPECT_DOUBLE_EQ(sqrt_reg_grad(std::nextafter(eps, 0.0), eps), at);
  EXPECT_NEAR(sqrt_reg_grad(std::nextafter(eps, 1.0), eps), at, 1e-9 * at);
  EXPECT_THROW(sqrt_reg(-1.0), DomainError);
}

TEST(SqrtReg, ForwardModeUsesTheSameRule) {
  PureFunction f([](const auto& x) { return ops::sqrt_reg(x[0], 1e-12); });
  JvpResult r = jvp(f, {fscalar(0.0)}, {fscalar(1.0)});
  EXPECT_EQ(r.values[0].item(), 0.0);
  EXPECT_DOUBLE_EQ(r.tangents[0].item(), 5e5);
}

TEST(SqrtReg, BuiltinRuleIsSingularAtZero) {
  Registry plain = Registry::with_builtins();
  PureFunction f([](const auto& x) { return ops::sqrt_reg(x[0]); });
  VjpOptions o;
  o.registry = &plain;
  VjpResult r = vjp(f, {fscalar(0.0)}, {fscalar(1.0)}, {}, o);
  EXPECT_TRUE(std::isinf(r.gradients[0]->item()));
}

TEST(Registry, DuplicateRegistrationFails) {
  Registry r = Registry::with_builtins();
  RegistryHandle h = r.register_custom_gradient(sqrt_reg_entry());
  EXPECT_EQ(h.primitive, "sqrt");
  EXPECT_TRUE(r.is_overridden("sqrt"));
  EXPECT_THROW(r.register_custom_gradient(sqrt_reg_entry()), DuplicateRegistration);
}

TEST(Registry, UnregisteredPrimitiveIsReported) {
  static const Primitive exotic{
      "exotic", [](std::span<const Field* const> in, const Attrs&) { return 2.0 * Field(*in[0]); },
      1};
  PureFunction f([](const auto& x) { return ad::apply(exotic, {}, {&x[0]}); });
  // Plain evaluation needs no rule.
  EXPECT_EQ(f(std::vector<Field>{fscalar(2.0)})[0].item(), 4.0);
  EXPECT_THROW(jvp(f, {fscalar(2.0)}, {fscalar(1.0)}), UnregisteredPrimitive);
  EXPECT_THROW(vjp(f, {fscalar(2.0)}, {fscalar(1.0)}), UnregisteredPrimitive);

  // Registering rules makes the new primitive differentiable.
  Registry r = Registry::with_builtins();
  CustomGradientEntry e;
  e.primitive = "exotic";
  e.backward = [](const Call&, const Field& ct, std::span<Field* const> g) {
    if (g[0]) *g[0] += 2.0 * Field(ct);
  };
  e.tangent = [](const Call& c, std::span<const Field* const> t) {
    return t[0] ? 2.0 * Field(*t[0]) : Field::zeros_like(c.output);
  };
  r.register_custom_gradient(e);
  EXPECT_EQ(jvp(f, {fscalar(2.0)}, {fscalar(1.0)}, r).tangents[0].item(), 2.0);
  VjpOptions o;
  o.registry = &r;
  EXPECT_EQ(vjp(f, {fscalar(2.0)}, {fscalar(1.0)}, {}, o).gradients[0]->item(), 2.0);
}

TEST(Registry, OverrideNeverChangesPrimal) {
  SmallModel m(DragMode::quadratic);
  m.s0.u = Field::zeros_like(m.s0.u);  // speed exactly zero on many faces
  m.s0.v = Field::zeros_like(m.s0.v);
  m.p.tau0 = 0.0;
  Registry plain = Registry::with_builtins();
  Registry custom = Registry::with_builtins();
  custom.register_custom_gradient(sqrt_reg_entry());
  PureFunction f = rollout_function(m.p, m.g, m.c, 3);

  VjpOptions a;
  a.registry = &plain;
  VjpOptions b;
  b.registry = &custom;
  std::vector<Field> ones;
  for (const Field& y : f(m.leaves())) ones.push_back(Field(y.nx(), y.ny(), y.stagger(), 1.0));
  VjpResult ra = vjp(f, m.leaves(), ones, {}, a);
  VjpResult rb = vjp(f, m.leaves(), ones, {}, b);
  for (std::size_t k = 0; k < ra.values.size(); ++k) {
    EXPECT_TRUE(bitwise_equal(ra.values[k], rb.values[k]));
  }
  // Zero speed: the built-in sqrt rule blows up while the override stays finite.
  EXPECT_FALSE(all_finite(*ra.gradients[0]));
  EXPECT_TRUE(all_finite(*rb.gradients[0]));
}

TEST(Purity, NoEntryPointMutatesInputs) {
  SmallModel m;
  const std::vector<Field> x = m.leaves();
  const std::vector<Field> before = x;
  PureFunction f = rollout_function(m.p, m.g, m.c, 2);
  std::mt19937_64 rng(4);
  std::vector<Field> k = random_like(x, rng);
  const std::vector<Field> k_before = k;
  std::vector<Field> v = random_like(f(x), rng);
  const std::vector<Field> v_before = v;
  (void)jvp(f, x, as_tangents(k));
  (void)vjp(f, x, v);
  NamedInputs in = model_inputs(m.s0, m.p);
  PureFunction loss([f](const auto& leaves) { return ops::sum(ops::square(f(leaves)[3])); });
  (void)grad(loss, in, DiffSelector::only({"A_h", "T"}));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(x[i], before[i]));
    EXPECT_TRUE(bitwise_equal(k[i], k_before[i]));
    EXPECT_TRUE(bitwise_equal(in.values[i], before[i]));
  }
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_TRUE(bitwise_equal(v[i], v_before[i]));
}

TEST(ForwardPreservation, WrappersReproducePlainEvaluation) {
  for (DragMode mode : {DragMode::linear, DragMode::quadratic}) {
    SmallModel m(mode, 9);
    PureFunction f = rollout_function(m.p, m.g, m.c, 4);
    std::vector<Field> plain = f(m.leaves());
    std::mt19937_64 rng(10);
    JvpResult j = jvp(f, m.leaves(), as_tangents(random_like(m.leaves(), rng)));
    std::vector<Field> zero_k;
    for (const Field& x : m.leaves()) zero_k.push_back(Field::zeros_like(x));
    JvpResult j0 = jvp(f, m.leaves(), as_tangents(zero_k));
    VjpResult v = vjp(f, m.leaves(), random_like(plain, rng));
    for (std::size_t k = 0; k < plain.size(); ++k) {
      EXPECT_TRUE(bitwise_equal(plain[k], j.values[k]));
      EXPECT_TRUE(bitwise_equal(plain[k], j0.values[k]));
      EXPECT_TRUE(bitwise_equal(plain[k], v.values[k]));
      EXPECT_EQ(max_abs(j0.tangents[k]), 0.0);
    }
  }
}

TEST(JvpProperties, LinearInTangent) {
  SmallModel m;
  PureFunction f = rollout_function(m.p, m.g, m.c, 3);
  const std::vector<Field> x = m.leaves();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = coef(rng);
    const double b = coef(rng);
    std::vector<Field> k1 = scaled_direction(x, rng);
    std::vector<Field> k2 = scaled_direction(x, rng);
    std::vector<Field> k12;
    for (std::size_t i = 0; i < x.size(); ++i) k12.push_back(a * k1[i] + b * k2[i]);
    JvpResult r1 = jvp(f, x, as_tangents(k1));
    JvpResult r2 = jvp(f, x, as_tangents(k2));
    JvpResult r12 = jvp(f, x, as_tangents(k12));
    for (std::size_t o = 0; o < r12.tangents.size(); ++o) {
      Field combo = a * r1.tangents[o] + b * r2.tangents[o];
      const double scale = std::abs(a) * max_abs(r1.tangents[o]) + std::abs(b) * max_abs(r2.tangents[o]);
      for (std::size_t e = 0; e < combo.size(); ++e) {
        EXPECT_LE(std::abs(combo[e] - r12.tangents[o][e]), 1e-12 * scale + 1e-300);
      }
    }
  }
}

TEST(VjpProperties, TransposeIdentityOverRollouts) {
  for (DragMode mode : {DragMode::linear, DragMode::quadratic}) {
    SmallModel m(mode, 13);
    const std::vector<Field> x = m.leaves();
    std::mt19937_64 rng(14);
    for (int n = 1; n <= 8; ++n) {
      PureFunction f = rollout_function(m.p, m.g, m.c, n);
      std::vector<Field> k = scaled_direction(x, rng);
      std::vector<Field> v = random_like(f(x), rng);
      JvpResult j = jvp(f, x, as_tangents(k));
      VjpResult r = vjp(f, x, v);
      std::vector<Field> jt;
      for (auto& gopt : r.gradients) jt.push_back(*gopt);
      const double lhs = inner(v, j.tangents);
      const double rhs = inner(jt, k);
      EXPECT_LE(rel_diff(lhs, rhs), 1e-10) << "n=" << n << " lhs=" << lhs << " rhs=" << rhs;
    }
  }
}

TEST(VjpProperties, DenseJacobianOnFourByFour) {
  GridSpec g = make_channel_grid(4, 4, 4e5, 4e5, 100.0, -1e-4, 2e-11);
  PhysParams p;
  p.A_h = 1e4;
  p.r_bot = 1e-5;
  p.drag_mode = DragMode::quadratic;
  p.C_d = 2e-3;
  p.tau0 = 0.1;
  p.kappa_T = 1e3;
  p.lambda_relax = 1e-6;
  StepConfig c{0.5 * cfl_limit_dt(g, p), 1};
  ModelState s = diffsw::test_util::random_state(g, 15, 0.2);
  std::vector<Field> x = model_inputs(s, p).values;
  PureFunction f = rollout_function(p, g, c, 1);
  std::vector<Field> y = f(x);

  std::size_t n_in = 0;
  for (const Field& xi : x) n_in += xi.size();
  std::size_t n_out = 0;
  for (const Field& yo : y) n_out += yo.size();

  // Columns by jvp with basis tangents.
  std::vector<std::vector<double>> J_cols(n_in, std::vector<double>(n_out));
  std::size_t col = 0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t e = 0; e < x[a].size(); ++e, ++col) {
      std::vector<std::optional<Field>> t(x.size());
      for (std::size_t b = 0; b < x.size(); ++b) t[b] = Field::zeros_like(x[b]);
      (*t[a])[e] = 1.0;
      JvpResult r = jvp(f, x, t);
      std::size_t row = 0;
      for (const Field& to : r.tangents) {
        for (double val : to.values()) J_cols[col][row++] = val;
      }
    }
  }
  // Rows by vjp with basis cotangents.
  std::size_t row = 0;
  double max_err = 0.0;
  for (std::size_t o = 0; o < y.size(); ++o) {
    for (std::size_t e = 0; e < y[o].size(); ++e, ++row) {
      std::vector<Field> ct;
      for (const Field& yo : y) ct.push_back(Field::zeros_like(yo));
      ct[o][e] = 1.0;
      VjpResult r = vjp(f, x, ct);
      std::size_t cc = 0;
      for (auto& gopt : r.gradients) {
        for (double val : gopt->values()) {
          const double ref = J_cols[cc++][row];
          const double err = std::abs(val - ref) / std::max(1.0, std::abs(ref));
          max_err = std::max(max_err, err);
        }
      }
    }
  }
  EXPECT_LE(max_err, 1e-10);

  // Independent finite-difference oracle for the state columns (all smooth here).
  std::size_t checked = 0;
  col = 0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t e = 0; e < x[a].size(); ++e, ++col) {
      if (a == 1 && e >= x[a].size() - static_cast<std::size_t>(g.nx)) continue;  // v wall row
      const double h = 1e-6 * std::max(1.0, std::abs(x[a][e]));
      std::vector<Field> xp = x;
      std::vector<Field> xm = x;
      xp[a][e] += h;
      xm[a][e] -= h;
      std::vector<Field> yp = f(xp);
      std::vector<Field> ym = f(xm);
      std::size_t r = 0;
      for (std::size_t o = 0; o < y.size(); ++o) {
        for (std::size_t q = 0; q < y[o].size(); ++q, ++r) {
          const double fd = (yp[o][q] - ym[o][q]) / (2 * h);
          EXPECT_NEAR(J_cols[col][r], fd, 1e-6 * std::max(1.0, std::abs(fd)));
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Selector, FrozenLeavesGetNoTapeNodes) {
  SmallModel m;
  NamedInputs in = model_inputs(m.s0, m.p);
  PureFunction f = rollout_function(m.p, m.g, m.c, 1);
  PureFunction loss([f](const auto& leaves) { return ops::sum(ops::square(f(leaves)[3])); });
  std::vector<bool> all(in.values.size(), true);
  std::vector<bool> only_T = DiffSelector::only({"T"}).mask(in);
  VjpResult full = vjp(loss, in.values, {fscalar(1.0)}, all);
  VjpResult part = vjp(loss, in.values, {fscalar(1.0)}, only_T);
  EXPECT_LT(part.tape_nodes, full.tape_nodes);
  EXPECT_EQ(part.values[0].item(), full.values[0].item());
  for (std::size_t i = 0; i < in.values.size(); ++i) {
    EXPECT_EQ(part.gradients[i].has_value(), in.names[i] == "T");
  }
  const std::size_t t = in.index_of("T");
  EXPECT_TRUE(bitwise_equal(*part.gradients[t], *full.gradients[t]));

  // With no active leaf nothing is recorded at all.
  VjpResult none = vjp(loss, in.values, {fscalar(1.0)}, std::vector<bool>(in.values.size(), false));
  EXPECT_EQ(none.tape_nodes, 0u);
}

TEST(Tape, InvariantsOnModelRollout) {
  SmallModel m;
  Tape tape;
  std::vector<Var> leaves;
  for (const Field& x : m.leaves()) leaves.push_back(tape.variable(x));
  PureFunction f = rollout_function(m.p, m.g, m.c, 3);
  std::vector<Var> out = f(leaves);
  EXPECT_TRUE(tape.replay_matches());

  std::vector<std::pair<Var, Field>> seeds;
  for (const Var& o : out) seeds.emplace_back(o, Field(o.primal().nx(), o.primal().ny(), o.primal().stagger(), 1.0));
  Tape::SweepStats stats;
  (void)tape.backward(seeds, leaves, &stats);
  ASSERT_FALSE(stats.order.empty());
  for (std::size_t k = 1; k < stats.order.size(); ++k) {
    EXPECT_LT(stats.order[k], stats.order[k - 1]);  // strictly decreasing: once each, in reverse
  }
}

TEST(Tape, MemoryBudgetNamesTheStep) {
  SmallModel m;
  PureFunction f = rollout_function(m.p, m.g, m.c, 50);
  VjpOptions o;
  o.max_tape_bytes = 200 * 1024;
  std::vector<Field> ct;
  for (const Field& y : f(m.leaves())) ct.push_back(Field::zeros_like(y));
  try {
    (void)vjp(f, m.leaves(), ct, {}, o);
    FAIL() << "expected TapeExhausted";
  } catch (const TapeExhausted& e) {
    EXPECT_GT(e.step(), 0);
    EXPECT_LE(e.step(), 50);
    EXPECT_NE(std::string(e.what()).find("step " + std::to_string(e.step())), std::string::npos);
  }
}

TEST(FiniteDifference, CentralDifferenceIsSecondOrder) {
  SmallModel m(DragMode::quadratic, 17);
  NamedInputs in = model_inputs(m.s0, m.p);
  PureFunction f = rollout_function(m.p, m.g, m.c, 2);
  PureFunction loss([f](const auto& leaves) {
    return ops::sum(ops::square(f(leaves)[2]));  // eta enters nonlinearly through squares
  });
  std::mt19937_64 rng(18);
  std::vector<Field> k = scaled_direction(in.values, rng);
  // Keep the upwind branches fixed: perturb only smooth directions of size 1e-2.
  DirectionalResult d = directional(loss, in, DiffSelector::all(), k);
  std::vector<double> eps = {1e-2, 1e-3, 1e-4};
  std::vector<double> err;
  for (double e : eps) {
    std::vector<Field> xp = in.values;
    std::vector<Field> xm = in.values;
    for (std::size_t i = 0; i < xp.size(); ++i) {
      xp[i].axpy(e, k[i]);
      xm[i].axpy(-e, k[i]);
    }
    const double fd = (loss(xp)[0].item() - loss(xm)[0].item()) / (2 * e);
    err.push_back(std::abs(fd - d.derivative));
  }
  const double slope = (std::log(err[2]) - std::log(err[0])) / (std::log(eps[2]) - std::log(eps[0]));
  EXPECT_GE(slope, 1.8) << err[0] << " " << err[1] << " " << err[2];
}
