#include <gtest/gtest.h>

#include <cmath>

#include "adf/adf.hpp"
#include "support.hpp"

using namespace adf;

namespace {

Dual<double> seeded(double x) { return {x, 1.0}; }

}  // namespace

TEST(Dual, ArithmeticFollowsTheChainRule) {
  const Dual<double> x = seeded(3.0);
  const Dual<double> c = 2.0;
  EXPECT_EQ((x * x).tangent, 6.0);
  EXPECT_EQ((x + c).tangent, 1.0);
  EXPECT_EQ((c - x).tangent, -1.0);
  EXPECT_DOUBLE_EQ((c / x).tangent, -2.0 / 9.0);
  EXPECT_EQ((-x).tangent, -1.0);
}

TEST(Dual, MixedArithmeticWithPlainNumbers) {
  const Dual<double> x = seeded(2.0);
  EXPECT_EQ((x * 3.0).tangent, 3.0);
  EXPECT_EQ((1.0 + x).primal, 3.0);
  EXPECT_EQ((x / 2).tangent, 0.5);
}

TEST(Dual, ElementaryFunctions) {
  using std::exp;
  EXPECT_EQ(exp(seeded(0.0)).tangent, 1.0);
  EXPECT_EQ(log(seeded(2.0)).tangent, 0.5);
  EXPECT_EQ(sin(seeded(0.0)).tangent, 1.0);
  EXPECT_EQ(cos(seeded(0.0)).tangent, -0.0);
  EXPECT_EQ(sqrt(seeded(4.0)).tangent, 0.25);
  EXPECT_EQ(tanh(seeded(0.0)).tangent, 1.0);
  EXPECT_EQ(pow(seeded(2.0), 3).tangent, 12.0);
  EXPECT_DOUBLE_EQ(pow(2.0, seeded(3.0)).tangent, 8.0 * std::log(2.0));
  EXPECT_DOUBLE_EQ(pow(seeded(2.0), Dual<double>(3.0)).tangent, 12.0);
}

TEST(Dual, AbsHasZeroDerivativeAtZero) {
  EXPECT_EQ(abs(seeded(0.0)).tangent, 0.0);
  EXPECT_EQ(abs(seeded(-2.0)).tangent, -1.0);
  EXPECT_EQ(abs(seeded(2.0)).tangent, 1.0);
}

TEST(Dual, ComparisonsUsePrimalOnly) {
  EXPECT_TRUE(Dual<double>(1.0, 5.0) == Dual<double>(1.0, -5.0));
  EXPECT_TRUE(Dual<double>(1.0, 5.0) < Dual<double>(2.0, 0.0));
}

TEST(Dual, UnsupportedOperationsNameThemselves) {
  try {
    (void)atan(seeded(1.0));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("atan"), std::string::npos);
  }
  EXPECT_THROW((void)erf(seeded(1.0)), ConfigError);
  EXPECT_THROW((void)sinh(seeded(1.0)), ConfigError);
}

TEST(Dual, NestedLevelsKeepSeparateTangents) {
  // d/dx d/dy (x*y) = 1 with x and y on different levels.
  using D2 = Dual<Dual<double>>;
  const D2 x(Dual<double>(3.0, 1.0), Dual<double>(0.0, 0.0));
  const D2 y(Dual<double>(5.0, 0.0), Dual<double>(1.0, 0.0));
  const D2 p = x * y;
  EXPECT_EQ(p.primal.primal, 15.0);
  EXPECT_EQ(p.tangent.primal, 3.0);
  EXPECT_EQ(p.tangent.tangent, 1.0);
}

TEST(DualPushforward, ExpAtZero) {
  auto f = [](const auto& xs) {
    using std::exp;
    return exp(xs[0][0]);
  };
  EXPECT_EQ(dual_pushforward(f, args(0.0))(args(1.0))[0], 1.0);
}

TEST(DualPushforward, ProductSeededAlongFirstArgument) {
  auto f = [](const auto& xs) { return xs[0][0] * xs[0][1]; };
  const auto pf = dual_pushforward(f, args(vec({2.0, 3.0})));
  EXPECT_EQ(pf(args(vec({1.0, 0.0})))[0], 3.0);
  ASSERT_TRUE(pf.primal);
  EXPECT_EQ((*pf.primal)[0], 6.0);
}

TEST(DualPushforward, RejectsMismatchedSeed) {
  auto f = [](const auto& xs) { return sum(xs[0]); };
  const auto pf = dual_pushforward(f, args(vec({2.0, 3.0})));
  EXPECT_THROW(pf(args(1.0)), ShapeError);
  EXPECT_THROW(pf(args(vec({1.0}))), ShapeError);
}

TEST(DualPrimal, BitwiseEqualToPlainEvaluation) {
  auto f = [](const auto& xs) {
    using std::sin;
    using std::tanh;
    using S = carrier_t<decltype(xs)>;
    return tanh(xs[0][0] * S(0.3)) + sin(xs[0][1]) / (xs[0][0] + S(1.7));
  };
  test::Gen gen(7);
  for (int i = 0; i < 200; ++i) {
    const Args<double> xs{gen.vector(2)};
    EXPECT_EQ(dual_primal(f, xs), evaluate(f, xs));
  }
}

namespace {

/// Operation, analytic derivative in long double, and sampling domain.
struct RuleCase {
  const char* name;
  Dual<double> (*apply)(const Dual<double>&);
  long double (*derivative)(long double);
  double lo;
  double hi;
};

const RuleCase rule_cases[] = {
    {"exp", [](const Dual<double>& x) { return exp(x); }, [](long double x) { return expl(x); }, -20, 20},
    {"log", [](const Dual<double>& x) { return log(x); }, [](long double x) { return 1 / x; }, 1e-3, 1e3},
    {"sin", [](const Dual<double>& x) { return sin(x); }, [](long double x) { return cosl(x); }, -10, 10},
    {"cos", [](const Dual<double>& x) { return cos(x); }, [](long double x) { return -sinl(x); }, -10, 10},
    {"tanh", [](const Dual<double>& x) { return tanh(x); },
     [](long double x) {
       const long double c = coshl(x);
       return 1 / (c * c);
     },
     -30, 30},
    {"sqrt", [](const Dual<double>& x) { return sqrt(x); }, [](long double x) { return 1 / (2 * sqrtl(x)); }, 1e-3,
     1e3},
    {"abs", [](const Dual<double>& x) { return abs(x); },
     [](long double x) { return x > 0 ? 1.0L : (x < 0 ? -1.0L : 0.0L); }, -5, 5},
    {"square", [](const Dual<double>& x) { return x * x; }, [](long double x) { return 2 * x; }, -5, 5},
    {"reciprocal", [](const Dual<double>& x) { return 1.0 / x; }, [](long double x) { return -1 / (x * x); }, 0.1,
     10},
    {"cube", [](const Dual<double>& x) { return pow(x, 3); }, [](long double x) { return 3 * x * x; }, -5, 5},
    {"exp2", [](const Dual<double>& x) { return pow(2.0, x); },
     [](long double x) { return powl(2, x) * logl(2); }, -10, 10},
};

}  // namespace

TEST(DualRules, TangentWithinFourUlpsOfAnalyticDerivative) {
  test::Gen gen(2024);
  for (const auto& rule : rule_cases) {
    std::int64_t worst = 0;
    for (int i = 0; i < 10000; ++i) {
      const double x = gen.uniform(rule.lo, rule.hi);
      const double tangent = rule.apply(Dual<double>(x, 1.0)).tangent;
      const double expected = static_cast<double>(rule.derivative(x));
      worst = std::max(worst, test::ulp_distance(tangent, expected));
    }
    EXPECT_LE(worst, 4) << rule.name;
  }
}
