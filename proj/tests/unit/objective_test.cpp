#include <gtest/gtest.h>

#include <cmath>

#include "cul/errors.hpp"
#include "cul/objective.hpp"
#include "cul/problems.hpp"
#include "oracles.hpp"

using cul::ParamVector;

namespace {
ParamVector v2(double x, double y) { return (ParamVector(2) << x, y).finished(); }
}  // namespace

TEST(QuadraticPair, DirectEvaluation) {
    const auto p = cul::make_quadratic_pair(v2(0, 0), v2(1, 0));
    const auto e = p.evaluate_full(v2(0.5, 0));
    EXPECT_DOUBLE_EQ(e.f1, 0.25);
    EXPECT_DOUBLE_EQ(e.f2, 0.25);
    EXPECT_EQ(e.grad_f1, v2(1, 0));
    EXPECT_EQ(e.grad_f2, v2(-1, 0));
}

TEST(QuadraticPair, CoincidentMinimizers) {
    const auto p = cul::make_quadratic_pair(v2(0, 0), v2(0, 0));
    for (double x : {-1.0, 0.3, 2.0}) {
        const auto e = p.evaluate_full(v2(x, 0.7));
        EXPECT_EQ(e.f1, e.f2);
    }
}

TEST(QuadraticPair, LengthMismatch) {
    EXPECT_THROW((void)cul::make_quadratic_pair(v2(0, 0), ParamVector::Zero(3)), cul::InvalidArgument);
    const auto p = cul::make_quadratic_pair(v2(0, 0), v2(1, 0));
    EXPECT_THROW((void)p.evaluate_full(ParamVector::Zero(3)), cul::InvalidArgument);
}

TEST(QuadraticPair, SwappedExchangesObjectives) {
    const auto p = cul::make_quadratic_pair(v2(0, 0), v2(1, 0));
    const auto s = p.swapped();
    const auto e = p.evaluate_full(v2(0.2, 0.4));
    const auto es = s.evaluate_full(v2(0.2, 0.4));
    EXPECT_EQ(e.f1, es.f2);
    EXPECT_EQ(e.f2, es.f1);
    EXPECT_EQ(e.grad_f1, es.grad_f2);
}

TEST(QuadraticFront, Endpoints) {
    const cul::QuadraticPair pair{v2(0, 0), v2(1, 0)};
    EXPECT_DOUBLE_EQ(cul::quadratic_front_oracle(pair, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(cul::quadratic_front_oracle(pair, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(cul::quadratic_front_oracle(pair, 0.25), 0.25);
}

TEST(QuadraticFront, OutOfRange) {
    const cul::QuadraticPair pair{v2(0, 0), v2(1, 0)};
    EXPECT_THROW((void)cul::quadratic_front_oracle(pair, -0.1), cul::OutOfRange);
    EXPECT_THROW((void)cul::quadratic_front_oracle(pair, 1.1), cul::OutOfRange);
}

TEST(QuadraticFront, MatchesGridSearchAndIsMonotone) {
    const cul::QuadraticPair pair{v2(0, 0), v2(1, 0)};
    double prev = std::numeric_limits<double>::infinity();
    for (double f1 : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        const double oracle = cul::quadratic_front_oracle(pair, f1);
        EXPECT_NEAR(oracle, cul::testing::grid_front_f2(pair.a, pair.b, f1, 2e-3), 1e-2) << "f1=" << f1;
        EXPECT_LE(oracle, prev);
        prev = oracle;
    }
}

TEST(FiniteDifference, QuadraticMatchesAnalytic) {
    const auto p = cul::make_quadratic_pair(v2(0, 0), v2(1, 0));
    const auto fd = cul::finite_difference_grad(p, v2(0.5, 0), 1e-5);
    const auto e = p.evaluate_full(v2(0.5, 0));
    EXPECT_LT((fd.grad_f1 - e.grad_f1).norm() / e.grad_f1.norm(), 1e-6);
    EXPECT_LT((fd.grad_f2 - e.grad_f2).norm() / e.grad_f2.norm(), 1e-6);
}

TEST(FiniteDifference, RandomPointsOnQuadratics) {
    cul::Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(5));
        ParamVector a(d), b(d), th(d);
        for (int i = 0; i < d; ++i) {
            a[i] = rng.uniform(-2, 2);
            b[i] = rng.uniform(-2, 2);
            th[i] = rng.uniform(-3, 3);
        }
        const auto p = cul::make_quadratic_pair(a, b);
        const auto fd = cul::finite_difference_grad(p, th, 1e-5);
        const auto e = p.evaluate_full(th);
        EXPECT_LE((fd.grad_f1 - e.grad_f1).norm(), 1e-6 * std::max(1.0, e.grad_f1.norm()));
        EXPECT_LE((fd.grad_f2 - e.grad_f2).norm(), 1e-6 * std::max(1.0, e.grad_f2.norm()));
    }
}

TEST(FiniteDifference, ConstantObjectiveHasZeroGradient) {
    cul::BiObjectiveProblem p("const", 3, [](const ParamVector& t, cul::EvalKey) {
        return cul::ObjectiveEval{2.0, -1.0, ParamVector::Zero(t.size()), ParamVector::Zero(t.size())};
    });
    const auto fd = cul::finite_difference_grad(p, ParamVector::Ones(3), 1e-4);
    EXPECT_EQ(fd.grad_f1, ParamVector::Zero(3));
    EXPECT_EQ(fd.grad_f2, ParamVector::Zero(3));
}

TEST(FiniteDifference, NonFiniteObjectiveFails) {
    cul::BiObjectiveProblem p("nan", 1, [](const ParamVector& t, cul::EvalKey) {
        const double v = t[0] > 0.0 ? std::nan("") : 0.0;
        return cul::ObjectiveEval{v, 0.0, ParamVector::Zero(1), ParamVector::Zero(1)};
    });
    EXPECT_THROW((void)cul::finite_difference_grad(p, ParamVector::Zero(1), 1e-3), cul::NumericFailure);
}

TEST(Registry, KnowsBuiltinsAndRejectsUnknown) {
    const auto r = cul::builtin_problems();
    EXPECT_TRUE(r.contains("quad"));
    EXPECT_TRUE(r.contains("unlearn-toy"));
    EXPECT_THROW((void)r.make("nope", nlohmann::json::object()), cul::InvalidArgument);
    EXPECT_THROW((void)r.make("quad", nlohmann::json{{"bogus", 1}}), cul::InvalidArgument);
}

TEST(Registry, QuadDefaultsStartAtB) {
    const auto s = cul::builtin_problems().make("quad", nlohmann::json::object());
    EXPECT_EQ(s.problem.name(), "quad");
    EXPECT_EQ(s.start, v2(1, 0));
    const auto d = s.describe(v2(0.5, 0));
    EXPECT_DOUBLE_EQ(d.at("front_f2").get<double>(), 0.25);
}
