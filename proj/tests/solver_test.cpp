#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nlsparse/solver.hpp"
#include "nlsparse/verify.hpp"
#include "test_support.hpp"

namespace nlsparse {
namespace {

using testing::linear_model;
using testing::random_matrix;
using testing::random_signal;
using testing::vec;

SolverConfig config(double alpha, double eta, double lambda) {
  SolverConfig cfg;
  cfg.reg.alpha = alpha;
  cfg.reg.eta = eta;
  cfg.lambda = lambda;
  return cfg;
}

Matrix scalar_matrix(double a) { return Matrix::Constant(1, 1, a); }

struct RandomProblem {
  NonlinearCsModel model;
  Signal y;
};

RandomProblem random_problem(std::uint64_t seed, Eigen::Index m = 6, Eigen::Index n = 8) {
  std::mt19937_64 gen(seed);
  NonlinearCsModel model(random_matrix(gen, m, n, 0.2), 2, 3, NonlinearForm::additive);
  const Signal x_true = random_signal(gen, n, 0.5);
  Signal y = model.apply(x_true) + 0.01 * random_signal(gen, m);
  return {std::move(model), std::move(y)};
}

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(config(0.1, 0.5, 1.0).validate());
  EXPECT_THROW(config(0.1, 0.5, 0.0).validate(), DomainError);
  SolverConfig bad_step = config(0.1, 0.5, 1.0);
  bad_step.step = StepRule::fixed(0.0);
  EXPECT_THROW(bad_step.validate(), DomainError);
  SolverConfig bad_grid = config(0.1, 0.5, 1.0);
  bad_grid.step = StepRule::line_search(0);
  EXPECT_THROW(bad_grid.validate(), DomainError);
  SolverConfig bad_q = config(0.1, 0.5, 1.0);
  bad_q.reg.q = 1.5;
  EXPECT_THROW(bad_q.validate(), DomainError);
  SolverConfig bad_iters = config(0.1, 0.5, 1.0);
  bad_iters.max_iters = 0;
  EXPECT_THROW(bad_iters.validate(), DomainError);
}

TEST(GGradient, WithoutSurrogateTermsIsTheMisfitGradient) {
  const auto [model, y] = random_problem(1);
  std::mt19937_64 gen(2);
  const Signal x = random_signal(gen, 8);
  const Signal misfit = model.jacobian_adjoint_apply(x, model.apply(x) - y);
  EXPECT_LE((g_gradient(model, x, y, config(0.3, 0.0, 0.0)) - misfit).norm(),
            1e-14 * misfit.norm());
}

TEST(GGradient, LinearTwoByTwoByHand) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  const auto model = linear_model(a);
  const Signal x = vec({0.6, 0.8});
  const Signal y = vec({1.0, -1.0});
  // A x - y = (1.2, 1.8); A^T (1.2, 1.8) = (1.2, 4.2); minus 2x since |x| = 1.
  const Signal g = g_gradient(model, x, y, config(1.0, 1.0, 1.0));
  EXPECT_NEAR(g[0], 1.2 - 1.2, 1e-15);
  EXPECT_NEAR(g[1], 4.2 - 1.6, 1e-15);
}

TEST(GGradient, MatchesFiniteDifferencesOfSmoothPart) {
  const auto [model, y] = random_problem(3);
  const SolverConfig cfg = config(0.2, 0.7, 2.0);
  std::mt19937_64 gen(4);
  for (int s = 0; s < 10; ++s) {
    const Signal x = random_signal(gen, 8);
    const Signal v = random_signal(gen, 8);
    constexpr double h = 1e-5;
    const double fd =
        (smooth_part(model, x + h * v, y, cfg) - smooth_part(model, x - h * v, y, cfg)) / (2 * h);
    const double analytic = g_gradient(model, x, y, cfg).dot(v);
    EXPECT_NEAR(fd, analytic, 1e-5 * std::max(1.0, std::abs(analytic)));
  }
}

TEST(GGradient, RequiresNonzeroIterate) {
  const auto [model, y] = random_problem(5);
  EXPECT_THROW(g_gradient(model, Signal::Zero(8), y, config(0.1, 1.0, 1.0)), PreconditionError);
  EXPECT_THROW(descent_direction(model, Signal::Zero(8), y, config(0.1, 1.0, 1.0)),
               PreconditionError);
  EXPECT_THROW(stationarity_gap(model, Signal::Zero(8), y, config(0.1, 1.0, 1.0)),
               PreconditionError);
}

TEST(DescentDirection, WithoutBetaIsTheIstaStep) {
  const auto [model, y] = random_problem(6);
  const SolverConfig cfg = config(0.05, 0.0, 3.0);
  std::mt19937_64 gen(7);
  const Signal x = random_signal(gen, 8);
  const Signal ista = soft_threshold(
      x - model.jacobian_adjoint_apply(x, model.apply(x) - y) / cfg.lambda,
      cfg.reg.alpha / cfg.lambda);
  EXPECT_LE((descent_direction(model, x, y, cfg) - ista).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(DescentDirection, LargeAlphaGivesZero) {
  const auto [model, y] = random_problem(8);
  std::mt19937_64 gen(9);
  const Signal x = random_signal(gen, 8);
  EXPECT_TRUE(is_zero(descent_direction(model, x, y, config(1e6, 0.5, 1.0))));
}

TEST(DescentDirection, SatisfiesComponentwiseOptimality) {
  const auto [model, y] = random_problem(10);
  const SolverConfig cfg = config(0.1, 0.8, 2.0);
  std::mt19937_64 gen(11);
  const Signal x = random_signal(gen, 8);
  const Signal z = descent_direction(model, x, y, cfg);
  const double scale = cfg.reg.beta() / (cfg.lambda * x.norm()) + 1.0;
  const Signal u = scale * x - model.jacobian_adjoint_apply(x, model.apply(x) - y) / cfg.lambda;
  const double tau = cfg.reg.alpha / cfg.lambda;
  for (Eigen::Index i = 0; i < 8; ++i) {
    if (z[i] != 0.0) {
      EXPECT_NEAR(z[i] + tau * (z[i] > 0 ? 1.0 : -1.0), u[i], 1e-14);
    } else {
      EXPECT_LE(std::abs(u[i]), tau);
    }
  }
}

TEST(DescentDirection, MatchesGridOracle) {
  const auto [model, y] = random_problem(12);
  const SolverConfig cfg = config(0.15, 0.6, 1.5);
  std::mt19937_64 gen(13);
  for (int s = 0; s < 5; ++s) {
    const Signal x = random_signal(gen, 8);
    const DirectionCheck check = check_direction(model, x, y, cfg);
    EXPECT_LE(check.max_abs_error, 1e-6);
    EXPECT_EQ(check.components, 8);
  }
}

TEST(LineSearch, FixedRuleReturnsConstant) {
  const auto [model, y] = random_problem(14);
  SolverConfig cfg = config(0.1, 1.0, 4.0);
  cfg.step = StepRule::fixed(1.0);
  std::mt19937_64 gen(15);
  EXPECT_EQ(line_search(model, random_signal(gen, 8), random_signal(gen, 8), y, cfg), 1.0);
}

TEST(LineSearch, DegenerateSegmentTiesTowardOne) {
  const auto [model, y] = random_problem(16);
  SolverConfig cfg = config(0.1, 1.0, 4.0);
  cfg.step = StepRule::line_search(64);
  std::mt19937_64 gen(17);
  const Signal x = random_signal(gen, 8);
  EXPECT_EQ(line_search(model, x, x, y, cfg), 1.0);
}

TEST(LineSearch, FindsInteriorMinimumOfParabola) {
  // F(x) = x, y = 0.4, alpha = 0: J(0 + s(1 - 0)) = (s - 0.4)^2 / 2.
  const auto model = linear_model(scalar_matrix(1.0));
  SolverConfig cfg = config(0.0, 0.0, 1.0);
  cfg.step = StepRule::line_search(1000);
  EXPECT_NEAR(line_search(model, vec({0.0}), vec({1.0}), vec({0.4}), cfg), 0.4, 1e-3);
}

TEST(LineSearch, AllNonFiniteIsDivergence) {
  const NonlinearCsModel model(scalar_matrix(1.0), 3, 3, NonlinearForm::additive);
  SolverConfig cfg = config(0.1, 0.0, 1.0);
  cfg.step = StepRule::line_search(4);
  EXPECT_THROW(line_search(model, vec({1e200}), vec({3e200}), vec({0.0}), cfg), DivergedError);
}

TEST(ZeroIterateStep, ConsistentDataGivesZero) {
  const auto [model, y] = random_problem(18);
  const Signal y0 = model.apply(Signal::Zero(8));
  EXPECT_TRUE(is_zero(zero_iterate_step(model, y0, config(0.1, 1.0, 1.0))));
}

TEST(ZeroIterateStep, LinearModelThresholdsBackProjection) {
  std::mt19937_64 gen(19);
  const Matrix a = random_matrix(gen, 4, 6);
  const Signal y = random_signal(gen, 4);
  const Signal expected = soft_threshold(a.transpose() * y, 0.3);
  EXPECT_LE((zero_iterate_step(linear_model(a), y, config(0.3, 1.0, 1.0)) - expected).norm(),
            1e-14);
}

TEST(ZeroIterateStep, DeadZone) {
  const auto [model, y] = random_problem(20);
  EXPECT_TRUE(is_zero(zero_iterate_step(model, y, config(1e6, 1.0, 1.0))));
}

TEST(StationarityGap, VanishesAtTheScalarSolution) {
  const auto model = linear_model(scalar_matrix(1.0));
  EXPECT_LE(stationarity_gap(model, vec({0.9}), vec({1.0}), config(0.1, 0.0, 1.0)), 1e-10);
}

TEST(StationarityGap, PositiveAwayFromStationarity) {
  const auto [model, y] = random_problem(21);
  const SolverConfig cfg = config(0.1, 0.5, 2.0);
  std::mt19937_64 gen(22);
  const Signal x = random_signal(gen, 8);
  ASSERT_NE(descent_direction(model, x, y, cfg), x);
  EXPECT_GT(stationarity_gap(model, x, y, cfg), 0.0);
}

TEST(StationarityGap, MatchesDefinitionAndGridOracle) {
  const auto [model, y] = random_problem(23);
  const SolverConfig cfg = config(0.12, 0.9, 2.5);
  std::mt19937_64 gen(24);
  const Signal x = random_signal(gen, 8);
  const Signal g = g_gradient(model, x, y, cfg);
  const Signal z = descent_direction(model, x, y, cfg);
  const double by_definition = g.dot(x - z) + convex_part(x, cfg) - convex_part(z, cfg);

  Signal z_grid(8);
  for (Eigen::Index i = 0; i < 8; ++i)
    z_grid[i] = brute_force_scalar_subproblem(g[i], cfg.lambda, cfg.reg.alpha);
  const double by_grid = g.dot(x - z_grid) + convex_part(x, cfg) - convex_part(z_grid, cfg);

  const double gap = stationarity_gap(model, x, y, cfg);
  EXPECT_NEAR(gap, by_definition, 1e-12 * (1.0 + by_definition));
  EXPECT_NEAR(gap, by_grid, 1e-6);
}

TEST(Solve, ScalarProblemConvergesInOneStep) {
  const auto model = linear_model(scalar_matrix(1.0));
  const SolveResult res = solve(model, vec({1.0}), vec({1.0}), config(0.1, 0.0, 1.0));
  EXPECT_EQ(res.trace.status, SolverStatus::converged);
  EXPECT_NEAR(res.x[0], 0.9, 1e-15);
  EXPECT_EQ(res.trace.iterations(), 1);
}

TEST(Solve, StartsFromZeroWithIstaStep) {
  const auto model = linear_model(scalar_matrix(1.0));
  const SolveResult res = solve(model, vec({1.0}), vec({0.0}), config(0.1, 0.0, 1.0));
  EXPECT_EQ(res.trace.status, SolverStatus::converged);
  EXPECT_NEAR(res.x[0], 0.9, 1e-15);
}

TEST(Solve, ZeroIsDeclaredSolutionWhenTheZeroStepVanishes) {
  const auto [model, y] = random_problem(25);
  const SolveResult res = solve(model, y, Signal::Zero(8), config(1e6, 1.0, 1.0));
  EXPECT_EQ(res.trace.status, SolverStatus::converged);
  EXPECT_TRUE(is_zero(res.x));
  EXPECT_EQ(res.trace.iterations(), 0);
}

TEST(Solve, TraceInvariantsOnRandomProblems) {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const auto [model, y] = random_problem(seed);
    SolverConfig cfg = config(0.02, 1.0, 20.0);
    cfg.max_iters = 50000;
    const SolveResult res = solve(model, y, Signal::Constant(8, 1e-6), cfg);
    ASSERT_NE(res.trace.status, SolverStatus::diverged) << "seed " << seed;
    const auto& recs = res.trace.records;
    bool seen_nonzero = false;
    for (std::size_t k = 0; k < recs.size(); ++k) {
      EXPECT_GE(recs[k].gap, -1e-10);
      if (k > 0) {
        EXPECT_LE(recs[k].objective, recs[k - 1].objective + 1e-10) << "k " << k;
      }
      if (recs[k].support > 0) seen_nonzero = true;
      if (seen_nonzero) {
        EXPECT_GT(recs[k].support, 0);
      }
    }
    EXPECT_EQ(res.trace.status, SolverStatus::converged) << "seed " << seed;
  }
}

TEST(Solve, LineSearchRunDescends) {
  const auto [model, y] = random_problem(41);
  SolverConfig cfg = config(0.02, 1.0, 20.0);
  cfg.step = StepRule::line_search(32);
  const SolveResult res = solve(model, y, Signal::Constant(8, 1e-6), cfg);
  const auto& recs = res.trace.records;
  for (std::size_t k = 1; k < recs.size(); ++k)
    EXPECT_LE(recs[k].objective, recs[k - 1].objective + 1e-10);
}

TEST(Solve, MatchesDirectIstaWithoutBeta) {
  const auto [model, y] = random_problem(42);
  SolverConfig cfg = config(0.03, 0.0, 20.0);
  cfg.max_iters = 30;
  cfg.grad_tol = 0.0;
  Signal x = Signal::Constant(8, 0.1);
  const SolveResult res = solve(model, y, x, cfg);
  for (int k = 0; k < 30; ++k) {
    const Signal grad = model.jacobian_adjoint_apply(x, model.apply(x) - y);
    for (Eigen::Index i = 0; i < 8; ++i)
      x[i] = soft_threshold(x[i] - grad[i] / cfg.lambda, cfg.reg.alpha / cfg.lambda);
  }
  EXPECT_LE((res.x - x).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Solve, OversizedStepIsReportedNotThrown) {
  const auto [model, y] = random_problem(43);
  SolverConfig cfg = config(0.02, 1.0, 0.05);
  cfg.step = StepRule::fixed(3.0);
  cfg.max_iters = 2000;
  SolveResult res;
  ASSERT_NO_THROW(res = solve(model, y, Signal::Constant(8, 1e-6), cfg));
  EXPECT_EQ(res.trace.status, SolverStatus::diverged);
  EXPECT_FALSE(res.trace.message.empty());
}

TEST(Solve, RejectsMismatchedData) {
  const auto [model, y] = random_problem(44);
  EXPECT_THROW(solve(model, vec({1.0}), Signal::Constant(8, 1e-6), config(0.1, 1.0, 1.0)),
               DomainError);
}

}  // namespace
}  // namespace nlsparse
