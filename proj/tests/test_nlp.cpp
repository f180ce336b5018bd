#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qp_oracle.hpp"
#include "shev/errors.hpp"
#include "shev/nlp.hpp"

using namespace shev::nlp;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> values)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v(i++) = x;
    }
    return v;
}

NlpProblem scalar_quadratic(double target, double lo, double hi)
{
    return make_problem(
        vec({lo}), vec({hi}),
        [=](const Eigen::VectorXd& x) { return (x(0) - target) * (x(0) - target); },
        [=](const Eigen::VectorXd& x) { return vec({2.0 * (x(0) - target)}); });
}

NlpProblem as_nlp(const shev::testing::DenseQp& qp)
{
    const int n = static_cast<int>(qp.G.rows());
    return make_problem(
        Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf),
        [qp](const Eigen::VectorXd& x) { return qp.objective(x); },
        [qp](const Eigen::VectorXd& x) -> Eigen::VectorXd { return qp.G * x + qp.g; },
        static_cast<int>(qp.A.rows()),
        [qp](const Eigen::VectorXd& x) -> Eigen::VectorXd { return qp.A * x - qp.b; },
        [qp](const Eigen::VectorXd&) -> Eigen::MatrixXd { return qp.A; });
}

}  // namespace

TEST_CASE("solve_nlp: unconstrained quadratic inside the box")
{
    auto sol = solve_nlp(scalar_quadratic(3.0, 0.0, 10.0), vec({0.0}));
    CHECK(sol.status == SolveStatus::Converged);
    CHECK(sol.x(0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.kkt_residual <= 1e-6);
}

TEST_CASE("solve_nlp: active nonlinear-form inequality")
{
    // min x^2 s.t. 1 - x <= 0
    auto p = make_problem(
        vec({-kInf}), vec({kInf}), [](const Eigen::VectorXd& x) { return x(0) * x(0); },
        [](const Eigen::VectorXd& x) { return vec({2.0 * x(0)}); }, 1,
        [](const Eigen::VectorXd& x) { return vec({1.0 - x(0)}); },
        [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, -1.0); });
    auto sol = solve_nlp(p, vec({5.0}));
    CHECK(sol.status == SolveStatus::Converged);
    CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.multipliers(0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(sol.constraint_violation <= 1e-8);
}

TEST_CASE("solve_nlp: bound-active optimum")
{
    auto sol = solve_nlp(scalar_quadratic(3.0, 0.0, 2.0), vec({0.0}));
    CHECK(sol.status == SolveStatus::Converged);
    CHECK(sol.x(0) == doctest::Approx(2.0));
}

TEST_CASE("solve_nlp: starting point outside the box is projected")
{
    auto sol = solve_nlp(scalar_quadratic(3.0, 0.0, 10.0), vec({50.0}));
    CHECK(sol.status == SolveStatus::Converged);
    CHECK(sol.x(0) == doctest::Approx(3.0));
}

TEST_CASE("solve_nlp: Rosenbrock with a disk constraint")
{
    // Known optimum of the constrained Rosenbrock on x^2 + y^2 <= 2 is (1, 1).
    auto p = make_problem(
        vec({-kInf, -kInf}), vec({kInf, kInf}),
        [](const Eigen::VectorXd& x) {
            return std::pow(1.0 - x(0), 2) + 100.0 * std::pow(x(1) - x(0) * x(0), 2);
        },
        [](const Eigen::VectorXd& x) {
            return vec({-2.0 * (1.0 - x(0)) - 400.0 * x(0) * (x(1) - x(0) * x(0)),
                        200.0 * (x(1) - x(0) * x(0))});
        },
        1, [](const Eigen::VectorXd& x) { return vec({x.squaredNorm() - 1.5}); },
        [](const Eigen::VectorXd& x) {
            Eigen::MatrixXd J(1, 2);
            J << 2.0 * x(0), 2.0 * x(1);
            return J;
        });
    auto sol = solve_nlp(p, vec({-1.2, 1.0}));
    CHECK(sol.status == SolveStatus::Converged);
    // On x^2 + y^2 = 1.5 the minimizer satisfies both KKT equations; check them directly.
    CHECK(sol.x.squaredNorm() == doctest::Approx(1.5).epsilon(1e-7));
    CHECK(sol.kkt_residual <= 1e-6);
}

TEST_CASE("solve_nlp: matches active-set enumeration on convex QPs")
{
    std::mt19937_64 rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 4;
        auto qp = shev::testing::random_feasible_qp(rng, n, trial % 3);
        auto oracle = shev::testing::enumerate_active_sets(qp);
        REQUIRE(oracle.has_value());
        auto sol = solve_nlp(as_nlp(qp), Eigen::VectorXd::Zero(n));
        CHECK(sol.status == SolveStatus::Converged);
        CHECK(std::abs(sol.objective - qp.objective(*oracle)) <= 1e-6);
    }
}

TEST_CASE("solve_nlp: Converged implies the stated tolerances")
{
    std::mt19937_64 rng(99);
    SolverOptions opts;
    opts.tol_kkt  = 1e-9;
    opts.tol_feas = 1e-10;
    for (int trial = 0; trial < 30; ++trial) {
        auto qp  = shev::testing::random_feasible_qp(rng, 3, 2);
        auto sol = solve_nlp(as_nlp(qp), Eigen::VectorXd::Ones(3), opts);
        if (sol.status == SolveStatus::Converged) {
            CHECK(sol.kkt_residual <= opts.tol_kkt);
            CHECK(sol.constraint_violation <= opts.tol_feas);
        }
    }
}

TEST_CASE("solve_nlp: deterministic iterates")
{
    std::mt19937_64 rng(5);
    auto qp = shev::testing::random_feasible_qp(rng, 4, 3);
    auto a  = solve_nlp(as_nlp(qp), Eigen::VectorXd::Zero(4));
    auto b  = solve_nlp(as_nlp(qp), Eigen::VectorXd::Zero(4));
    CHECK(a.iterations == b.iterations);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.x(i) == b.x(i));
    }
}

TEST_CASE("solve_nlp: locally infeasible constraints")
{
    // x^2 + 1 <= 0 has no solution.
    auto p = make_problem(
        vec({-5.0}), vec({5.0}), [](const Eigen::VectorXd& x) { return x(0); },
        [](const Eigen::VectorXd&) { return vec({1.0}); }, 1,
        [](const Eigen::VectorXd& x) { return vec({x(0) * x(0) + 1.0}); },
        [](const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, 2.0 * x(0)); });
    auto sol = solve_nlp(p, vec({2.0}));
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("solve_nlp: non-finite callback raises CallbackError")
{
    auto p = make_problem(
        vec({-1.0}), vec({1.0}), [](const Eigen::VectorXd& x) { return std::log(x(0)); },
        [](const Eigen::VectorXd& x) { return vec({1.0 / x(0)}); });
    CHECK_THROWS_AS((void)solve_nlp(p, vec({-0.5})), shev::CallbackError);
}

TEST_CASE("finite_diff_grad: examples")
{
    auto square = [](const Eigen::VectorXd& x) { return x(0) * x(0); };
    CHECK(std::abs(finite_diff_grad(square, vec({3.0}), 1e-5)(0) - 6.0) <= 1e-8);

    auto constant = [](const Eigen::VectorXd&) { return 4.2; };
    CHECK(finite_diff_grad(constant, vec({1.0, -2.0, 3.0}), 1e-4).cwiseAbs().maxCoeff() == 0.0);

    auto product = [](const Eigen::VectorXd& x) { return x(0) * x(1); };
    auto g = finite_diff_grad(product, vec({2.0, 5.0}), 1e-5);
    CHECK(std::abs(g(0) - 5.0) <= 1e-7);
    CHECK(std::abs(g(1) - 2.0) <= 1e-7);

    CHECK_THROWS((void)finite_diff_grad(square, vec({1.0}), 0.0));
}
