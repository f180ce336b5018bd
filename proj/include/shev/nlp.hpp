#pragma once

#include <functional>
#include <string_view>

#include <Eigen/Dense>

namespace shev::nlp {

// Values the problem callback fills in. Derivative fields are only read when
// requested. `hessian` is an optional positive semidefinite model of the
// Lagrangian Hessian (for example Gauss-Newton); when absent the solver keeps
// a damped BFGS approximation.
struct NlpEvaluation {
    double objective = 0.0;
    Eigen::VectorXd gradient;
    Eigen::VectorXd constraints;  // c(x) <= 0
    Eigen::MatrixXd jacobian;     // num_constraints x n
    Eigen::MatrixXd hessian;
    bool has_hessian = false;
};

using Evaluator = std::function<void(const Eigen::VectorXd& x, bool with_derivatives, NlpEvaluation& out)>;

//   minimize f(x)  subject to  c(x) <= 0,  lower <= x <= upper
struct NlpProblem {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int num_constraints = 0;
    Evaluator evaluate;

    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(lower.size()); }
};

struct SolverOptions {
    double tol_kkt  = 1e-6;
    double tol_feas = 1e-8;
    int max_iter    = 200;
};

enum class SolveStatus { Converged, MaxIter, Infeasible };

[[nodiscard]] std::string_view to_string(SolveStatus status) noexcept;

struct NlpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    // Scaled stationarity/complementarity residual at x.
    double kkt_residual = 0.0;
    double constraint_violation = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    Eigen::VectorXd multipliers;
};

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Convenience assembly from separate callbacks. `constraints` and `jacobian`
// may be empty for box-only problems.
[[nodiscard]] NlpProblem make_problem(Eigen::VectorXd lower, Eigen::VectorXd upper,
                                      ScalarFunction objective, VectorFunction gradient,
                                      int num_constraints = 0, VectorFunction constraints = {},
                                      MatrixFunction jacobian = {});

// SQP with an l1 merit line search. x0 is projected onto the box first.
// Throws CallbackError when the problem returns non-finite values.
[[nodiscard]] NlpSolution solve_nlp(const NlpProblem& problem, const Eigen::VectorXd& x0,
                                    const SolverOptions& options = {});

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
[[nodiscard]] Eigen::VectorXd finite_diff_grad(const ScalarFunction& f, const Eigen::VectorXd& x,
                                               double h);

}  // namespace shev::nlp
