#include "shev/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shev/errors.hpp"
#include "shev/qp.hpp"

namespace shev::nlp {

namespace {

constexpr double kArmijo       = 1e-4;
constexpr double kMinStep      = 1e-10;
constexpr double kHessianFloor = 1e-8;

void evaluate_checked(const NlpProblem& p, const Eigen::VectorXd& x, bool derivatives,
                      NlpEvaluation& out)
{
    p.evaluate(x, derivatives, out);
    const int n = p.dimension();
    if (!std::isfinite(out.objective)) {
        throw CallbackError("objective returned a non-finite value");
    }
    if (out.constraints.size() != p.num_constraints) {
        throw CallbackError("constraint callback returned the wrong number of values");
    }
    if (!out.constraints.allFinite()) {
        throw CallbackError("constraint callback returned a non-finite value");
    }
    if (!derivatives) {
        return;
    }
    if (out.gradient.size() != n || !out.gradient.allFinite()) {
        throw CallbackError("gradient callback returned a non-finite or mis-sized value");
    }
    if (out.jacobian.rows() != p.num_constraints || out.jacobian.cols() != n ||
        !out.jacobian.allFinite()) {
        throw CallbackError("constraint Jacobian is non-finite or mis-sized");
    }
    if (out.has_hessian &&
        (out.hessian.rows() != n || out.hessian.cols() != n || !out.hessian.allFinite())) {
        throw CallbackError("Hessian model is non-finite or mis-sized");
    }
}

double violation(const Eigen::VectorXd& c)
{
    return c.size() == 0 ? 0.0 : std::max(0.0, c.maxCoeff());
}

double l1_violation(const Eigen::VectorXd& c)
{
    return c.cwiseMax(0.0).sum();
}

// Positive definite QP Hessian from the callback's model.
Eigen::MatrixXd regularized(const Eigen::MatrixXd& H)
{
    Eigen::MatrixXd B = 0.5 * (H + H.transpose());
    const double scale = std::max(1.0, B.diagonal().cwiseAbs().maxCoeff());
    B.diagonal().array() += kHessianFloor * scale;
    return B;
}

void damped_bfgs_update(Eigen::MatrixXd& B, const Eigen::VectorXd& s, Eigen::VectorXd y)
{
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (!(sBs > 0.0)) {
        return;
    }
    double sy = s.dot(y);
    if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y  = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
    }
    if (!(sy > 0.0)) {
        return;
    }
    B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
}

struct KktMeasure {
    double residual;
    double multiplier_norm;
};

KktMeasure kkt_measure(const Eigen::VectorXd& x, const NlpProblem& p, const NlpEvaluation& ev,
                       const QpResult& qp)
{
    Eigen::VectorXd stationarity = ev.gradient - qp.lower_multipliers + qp.upper_multipliers;
    double comp = 0.0;
    if (p.num_constraints > 0) {
        stationarity += ev.jacobian.transpose() * qp.multipliers;
        comp = (qp.multipliers.array() * ev.constraints.array()).abs().maxCoeff();
    }
    for (int i = 0; i < x.size(); ++i) {
        if (std::isfinite(p.lower(i))) {
            comp = std::max(comp, qp.lower_multipliers(i) * (x(i) - p.lower(i)));
        }
        if (std::isfinite(p.upper(i))) {
            comp = std::max(comp, qp.upper_multipliers(i) * (p.upper(i) - x(i)));
        }
    }
    double lam = qp.lower_multipliers.cwiseAbs().maxCoeff();
    lam = std::max(lam, qp.upper_multipliers.cwiseAbs().maxCoeff());
    if (p.num_constraints > 0) {
        lam = std::max(lam, qp.multipliers.maxCoeff());
    }
    const double scale = std::max(1.0, ev.gradient.cwiseAbs().maxCoeff());
    return {std::max(stationarity.cwiseAbs().maxCoeff(), comp) / scale, lam};
}

// Elastic subproblem used when the linearized constraints are inconsistent:
// constraints relaxed by t >= 0 at l1 cost `penalty`.
QpResult solve_elastic_qp(const Eigen::MatrixXd& B, const NlpEvaluation& ev,
                          const Eigen::VectorXd& d_lower, const Eigen::VectorXd& d_upper,
                          double penalty)
{
    const int n = static_cast<int>(B.rows());
    const int m = static_cast<int>(ev.constraints.size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + m, n + m);
    G.topLeftCorner(n, n) = B;
    G.bottomRightCorner(m, m).diagonal().setConstant(kHessianFloor * std::max(1.0, penalty));
    Eigen::VectorXd g(n + m);
    g.head(n) = ev.gradient;
    g.tail(m).setConstant(penalty);
    Eigen::MatrixXd A(m, n + m);
    A.leftCols(n)  = ev.jacobian;
    A.rightCols(m) = -Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd lo(n + m);
    Eigen::VectorXd hi(n + m);
    lo.head(n) = d_lower;
    hi.head(n) = d_upper;
    lo.tail(m).setZero();
    hi.tail(m).setConstant(std::numeric_limits<double>::infinity());

    QpResult full = solve_qp(G, g, A, -ev.constraints, lo, hi);
    QpResult reduced;
    reduced.status            = full.status;
    reduced.x                 = full.x.head(n);
    reduced.objective         = full.objective;
    reduced.multipliers       = full.multipliers;
    reduced.lower_multipliers = full.lower_multipliers.head(n);
    reduced.upper_multipliers = full.upper_multipliers.head(n);
    reduced.iterations        = full.iterations;
    return reduced;
}

}  // namespace

std::string_view to_string(SolveStatus status) noexcept
{
    switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

NlpProblem make_problem(Eigen::VectorXd lower, Eigen::VectorXd upper, ScalarFunction objective,
                        VectorFunction gradient, int num_constraints, VectorFunction constraints,
                        MatrixFunction jacobian)
{
    NlpProblem p;
    p.lower           = std::move(lower);
    p.upper           = std::move(upper);
    p.num_constraints = num_constraints;
    const auto n      = p.lower.size();
    p.evaluate = [=](const Eigen::VectorXd& x, bool derivatives, NlpEvaluation& out) {
        out.objective   = objective(x);
        out.constraints = num_constraints > 0 ? constraints(x) : Eigen::VectorXd(0);
        if (derivatives) {
            out.gradient = gradient(x);
            out.jacobian = num_constraints > 0 ? jacobian(x) : Eigen::MatrixXd(0, n);
        }
        out.has_hessian = false;
    };
    return p;
}

NlpSolution solve_nlp(const NlpProblem& problem, const Eigen::VectorXd& x0,
                      const SolverOptions& options)
{
    const int n = problem.dimension();
    if (n < 1 || problem.upper.size() != n || x0.size() != n) {
        throw std::invalid_argument("solve_nlp: inconsistent problem dimensions");
    }
    if ((problem.lower.array() > problem.upper.array()).any()) {
        throw std::invalid_argument("solve_nlp: lower bound exceeds upper bound");
    }
    if (!x0.allFinite()) {
        throw std::invalid_argument("solve_nlp: starting point must be finite");
    }

    Eigen::VectorXd x = x0.cwiseMax(problem.lower).cwiseMin(problem.upper);
    NlpEvaluation ev;
    evaluate_checked(problem, x, true, ev);

    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    bool bfgs_scaled  = false;
    double mu         = 1.0;

    NlpSolution sol;
    sol.multipliers = Eigen::VectorXd::Zero(problem.num_constraints);
    NlpEvaluation trial;

    auto fill = [&](SolveStatus status, double kkt) {
        sol.x                    = x;
        sol.objective            = ev.objective;
        sol.kkt_residual         = kkt;
        sol.constraint_violation = violation(ev.constraints);
        sol.status               = status;
        return sol;
    };

    double kkt = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        sol.iterations = iter;
        if (ev.has_hessian) {
            B = regularized(ev.hessian);
        }
        const Eigen::VectorXd d_lower = problem.lower - x;
        const Eigen::VectorXd d_upper = problem.upper - x;

        QpResult qp = solve_qp(B, ev.gradient, ev.jacobian, -ev.constraints, d_lower, d_upper);
        bool elastic = false;
        if (qp.status != QpStatus::Optimal) {
            elastic = true;
            qp = solve_elastic_qp(B, ev, d_lower, d_upper, std::max(mu, 1e4));
            if (qp.status != QpStatus::Optimal) {
                return fill(SolveStatus::Infeasible, kkt);
            }
        }
        const Eigen::VectorXd& d = qp.x;
        const auto measure = kkt_measure(x, problem, ev, qp);
        kkt = measure.residual;
        sol.multipliers = qp.multipliers;

        const double feas = violation(ev.constraints);
        if (!elastic && kkt <= options.tol_kkt && feas <= options.tol_feas) {
            return fill(SolveStatus::Converged, kkt);
        }

        if (measure.multiplier_norm * 1.1 > mu) {
            mu = measure.multiplier_norm * 1.5 + 1e-8;
        }
        const double phi = ev.objective + mu * l1_violation(ev.constraints);
        Eigen::VectorXd linearized = ev.constraints;
        if (problem.num_constraints > 0) {
            linearized += ev.jacobian * d;
        }
        const double slope =
            ev.gradient.dot(d) + mu * (l1_violation(linearized) - l1_violation(ev.constraints));

        if (d.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff()) || slope >= 0.0) {
            // No descent direction left: either stationary to rounding or stuck.
            if (feas <= options.tol_feas && kkt <= options.tol_kkt) {
                return fill(SolveStatus::Converged, kkt);
            }
            const bool infeasible = feas > std::max(options.tol_feas, 1e-6);
            return fill(infeasible ? SolveStatus::Infeasible : SolveStatus::MaxIter, kkt);
        }

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_trial(n);
        while (step >= kMinStep) {
            x_trial = (x + step * d).cwiseMax(problem.lower).cwiseMin(problem.upper);
            evaluate_checked(problem, x_trial, false, trial);
            const double phi_trial = trial.objective + mu * l1_violation(trial.constraints);
            if (phi_trial <= phi + kArmijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!ev.has_hessian && !B.isIdentity()) {
                B.setIdentity();
                bfgs_scaled = false;
                continue;
            }
            const bool infeasible = feas > std::max(options.tol_feas, 1e-6);
            return fill(infeasible ? SolveStatus::Infeasible : SolveStatus::MaxIter, kkt);
        }

        Eigen::VectorXd lagrangian_grad_old = ev.gradient;
        if (problem.num_constraints > 0) {
            lagrangian_grad_old += ev.jacobian.transpose() * qp.multipliers;
        }
        const Eigen::VectorXd s = x_trial - x;
        x = x_trial;
        evaluate_checked(problem, x, true, ev);

        if (!ev.has_hessian) {
            Eigen::VectorXd y = ev.gradient - lagrangian_grad_old;
            if (problem.num_constraints > 0) {
                y += ev.jacobian.transpose() * qp.multipliers;
            }
            if (!bfgs_scaled) {
                const double sy = s.dot(y);
                const double yy = y.dot(y);
                if (sy > 0.0 && yy > 0.0) {
                    B = Eigen::MatrixXd::Identity(n, n) * (yy / sy);
                    bfgs_scaled = true;
                }
            }
            damped_bfgs_update(B, s, y);
        }
    }

    // Out of iterations: last iterate, residual from the last subproblem.
    const double feas = violation(ev.constraints);
    const bool infeasible = feas > std::max(options.tol_feas, 1e-6);
    return fill(infeasible ? SolveStatus::Infeasible : SolveStatus::MaxIter, kkt);
}

Eigen::VectorXd finite_diff_grad(const ScalarFunction& f, const Eigen::VectorXd& x, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_diff_grad: step must be positive");
    }
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd probe = x;
    for (int i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        grad(i) = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace shev::nlp
