#pragma once

#include <Eigen/Dense>

namespace shev::nlp {

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpResult {
    QpStatus status = QpStatus::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    // Multipliers for rows of A (A x <= b), all >= 0.
    Eigen::VectorXd multipliers;
    // Multipliers for the lower and upper variable bounds, all >= 0.
    Eigen::VectorXd lower_multipliers;
    Eigen::VectorXd upper_multipliers;
    int iterations = 0;
};

// Dense strictly convex QP
//
//     minimize    0.5 x' G x + g' x
//     subject to  A x <= b,   lower <= x <= upper
//
// solved with the Goldfarb-Idnani dual active-set method. G must be symmetric
// positive definite. Infinite bounds are ignored. Stationarity at the solution:
// G x + g + A' lambda - nu_lower + nu_upper = 0.
[[nodiscard]] QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace shev::nlp
