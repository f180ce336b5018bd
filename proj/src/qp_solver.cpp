#include "shev/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shev::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Origin of each internal constraint row.
enum class RowKind { General, Lower, Upper };

struct Row {
    RowKind kind;
    int index;
};

// Givens rotation appending the new normal d = J' n_p to the active set.
bool add_constraint(Eigen::MatrixXd& R, Eigen::MatrixXd& J, Eigen::VectorXd& d, int& iq,
                    double& r_norm)
{
    const int n = static_cast<int>(J.rows());
    for (int j = n - 1; j >= iq + 1; --j) {
        double cc = d(j - 1);
        double ss = d(j);
        const double h = std::hypot(cc, ss);
        if (h == 0.0) {
            continue;
        }
        d(j) = 0.0;
        ss /= h;
        cc /= h;
        if (cc < 0.0) {
            cc = -cc;
            ss = -ss;
            d(j - 1) = -h;
        } else {
            d(j - 1) = h;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = 0; k < n; ++k) {
            const double t1 = J(k, j - 1);
            const double t2 = J(k, j);
            J(k, j - 1) = t1 * cc + t2 * ss;
            J(k, j)     = xny * (t1 + J(k, j - 1)) - t2;
        }
    }
    ++iq;
    R.col(iq - 1).head(iq) = d.head(iq);
    if (std::abs(d(iq - 1)) <= kEps * r_norm) {
        return false;  // linearly dependent on the active set
    }
    r_norm = std::max(r_norm, std::abs(d(iq - 1)));
    return true;
}

void delete_constraint(Eigen::MatrixXd& R, Eigen::MatrixXd& J, std::vector<int>& active,
                       Eigen::VectorXd& u, int& iq, int constraint)
{
    const int n = static_cast<int>(R.rows());
    int qq = -1;
    for (int i = 0; i < iq; ++i) {
        if (active[i] == constraint) {
            qq = i;
            break;
        }
    }
    if (qq < 0) {
        return;
    }
    for (int i = qq; i < iq - 1; ++i) {
        active[i] = active[i + 1];
        u(i)      = u(i + 1);
        R.col(i)  = R.col(i + 1);
    }
    active[iq - 1] = active[iq];
    u(iq - 1)      = u(iq);
    active[iq]     = -1;
    u(iq)          = 0.0;
    for (int j = 0; j < iq; ++j) {
        R(j, iq - 1) = 0.0;
    }
    --iq;
    if (iq == 0) {
        return;
    }
    for (int j = qq; j < iq; ++j) {
        double cc = R(j, j);
        double ss = R(j + 1, j);
        const double h = std::hypot(cc, ss);
        if (h == 0.0) {
            continue;
        }
        cc /= h;
        ss /= h;
        R(j + 1, j) = 0.0;
        if (cc < 0.0) {
            R(j, j) = -h;
            cc = -cc;
            ss = -ss;
        } else {
            R(j, j) = h;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = j + 1; k < iq; ++k) {
            const double t1 = R(j, k);
            const double t2 = R(j + 1, k);
            R(j, k)     = t1 * cc + t2 * ss;
            R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
        }
        for (int k = 0; k < n; ++k) {
            const double t1 = J(k, j);
            const double t2 = J(k, j + 1);
            J(k, j)     = t1 * cc + t2 * ss;
            J(k, j + 1) = xny * (J(k, j) + t1) - t2;
        }
    }
}

}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                  const Eigen::VectorXd& upper)
{
    const int n = static_cast<int>(G.rows());
    if (G.cols() != n || g.size() != n || A.cols() != n || A.rows() != b.size() ||
        lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("solve_qp: inconsistent dimensions");
    }

    // Internal form: N' x + c >= 0, one column of N per constraint.
    std::vector<Row> rows;
    for (int i = 0; i < A.rows(); ++i) {
        rows.push_back({RowKind::General, i});
    }
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(lower(j))) {
            rows.push_back({RowKind::Lower, j});
        }
        if (std::isfinite(upper(j))) {
            rows.push_back({RowKind::Upper, j});
        }
    }
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd c(m);
    for (int i = 0; i < m; ++i) {
        const auto& row = rows[i];
        switch (row.kind) {
        case RowKind::General:
            N.col(i) = -A.row(row.index).transpose();
            c(i)     = b(row.index);
            break;
        case RowKind::Lower:
            N(row.index, i) = 1.0;
            c(i)            = -lower(row.index);
            break;
        case RowKind::Upper:
            N(row.index, i) = -1.0;
            c(i)            = upper(row.index);
            break;
        }
    }

    QpResult result;
    result.multipliers       = Eigen::VectorXd::Zero(A.rows());
    result.lower_multipliers = Eigen::VectorXd::Zero(n);
    result.upper_multipliers = Eigen::VectorXd::Zero(n);

    Eigen::LLT<Eigen::MatrixXd> chol(G);
    if (chol.info() != Eigen::Success) {
        throw std::invalid_argument("solve_qp: Hessian is not positive definite");
    }
    // J = L^{-T} so that J' G J = I.
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    chol.matrixU().solveInPlace(J);
    const double c1 = G.trace();
    const double c2 = J.trace();

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    double r_norm = 1.0;

    Eigen::VectorXd x = chol.solve(-g);

    std::vector<int> active(static_cast<std::size_t>(n + 1), -1);
    std::vector<int> iai(static_cast<std::size_t>(m));
    std::vector<bool> excluded(static_cast<std::size_t>(m), false);
    for (int i = 0; i < m; ++i) {
        iai[i] = i;
    }
    Eigen::VectorXd u  = Eigen::VectorXd::Zero(n + 1);
    Eigen::VectorXd s  = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd d  = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z  = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r  = Eigen::VectorXd::Zero(n + 1);
    Eigen::VectorXd u_old = u;
    std::vector<int> active_old = active;
    Eigen::VectorXd x_old = x;
    int iq = 0;

    const int max_iterations = 50 * (n + m) + 100;
    int iterations = 0;

    auto finish = [&](QpStatus status) {
        result.status     = status;
        result.x          = x;
        result.objective  = 0.5 * x.dot(G * x) + g.dot(x);
        result.iterations = iterations;
        for (int k = 0; k < iq; ++k) {
            const auto& row = rows[active[k]];
            switch (row.kind) {
            case RowKind::General: result.multipliers(row.index) = u(k); break;
            case RowKind::Lower: result.lower_multipliers(row.index) = u(k); break;
            case RowKind::Upper: result.upper_multipliers(row.index) = u(k); break;
            }
        }
        return result;
    };

    for (;;) {
        // Step 1: evaluate all constraints at the current primal point.
        if (++iterations > max_iterations) {
            return finish(QpStatus::IterationLimit);
        }
        for (int i = 0; i < iq; ++i) {
            iai[active[i]] = -1;
        }
        double psi = 0.0;
        for (int i = 0; i < m; ++i) {
            excluded[i] = false;
            s(i) = N.col(i).dot(x) + c(i);
            psi += std::min(0.0, s(i));
        }
        if (std::abs(psi) <= m * kEps * c1 * c2 * 100.0) {
            return finish(QpStatus::Optimal);
        }
        u_old.head(iq) = u.head(iq);
        std::copy(active.begin(), active.begin() + iq, active_old.begin());
        x_old = x;

    choose_violated:
        // Step 2: most violated inactive constraint.
        int ip = -1;
        double ss = 0.0;
        for (int i = 0; i < m; ++i) {
            if (s(i) < ss && iai[i] != -1 && !excluded[i]) {
                ss = s(i);
                ip = i;
            }
        }
        if (ip < 0) {
            return finish(QpStatus::Optimal);
        }
        const Eigen::VectorXd np = N.col(ip);
        u(iq)      = 0.0;
        active[iq] = ip;

        for (;;) {
            if (++iterations > max_iterations) {
                return finish(QpStatus::IterationLimit);
            }
            // Step 2a: primal and dual step directions.
            d = J.transpose() * np;
            z = J.rightCols(n - iq) * d.tail(n - iq);
            if (iq > 0) {
                r.head(iq) =
                    R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
            }

            // Step 2b: partial (dual) and full (primal) step lengths.
            double t1 = kInf;
            int dropped = -1;
            for (int k = 0; k < iq; ++k) {
                if (r(k) > 0.0 && u(k) / r(k) < t1) {
                    t1      = u(k) / r(k);
                    dropped = active[k];
                }
            }
            double t2 = kInf;
            if (std::abs(z.dot(z)) > kEps) {
                t2 = -s(ip) / z.dot(np);
            }
            const double t = std::min(t1, t2);

            if (t >= kInf) {
                return finish(QpStatus::Infeasible);
            }
            if (t2 >= kInf) {
                // Dual step only.
                u.head(iq) -= t * r.head(iq);
                u(iq) += t;
                iai[dropped] = dropped;
                delete_constraint(R, J, active, u, iq, dropped);
                continue;
            }

            x += t * z;
            u.head(iq) -= t * r.head(iq);
            u(iq) += t;

            if (t == t2) {
                // Full step: ip joins the active set.
                if (!add_constraint(R, J, d, iq, r_norm)) {
                    excluded[ip] = true;
                    delete_constraint(R, J, active, u, iq, ip);
                    for (int i = 0; i < m; ++i) {
                        iai[i] = i;
                    }
                    for (int i = 0; i < iq; ++i) {
                        active[i] = active_old[i];
                        iai[active[i]] = -1;
                        u(i) = u_old(i);
                    }
                    x = x_old;
                    goto choose_violated;
                }
                iai[ip] = -1;
                break;
            }

            // Partial step: drop the blocking constraint and retry ip.
            iai[dropped] = dropped;
            delete_constraint(R, J, active, u, iq, dropped);
            s(ip) = N.col(ip).dot(x) + c(ip);
        }
    }
}

}  // namespace shev::nlp
