#include "shev/mompc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shev/errors.hpp"

namespace shev {

void MompcConfig::validate() const
{
    auto require = [](bool ok, const char* message) {
        if (!ok) {
            throw ValidationError(message);
        }
    };
    require(horizon >= 1, "controller.horizon must be at least 1");
    require(dt > 0.0 && std::isfinite(dt), "controller.dt must be positive");
    double sum = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "controller weights must be non-negative");
        sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "controller weights must sum to 1");
    require(tracking_weight.allFinite() &&
                (tracking_weight - tracking_weight.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
            "controller.Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(tracking_weight);
    require(eig.eigenvalues().minCoeff() >= -1e-12, "controller.Q must be positive semidefinite");
    require(control_weight > 0.0 && std::isfinite(control_weight), "controller.S must be positive");
    require(fuel_weight >= 0.0 && std::isfinite(fuel_weight), "controller.R must be non-negative");
    require(soc_weight >= 0.0 && std::isfinite(soc_weight), "controller.P must be non-negative");
    require(soc_ref >= 0.0 && soc_ref <= 1.0, "controller.soc_ref must be in [0, 1]");
    require(force_norm > 0.0 && std::isfinite(force_norm), "controller.force_norm must be positive");
    require(pb_norm > 0.0 && std::isfinite(pb_norm), "controller.pb_norm must be positive");
    require(soft_constraint_penalty > 0.0 && std::isfinite(soft_constraint_penalty),
            "controller.soft_constraint_penalty must be positive");
    require(solver.tol_kkt > 0.0 && solver.tol_feas > 0.0 && solver.max_iter >= 1,
            "controller solver tolerances must be positive");
}

std::array<double, 3> normalize_weights(std::array<double, 3> weights)
{
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("weights must be finite and non-negative");
        }
        sum += w;
    }
    if (!(sum > 0.0)) {
        throw ValidationError("weights must not all be zero");
    }
    for (double& w : weights) {
        w /= sum;
    }
    return weights;
}

// ---------------------------------------------------------------------------
// Cost terms

double motion_cost(std::span<const VehicleState> states, std::span<const double> forces,
                   const PreviewWindow& window, const Eigen::Matrix2d& Q, double S, double force_norm)
{
    if (states.size() != window.size() || forces.size() + 1 != states.size()) {
        throw ValidationError("motion_cost: expected N+1 states, N forces and an N+1 window");
    }
    double cost = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const Eigen::Vector2d e(states[k].position - window.s_ref[k],
                                states[k].velocity - window.v_ref[k]);
        cost += e.dot(Q * e);
    }
    for (double f : forces) {
        const double u = f / force_norm;
        cost += S * u * u;
    }
    return cost;
}

namespace {

double fuel_cost_unchecked(std::span<const double> engine_power, double R, double dt,
                           const EngineParams& eng)
{
    double cost = 0.0;
    for (double pe : engine_power) {
        const double dm = detail::affine_fuel_increment(pe, dt, eng);
        cost += R * dm * dm;
    }
    // Terminal stage N reuses the last control stage.
    const double dm = detail::affine_fuel_increment(engine_power.back(), dt, eng);
    return cost + R * dm * dm;
}

}  // namespace

double fuel_cost(std::span<const double> engine_power, double R, double dt, const EngineParams& eng)
{
    if (engine_power.empty()) {
        throw ValidationError("fuel_cost: empty engine power sequence");
    }
    for (double pe : engine_power) {
        if (!(pe >= 0.0)) {
            throw RangeError("fuel_cost: engine power must be non-negative");
        }
    }
    return fuel_cost_unchecked(engine_power, R, dt, eng);
}

double battery_cost(std::span<const double> soc, double soc_ref, double P)
{
    double cost = 0.0;
    for (double x : soc) {
        cost += P * (x - soc_ref) * (x - soc_ref);
    }
    return cost;
}

// ---------------------------------------------------------------------------
// Transcription

struct OcpProblem::Data {
    VehicleState x0;
    double soc0 = 0.0;
    PreviewWindow window;
    MompcConfig cfg;
    ShevParams params;
    int N = 0;
    double pb_lo = 0.0;
    double pb_hi = 0.0;
    Eigen::Matrix2d q_root;  // Q = q_root' q_root

    struct Forward {
        std::vector<double> s, v, soc, pv, pe, current, dcurrent;
        Eigen::MatrixXd dv_dF;    // (N+1) x N, per newton
        Eigen::MatrixXd ds_dF;    // (N+1) x N
        Eigen::MatrixXd dsoc_dP;  // (N+1) x N, per watt
        Eigen::MatrixXd dpe_dF;   // N x N
    };

    [[nodiscard]] Forward forward(std::span<const double> force, std::span<const double> power,
                                  bool derivatives) const;
    void evaluate(const Eigen::VectorXd& z, bool derivatives, nlp::NlpEvaluation& out) const;
};

OcpProblem::Data::Forward OcpProblem::Data::forward(std::span<const double> force,
                                                    std::span<const double> power,
                                                    bool derivatives) const
{
    const auto& veh = params.vehicle;
    const auto& bat = params.battery;
    const double dt = cfg.dt;
    const double eta = params.engine.motor_efficiency;

    Forward fw;
    fw.s.assign(N + 1, 0.0);
    fw.v.assign(N + 1, 0.0);
    fw.soc.assign(N + 1, 0.0);
    fw.pv.assign(N, 0.0);
    fw.pe.assign(N, 0.0);
    fw.current.assign(N, 0.0);
    fw.dcurrent.assign(N, 0.0);
    if (derivatives) {
        fw.dv_dF   = Eigen::MatrixXd::Zero(N + 1, N);
        fw.ds_dF   = Eigen::MatrixXd::Zero(N + 1, N);
        fw.dsoc_dP = Eigen::MatrixXd::Zero(N + 1, N);
        fw.dpe_dF  = Eigen::MatrixXd::Zero(N, N);
    }
    fw.s[0]   = x0.position;
    fw.v[0]   = x0.velocity;
    fw.soc[0] = soc0;

    const double gravity_force = veh.mass * veh.gravity * std::sin(veh.grade);

    for (int k = 0; k < N; ++k) {
        const double v = fw.v[k];
        const double F = force[k];

        const VehicleState next = step_longitudinal({fw.s[k], v}, F, dt, veh);
        fw.s[k + 1] = next.position;
        fw.v[k + 1] = next.velocity;

        fw.pv[k] = wheel_power(F, v);
        fw.pe[k] = engine_power_from_split(fw.pv[k], power[k], params.engine);

        fw.current[k]  = battery_current(power[k], bat);
        fw.dcurrent[k] = battery_current_derivative(power[k], bat);
        fw.soc[k + 1]  = fw.soc[k] - fw.current[k] * dt / bat.capacity;

        if (!derivatives) {
            continue;
        }
        // Local partials of the acceleration, matching net_acceleration's regimes.
        double a_v = 0.0;
        double a_F = 0.0;
        if (v <= 0.0) {
            a_F = (F - gravity_force >= 0.0) ? 1.0 / veh.mass : 0.0;
        } else {
            a_v = -2.0 * veh.aero_coeff * v / veh.mass;
            a_F = 1.0 / veh.mass;
        }
        const double unclamped = v + dt * net_acceleration({fw.s[k], v}, F, veh);
        const double gate = (unclamped < 0.0 || unclamped > veh.v_max) ? 0.0 : 1.0;
        for (int j = 0; j < k; ++j) {
            fw.dv_dF(k + 1, j) = gate * fw.dv_dF(k, j) * (1.0 + dt * a_v);
        }
        fw.dv_dF(k + 1, k) = gate * dt * a_F;
        for (int j = 0; j < k; ++j) {
            fw.ds_dF(k + 1, j) = fw.ds_dF(k, j) + dt * fw.dv_dF(k, j);
        }

        // P_v(k) = F(k) v(k): direct term plus the dependence of v(k) on earlier forces.
        for (int j = 0; j < k; ++j) {
            fw.dpe_dF(k, j) = F * fw.dv_dF(k, j) / eta;
        }
        fw.dpe_dF(k, k) = v / eta;

        for (int j = 0; j < k; ++j) {
            fw.dsoc_dP(k + 1, j) = fw.dsoc_dP(k, j);
        }
        fw.dsoc_dP(k + 1, k) = -fw.dcurrent[k] * dt / bat.capacity;
    }
    return fw;
}

void OcpProblem::Data::evaluate(const Eigen::VectorXd& z, bool derivatives,
                                nlp::NlpEvaluation& out) const
{
    const double fn  = cfg.force_norm;
    const double pn  = cfg.pb_norm;
    const double dt  = cfg.dt;
    const auto& eng  = params.engine;
    const auto& bat  = params.battery;
    const double pe_max = eng.max_power();
    const double v_max  = params.vehicle.v_max;

    std::vector<double> force(N);
    std::vector<double> power(N);
    for (int k = 0; k < N; ++k) {
        force[k] = fn * z(k);
        power[k] = pn * z(N + k);
    }
    const auto fw = forward(force, power, derivatives);

    const double w_motion  = std::sqrt(cfg.weights[0]);
    const double w_control = std::sqrt(cfg.weights[0] * cfg.control_weight);
    const double w_fuel    = std::sqrt(cfg.weights[1] * cfg.fuel_weight);
    const double w_soc     = std::sqrt(cfg.weights[2] * cfg.soc_weight);
    const double w_slack   = std::sqrt(cfg.soft_constraint_penalty);

    // Residual stack: objective = ||r||^2.
    const int base_force = 2 * (N + 1);
    const int base_fuel  = base_force + N;
    const int base_soc   = base_fuel + N + 1;
    const int base_slack = base_soc + N + 1;
    const int rows       = base_slack + 2 * N;
    const int n          = 4 * N;

    Eigen::VectorXd r(rows);
    Eigen::MatrixXd Jr;
    if (derivatives) {
        Jr = Eigen::MatrixXd::Zero(rows, n);
    }

    for (int k = 0; k <= N; ++k) {
        const Eigen::Vector2d e(fw.s[k] - window.s_ref[k], fw.v[k] - window.v_ref[k]);
        r.segment<2>(2 * k) = w_motion * (q_root * e);
        if (derivatives && k > 0) {
            for (int j = 0; j < k; ++j) {
                const Eigen::Vector2d de(fw.ds_dF(k, j) * fn, fw.dv_dF(k, j) * fn);
                Jr.block<2, 1>(2 * k, j) = w_motion * (q_root * de);
            }
        }
    }
    for (int k = 0; k < N; ++k) {
        r(base_force + k) = w_control * z(k);
        if (derivatives) {
            Jr(base_force + k, k) = w_control;
        }
    }
    for (int k = 0; k <= N; ++k) {
        const int stage = std::min(k, N - 1);
        r(base_fuel + k) = w_fuel * detail::affine_fuel_increment(fw.pe[stage], dt, eng);
        if (derivatives) {
            const double dm_dpe = w_fuel * dt * eng.fuel_alpha * 1e-3;
            for (int j = 0; j <= stage; ++j) {
                Jr(base_fuel + k, j) = dm_dpe * fw.dpe_dF(stage, j) * fn;
            }
            Jr(base_fuel + k, N + stage) = -dm_dpe * pn;
        }
    }
    for (int k = 0; k <= N; ++k) {
        r(base_soc + k) = w_soc * (fw.soc[k] - cfg.soc_ref);
        if (derivatives) {
            for (int j = 0; j < k; ++j) {
                Jr(base_soc + k, N + j) = w_soc * fw.dsoc_dP(k, j) * pn;
            }
        }
    }
    for (int i = 0; i < N; ++i) {
        r(base_slack + i)     = w_slack * z(2 * N + i);
        r(base_slack + N + i) = w_slack * z(3 * N + i);
        if (derivatives) {
            Jr(base_slack + i, 2 * N + i)     = w_slack;
            Jr(base_slack + N + i, 3 * N + i) = w_slack;
        }
    }

    out.objective = r.squaredNorm();

    const int m = 6 * N;
    out.constraints.resize(m);
    if (derivatives) {
        out.jacobian = Eigen::MatrixXd::Zero(m, n);
    }
    for (int i = 0; i < N; ++i) {
        const int k = i + 1;
        out.constraints(2 * i)     = fw.soc[k] - bat.soc_max - z(2 * N + i);
        out.constraints(2 * i + 1) = bat.soc_min - fw.soc[k] - z(2 * N + i);

        const int row_pe = 2 * N + 2 * i;
        out.constraints(row_pe)     = (fw.pe[i] - pe_max) / pn - z(3 * N + i);
        out.constraints(row_pe + 1) = -fw.pe[i] / pn - z(3 * N + i);

        const int row_v = 4 * N + 2 * i;
        out.constraints(row_v)     = (fw.v[k] - v_max) / v_max;
        out.constraints(row_v + 1) = -fw.v[k] / v_max;

        if (!derivatives) {
            continue;
        }
        for (int j = 0; j < k; ++j) {
            const double dsoc = fw.dsoc_dP(k, j) * pn;
            out.jacobian(2 * i, N + j)     = dsoc;
            out.jacobian(2 * i + 1, N + j) = -dsoc;
            const double dv = fw.dv_dF(k, j) * fn / v_max;
            out.jacobian(row_v, j)     = dv;
            out.jacobian(row_v + 1, j) = -dv;
        }
        out.jacobian(2 * i, 2 * N + i)     = -1.0;
        out.jacobian(2 * i + 1, 2 * N + i) = -1.0;

        for (int j = 0; j <= i; ++j) {
            const double dpe = fw.dpe_dF(i, j) * fn / pn;
            out.jacobian(row_pe, j)     = dpe;
            out.jacobian(row_pe + 1, j) = -dpe;
        }
        out.jacobian(row_pe, N + i)         = -1.0;
        out.jacobian(row_pe + 1, N + i)     = 1.0;
        out.jacobian(row_pe, 3 * N + i)     = -1.0;
        out.jacobian(row_pe + 1, 3 * N + i) = -1.0;
    }

    if (derivatives) {
        out.gradient    = 2.0 * Jr.transpose() * r;
        out.hessian     = 2.0 * Jr.transpose() * Jr;
        out.has_hessian = true;
    } else {
        out.has_hessian = false;
    }
}

OcpProblem::OcpProblem(const VehicleState& state, double soc, PreviewWindow window,
                       const MompcConfig& cfg, const ShevParams& params)
{
    cfg.validate();
    params.validate();
    if (window.size() != static_cast<std::size_t>(cfg.horizon) + 1 ||
        window.s_ref.size() != window.v_ref.size()) {
        throw ValidationError("build_ocp: preview window must hold N+1 samples");
    }
    if (!std::isfinite(state.position) || !std::isfinite(state.velocity) || state.velocity < 0.0 ||
        !(soc >= 0.0 && soc <= 1.0)) {
        throw ValidationError("build_ocp: state or SOC out of range");
    }

    auto data     = std::make_shared<Data>();
    data->x0      = state;
    data->soc0    = soc;
    data->window  = std::move(window);
    data->cfg     = cfg;
    data->params  = params;
    data->N       = cfg.horizon;
    const auto& bat = params.battery;
    data->pb_lo = battery_power_from_current(bat.current_min, bat);
    data->pb_hi = std::min(battery_power_from_current(bat.current_max, bat), bat.max_power_with_margin());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cfg.tracking_weight);
    const Eigen::Vector2d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    data->q_root = root.asDiagonal() * eig.eigenvectors().transpose();

    const int N = data->N;
    const auto& veh = params.vehicle;
    nlp_.lower = Eigen::VectorXd::Zero(4 * N);
    nlp_.upper = Eigen::VectorXd::Constant(4 * N, std::numeric_limits<double>::infinity());
    nlp_.lower.head(N).setConstant(veh.force_min / cfg.force_norm);
    nlp_.upper.head(N).setConstant(veh.force_max / cfg.force_norm);
    nlp_.lower.segment(N, N).setConstant(data->pb_lo / cfg.pb_norm);
    nlp_.upper.segment(N, N).setConstant(data->pb_hi / cfg.pb_norm);
    nlp_.num_constraints = 6 * N;

    std::shared_ptr<const Data> shared = data;
    nlp_.evaluate = [shared](const Eigen::VectorXd& z, bool derivatives, nlp::NlpEvaluation& out) {
        shared->evaluate(z, derivatives, out);
    };
    data_ = std::move(shared);
}

int OcpProblem::horizon() const noexcept
{
    return data_->N;
}

double OcpProblem::battery_power_min() const noexcept
{
    return data_->pb_lo;
}

double OcpProblem::battery_power_max() const noexcept
{
    return data_->pb_hi;
}

Eigen::VectorXd OcpProblem::encode(const DecisionVector& decision) const
{
    const int N = data_->N;
    if (decision.force.size() != static_cast<std::size_t>(N) ||
        decision.battery_power.size() != static_cast<std::size_t>(N)) {
        throw ValidationError("decision vector does not match the horizon");
    }
    const auto& cfg = data_->cfg;
    Eigen::VectorXd z(4 * N);
    DecisionVector clamped = decision;
    for (int k = 0; k < N; ++k) {
        z(k)     = std::clamp(decision.force[k] / cfg.force_norm, nlp_.lower(k), nlp_.upper(k));
        z(N + k) = std::clamp(decision.battery_power[k] / cfg.pb_norm, nlp_.lower(N + k), nlp_.upper(N + k));
        clamped.force[k]         = z(k) * cfg.force_norm;
        clamped.battery_power[k] = z(N + k) * cfg.pb_norm;
    }
    const auto fw = data_->forward(clamped.force, clamped.battery_power, false);
    const auto& bat = data_->params.battery;
    const double pe_max = data_->params.engine.max_power();
    for (int i = 0; i < N; ++i) {
        const double soc = fw.soc[i + 1];
        z(2 * N + i) = std::max({0.0, soc - bat.soc_max, bat.soc_min - soc});
        z(3 * N + i) = std::max({0.0, (fw.pe[i] - pe_max) / cfg.pb_norm, -fw.pe[i] / cfg.pb_norm});
    }
    return z;
}

DecisionVector OcpProblem::decode(const Eigen::VectorXd& z) const
{
    const int N = data_->N;
    DecisionVector d;
    d.force.resize(N);
    d.battery_power.resize(N);
    for (int k = 0; k < N; ++k) {
        d.force[k]         = z(k) * data_->cfg.force_norm;
        d.battery_power[k] = z(N + k) * data_->cfg.pb_norm;
    }
    return d;
}

Prediction OcpProblem::predict(const DecisionVector& decision) const
{
    const auto fw = data_->forward(decision.force, decision.battery_power, false);
    Prediction p;
    p.states.resize(fw.s.size());
    for (std::size_t k = 0; k < fw.s.size(); ++k) {
        p.states[k] = {fw.s[k], fw.v[k]};
    }
    p.soc          = fw.soc;
    p.wheel_power  = fw.pv;
    p.engine_power = fw.pe;
    p.current      = fw.current;
    return p;
}

CostBreakdown OcpProblem::costs(const Eigen::VectorXd& z) const
{
    const auto& cfg = data_->cfg;
    const int N = data_->N;
    const auto decision = decode(z);
    const auto pred = predict(decision);

    CostBreakdown c;
    c.motion  = motion_cost(pred.states, decision.force, data_->window, cfg.tracking_weight,
                            cfg.control_weight, cfg.force_norm);
    c.fuel    = fuel_cost_unchecked(pred.engine_power, cfg.fuel_weight, cfg.dt, data_->params.engine);
    c.battery = battery_cost(pred.soc, cfg.soc_ref, cfg.soc_weight);
    double slack = 0.0;
    for (int i = 2 * N; i < 4 * N; ++i) {
        slack += z(i) * z(i);
    }
    c.slack_penalty = cfg.soft_constraint_penalty * slack;
    c.total = cfg.weights[0] * c.motion + cfg.weights[1] * c.fuel + cfg.weights[2] * c.battery +
              c.slack_penalty;
    return c;
}

DecisionVector OcpProblem::feedforward_guess() const
{
    const auto& veh = data_->params.vehicle;
    const auto& w   = data_->window;
    const int N = data_->N;
    DecisionVector d;
    d.force.resize(N);
    d.battery_power.assign(N, 0.0);
    for (int k = 0; k < N; ++k) {
        const double v     = w.v_ref[k];
        const double accel = (w.v_ref[k + 1] - v) / data_->cfg.dt;
        double force = veh.mass * accel + veh.mass * veh.gravity * std::sin(veh.grade);
        if (v > 0.0) {
            force += veh.aero_coeff * v * v + veh.mass * veh.gravity * veh.rolling_resistance * std::cos(veh.grade);
        }
        d.force[k] = std::clamp(force, veh.force_min, veh.force_max);
    }
    return d;
}

OcpSolution OcpProblem::make_solution(const Eigen::VectorXd& z) const
{
    const int N = data_->N;
    OcpSolution sol;
    sol.decision   = decode(z);
    sol.prediction = predict(sol.decision);
    sol.cost       = costs(z);
    sol.soc_slack.assign(z.data() + 2 * N, z.data() + 3 * N);
    sol.engine_slack.assign(z.data() + 3 * N, z.data() + 4 * N);
    return sol;
}

OcpProblem build_ocp(const VehicleState& state, double soc, const PreviewWindow& window,
                     const MompcConfig& cfg, const ShevParams& params)
{
    return OcpProblem(state, soc, window, cfg, params);
}

DecisionVector shift_plan(const DecisionVector& plan)
{
    DecisionVector shifted = plan;
    if (plan.force.size() > 1) {
        std::rotate(shifted.force.begin(), shifted.force.begin() + 1, shifted.force.end());
        std::rotate(shifted.battery_power.begin(), shifted.battery_power.begin() + 1,
                    shifted.battery_power.end());
        shifted.force.back()         = plan.force.back();
        shifted.battery_power.back() = plan.battery_power.back();
    }
    return shifted;
}

DecisionVector fallback_plan(const OcpProblem& ocp, const OcpSolution* previous)
{
    const int N = ocp.horizon();
    DecisionVector plan = ocp.feedforward_guess();
    if (previous != nullptr && previous->decision.horizon() == static_cast<std::size_t>(N)) {
        plan.force = shift_plan(previous->decision).force;
    }
    // Battery carries the electric demand of the predicted wheel power, saturated at its box.
    plan.battery_power.assign(N, 0.0);
    const auto pred = ocp.predict(plan);
    for (int k = 0; k < N; ++k) {
        const double demand = pred.engine_power[k];  // P_v / eta_m with P_b = 0
        plan.battery_power[k] = std::clamp(demand, ocp.battery_power_min(), ocp.battery_power_max());
    }
    return plan;
}

namespace {

// A plan that leaves the vehicle parked while the reference moves sits on the
// standstill kink, where the force gradient vanishes.
bool stalled(const OcpSolution& sol, const PreviewWindow& window)
{
    const auto& states = sol.prediction.states;
    for (std::size_t k = 1; k < states.size(); ++k) {
        if (states[k].velocity <= 0.0 && window.v_ref[k] > 0.0) {
            return true;
        }
    }
    return false;
}

OcpSolution solve_from(const OcpProblem& ocp, const Eigen::VectorXd& z0, const MompcConfig& cfg,
                       const OcpSolution* previous)
{
    const auto result = nlp::solve_nlp(ocp.nlp(), z0, cfg.solver);
    OcpSolution sol;
    if (result.status == nlp::SolveStatus::Infeasible) {
        sol = ocp.make_solution(ocp.encode(fallback_plan(ocp, previous)));
        sol.fallback = true;
    } else {
        sol = ocp.make_solution(result.x);
    }
    sol.status               = result.status;
    sol.iterations           = result.iterations;
    sol.kkt_residual         = result.kkt_residual;
    sol.constraint_violation = result.constraint_violation;
    return sol;
}

}  // namespace

OcpSolution solve_step(const VehicleState& state, double soc, const PreviewWindow& window,
                       const MompcConfig& cfg, const ShevParams& params, const OcpSolution* warm)
{
    const OcpProblem ocp = build_ocp(state, soc, window, cfg, params);
    const bool usable_warm =
        warm != nullptr && warm->decision.horizon() == static_cast<std::size_t>(cfg.horizon);
    const OcpSolution* previous = usable_warm ? warm : nullptr;

    const Eigen::VectorXd z0 =
        usable_warm ? ocp.encode(shift_plan(warm->decision)) : ocp.encode(ocp.feedforward_guess());
    OcpSolution sol = solve_from(ocp, z0, cfg, previous);

    if (stalled(sol, window)) {
        OcpSolution alt = solve_from(ocp, ocp.encode(ocp.feedforward_guess()), cfg, previous);
        const int iterations = sol.iterations + alt.iterations;
        if (!alt.fallback && (sol.fallback || alt.cost.total < sol.cost.total)) {
            sol = std::move(alt);
        }
        sol.iterations = iterations;
    }
    return sol;
}

}  // namespace shev
