#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "shev/drive_cycle.hpp"
#include "shev/nlp.hpp"
#include "shev/powertrain.hpp"

namespace shev {

// Weighted-sum MOMPC settings. Defaults are the reference controller: N = 10
// one-second stages, equal weights, Q = I, S = 1, R = 5, P = 300, SOC_r = 0.5.
struct MompcConfig {
    int horizon = 10;
    double dt   = 1.0;
    std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // motion, fuel, battery
    Eigen::Matrix2d tracking_weight = Eigen::Matrix2d::Identity();    // Q on (s, v) error
    double control_weight  = 1.0;     // S on F_d / force_norm
    double fuel_weight     = 5.0;     // R
    double soc_weight      = 300.0;   // P
    double soc_ref         = 0.5;
    double force_norm      = 3000.0;  // N
    double pb_norm         = 1.0e4;   // W
    double soft_constraint_penalty = 1.0e4;  // rho
    nlp::SolverOptions solver{};

    void validate() const;
};

// Scale a non-negative weight triple so it sums to one. Throws ValidationError
// when all weights are zero or any is negative.
[[nodiscard]] std::array<double, 3> normalize_weights(std::array<double, 3> weights);

struct DecisionVector {
    std::vector<double> force;          // F_d(0..N-1), N
    std::vector<double> battery_power;  // P_b(0..N-1), W

    [[nodiscard]] std::size_t horizon() const noexcept { return force.size(); }
};

// Horizon trajectories obtained by forward substitution of the plant model.
struct Prediction {
    std::vector<VehicleState> states;  // N+1
    std::vector<double> soc;           // N+1
    std::vector<double> wheel_power;   // N, F_d(k) v(k)
    std::vector<double> engine_power;  // N, may dip below zero inside soft bounds
    std::vector<double> current;       // N
};

struct CostBreakdown {
    double motion        = 0.0;  // J_m
    double fuel          = 0.0;  // J_f
    double battery       = 0.0;  // J_b
    double slack_penalty = 0.0;
    double total         = 0.0;  // a1 J_m + a2 J_f + a3 J_b + slack penalty
};

struct OcpSolution {
    DecisionVector decision;
    std::vector<double> soc_slack;     // N, stages 1..N
    std::vector<double> engine_slack;  // N, in units of pb_norm
    Prediction prediction;
    CostBreakdown cost;

    nlp::SolveStatus status = nlp::SolveStatus::MaxIter;
    int iterations          = 0;
    double kkt_residual     = 0.0;
    double constraint_violation = 0.0;
    bool fallback           = false;
};

// Sum_{k=0..N} ||x(k) - x_d(k)||_Q^2 + Sum_{k=0..N-1} S (F_d(k) / F_norm)^2.
[[nodiscard]] double motion_cost(std::span<const VehicleState> states, std::span<const double> forces,
                                 const PreviewWindow& window, const Eigen::Matrix2d& Q, double S,
                                 double force_norm);

// Sum_{k=0..N} R dm_f(k)^2, with the terminal stage reusing P_e(N-1).
// Rejects negative engine power.
[[nodiscard]] double fuel_cost(std::span<const double> engine_power, double R, double dt,
                               const EngineParams& eng);

// Sum_{k=0..N} P (SOC(k) - SOC_r)^2.
[[nodiscard]] double battery_cost(std::span<const double> soc, double soc_ref, double P);

// Single-shooting transcription of the weighted-sum problem for one control
// step. Decision layout (length 4N, scaled):
//   [F_d / force_norm | P_b / pb_norm | SOC slack (k=1..N) | engine slack / pb_norm]
// Constraints (6N, all <= 0): SOC upper/lower, engine power upper/lower, speed upper/lower.
class OcpProblem {
public:
    OcpProblem(const VehicleState& state, double soc, PreviewWindow window, const MompcConfig& cfg,
               const ShevParams& params);

    [[nodiscard]] const nlp::NlpProblem& nlp() const noexcept { return nlp_; }
    [[nodiscard]] int horizon() const noexcept;
    [[nodiscard]] int dimension() const noexcept { return 4 * horizon(); }

    // Battery-power box implied by the current limits and the current-equation domain.
    [[nodiscard]] double battery_power_min() const noexcept;
    [[nodiscard]] double battery_power_max() const noexcept;

    // Scaled decision with the smallest slacks that make it feasible.
    [[nodiscard]] Eigen::VectorXd encode(const DecisionVector& decision) const;
    [[nodiscard]] DecisionVector decode(const Eigen::VectorXd& z) const;

    [[nodiscard]] Prediction predict(const DecisionVector& decision) const;
    [[nodiscard]] CostBreakdown costs(const Eigen::VectorXd& z) const;

    // Stage-wise feedforward that follows the reference speed with the battery idle.
    [[nodiscard]] DecisionVector feedforward_guess() const;

    // Fill a solution record (prediction, costs, slacks) for a scaled decision.
    [[nodiscard]] OcpSolution make_solution(const Eigen::VectorXd& z) const;

    struct Data;

private:
    std::shared_ptr<const Data> data_;
    nlp::NlpProblem nlp_;
};

[[nodiscard]] OcpProblem build_ocp(const VehicleState& state, double soc, const PreviewWindow& window,
                                   const MompcConfig& cfg, const ShevParams& params);

// Previous plan shifted by one stage with the last stage repeated.
[[nodiscard]] DecisionVector shift_plan(const DecisionVector& plan);

// Conservative plan used when the optimizer reports infeasibility: keep the
// shifted force plan and let the battery carry the electric demand within its box.
[[nodiscard]] DecisionVector fallback_plan(const OcpProblem& ocp, const OcpSolution* previous);

// One receding-horizon solve, warm-started from `warm` when provided.
[[nodiscard]] OcpSolution solve_step(const VehicleState& state, double soc, const PreviewWindow& window,
                                     const MompcConfig& cfg, const ShevParams& params,
                                     const OcpSolution* warm = nullptr);

struct ParetoPoint {
    std::array<double, 3> weights{};
    double motion_cost = 0.0;  // J_1 = J_m
    double energy_cost = 0.0;  // J_2 = J_f + J_b
    bool dominated     = false;
};

// K weight triples spread over the probability simplex.
[[nodiscard]] std::vector<std::array<double, 3>> simplex_grid(int count);

// Flag every point that another point weakly improves in both objectives and
// strictly improves in one. Order independent.
void mark_dominated(std::vector<ParetoPoint>& points);

// One OCP per distinct weight triple at a fixed state and preview window.
// `jobs` > 1 solves concurrently; results keep the input order.
[[nodiscard]] std::vector<ParetoPoint> pareto_sweep(const VehicleState& state, double soc,
                                                    const PreviewWindow& window,
                                                    std::span<const std::array<double, 3>> weight_grid,
                                                    const MompcConfig& cfg, const ShevParams& params,
                                                    int jobs = 1);

}  // namespace shev
