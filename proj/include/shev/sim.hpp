#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "shev/drive_cycle.hpp"
#include "shev/mompc.hpp"
#include "shev/powertrain.hpp"

namespace shev {

// One closed-loop step. State and SOC are sampled at t, before the control is
// applied; the control columns are what the plant actually received.
struct StepRecord {
    double t = 0.0;
    double s = 0.0;
    double s_ref = 0.0;
    double v = 0.0;
    double v_ref = 0.0;
    double F_d = 0.0;
    double P_r = 0.0;  // electric drive power, eta_m (P_e + P_b)
    double P_b = 0.0;
    double P_e = 0.0;
    double I_b = 0.0;
    double soc = 0.0;
    double mdot_f = 0.0;
    double cost_total = 0.0;
    double J_m = 0.0;
    double J_f = 0.0;
    double J_b = 0.0;
    int solver_iters = 0;
    double kkt_residual = 0.0;
    bool fallback = false;
    double friction_brake_W = 0.0;  // P_r - F_d v, braking the battery could not absorb
};

struct SimLog {
    double dt = 1.0;
    double initial_soc = 0.0;
    std::vector<StepRecord> records;
    VehicleState final_state;
    double final_soc = 0.0;
};

struct SimMetrics {
    double total_fuel_g = 0.0;
    double velocity_rmse = 0.0;
    double position_rmse = 0.0;
    double soc_final = 0.0;
    double soc_min = 0.0;
    double soc_max = 0.0;
    double current_min = 0.0;
    double current_max = 0.0;
    int violation_count = 0;
    double mean_solve_iterations = 0.0;
    int fallback_count = 0;
};

struct SimOptions {
    VehicleState initial{};
    double initial_soc = 0.66;
    // Plant parameters when they should differ from the prediction model.
    std::optional<ShevParams> plant;
    // Called after every step with (index, count).
    std::function<void(std::size_t, std::size_t)> progress;
};

// Control as realized by the plant after projection onto the hard limits.
struct AppliedControl {
    double force = 0.0;
    double battery_power = 0.0;
    double wheel_power = 0.0;   // F_d v
    double drive_power = 0.0;   // eta_m (P_e + P_b)
    double engine_power = 0.0;
    double current = 0.0;
    double fuel_rate = 0.0;
    double friction_brake = 0.0;
    VehicleState next_state;
    double next_soc = 0.0;
};

// Clamp (F_d, P_b) to their boxes, shift any engine-power excess onto the
// battery and then onto a force reduction, and advance the plant one step.
[[nodiscard]] AppliedControl apply_control(const VehicleState& state, double soc, double force,
                                           double battery_power, double dt, const ShevParams& plant);

// Receding-horizon loop over a cycle already on the controller grid.
// Throws SimulationError if the plant rejects an applied control.
[[nodiscard]] SimLog run_closed_loop(const DriveCycle& cycle, const MompcConfig& cfg,
                                     const ShevParams& params, const SimOptions& options = {});

[[nodiscard]] SimMetrics compute_metrics(const SimLog& log, const BatteryParams& battery);

// Re-simulate the plant from the logged controls and compare every logged
// quantity within 1e-9.
[[nodiscard]] bool replay_check(const SimLog& log, const ShevParams& plant);

}  // namespace shev
