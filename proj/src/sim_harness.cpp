#include "shev/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shev/errors.hpp"

namespace shev {

AppliedControl apply_control(const VehicleState& state, double soc, double force, double battery_power,
                             double dt, const ShevParams& plant)
{
    const auto& veh = plant.vehicle;
    const auto& bat = plant.battery;
    const auto& eng = plant.engine;
    const double eta    = eng.motor_efficiency;
    const double pe_max = eng.max_power();
    const double pb_lo  = battery_power_from_current(bat.current_min, bat);
    const double pb_hi  = std::min(battery_power_from_current(bat.current_max, bat), bat.max_power_with_margin());

    AppliedControl out;
    out.force         = std::clamp(force, veh.force_min, veh.force_max);
    out.battery_power = std::clamp(battery_power, pb_lo, pb_hi);

    const double v = state.velocity;
    double pe_raw = engine_power_from_split(wheel_power(out.force, v), out.battery_power, eng);
    if (pe_raw > pe_max) {
        out.battery_power = std::min(pb_hi, wheel_power(out.force, v) / eta - pe_max);
        pe_raw = engine_power_from_split(wheel_power(out.force, v), out.battery_power, eng);
        if (pe_raw > pe_max && v > 0.0) {
            out.force = eta * (pe_max + out.battery_power) / v;
            pe_raw    = engine_power_from_split(wheel_power(out.force, v), out.battery_power, eng);
        }
    }
    out.wheel_power    = wheel_power(out.force, v);
    out.engine_power   = std::clamp(pe_raw, 0.0, pe_max);
    out.drive_power    = eta * (out.engine_power + out.battery_power);
    out.friction_brake = out.drive_power - out.wheel_power;

    try {
        out.current  = battery_current(out.battery_power, bat);
        out.next_soc = step_soc(soc, out.battery_power, dt, bat);
    } catch (const DomainError& e) {
        throw SimulationError(std::string("applied battery power rejected by the plant: ") + e.what());
    }
    out.fuel_rate  = fuel_rate(out.engine_power, eng);
    out.next_state = step_longitudinal(state, out.force, dt, veh);
    return out;
}

SimLog run_closed_loop(const DriveCycle& cycle, const MompcConfig& cfg, const ShevParams& params,
                       const SimOptions& options)
{
    cfg.validate();
    params.validate();
    const ShevParams& plant = options.plant ? *options.plant : params;
    plant.validate();

    const auto ref = reference_trajectory(cycle, cfg.dt);
    const std::size_t steps = ref.size();

    SimLog log;
    log.dt          = cfg.dt;
    log.initial_soc = options.initial_soc;
    log.records.reserve(steps);

    VehicleState state = options.initial;
    double soc = options.initial_soc;
    std::optional<OcpSolution> previous;

    for (std::size_t k = 0; k < steps; ++k) {
        const auto window = preview(ref, k, static_cast<std::size_t>(cfg.horizon));
        OcpSolution sol = solve_step(state, soc, window, cfg, params, previous ? &*previous : nullptr);

        const auto applied = apply_control(state, soc, sol.decision.force.front(),
                                           sol.decision.battery_power.front(), cfg.dt, plant);

        StepRecord r;
        r.t                = static_cast<double>(k) * cfg.dt;
        r.s                = state.position;
        r.s_ref            = ref.s_ref[k];
        r.v                = state.velocity;
        r.v_ref            = ref.v_ref[k];
        r.F_d              = applied.force;
        r.P_r              = applied.drive_power;
        r.P_b              = applied.battery_power;
        r.P_e              = applied.engine_power;
        r.I_b              = applied.current;
        r.soc              = soc;
        r.mdot_f           = applied.fuel_rate;
        r.cost_total       = sol.cost.total;
        r.J_m              = sol.cost.motion;
        r.J_f              = sol.cost.fuel;
        r.J_b              = sol.cost.battery;
        r.solver_iters     = sol.iterations;
        r.kkt_residual     = sol.kkt_residual;
        r.fallback         = sol.fallback;
        r.friction_brake_W = applied.friction_brake;
        log.records.push_back(r);

        state = applied.next_state;
        soc   = applied.next_soc;
        previous = std::move(sol);
        if (options.progress) {
            options.progress(k + 1, steps);
        }
    }
    log.final_state = state;
    log.final_soc   = soc;
    return log;
}

SimMetrics compute_metrics(const SimLog& log, const BatteryParams& battery)
{
    if (log.records.empty()) {
        throw ValidationError("compute_metrics: empty log");
    }
    SimMetrics m;
    m.soc_min     = log.records.front().soc;
    m.soc_max     = log.records.front().soc;
    m.current_min = log.records.front().I_b;
    m.current_max = log.records.front().I_b;
    double sv = 0.0;
    double ss = 0.0;
    double iters = 0.0;
    for (const auto& r : log.records) {
        m.total_fuel_g += r.mdot_f * log.dt;
        sv += (r.v - r.v_ref) * (r.v - r.v_ref);
        ss += (r.s - r.s_ref) * (r.s - r.s_ref);
        m.soc_min     = std::min(m.soc_min, r.soc);
        m.soc_max     = std::max(m.soc_max, r.soc);
        m.current_min = std::min(m.current_min, r.I_b);
        m.current_max = std::max(m.current_max, r.I_b);
        const bool current_bad = r.I_b > battery.current_max + 1e-6 || r.I_b < battery.current_min - 1e-6;
        const bool soc_bad     = r.soc > battery.soc_max + 1e-6 || r.soc < battery.soc_min - 1e-6;
        if (current_bad || soc_bad) {
            ++m.violation_count;
        }
        iters += r.solver_iters;
        if (r.fallback) {
            ++m.fallback_count;
        }
    }
    const auto n = static_cast<double>(log.records.size());
    m.velocity_rmse = std::sqrt(sv / n);
    m.position_rmse = std::sqrt(ss / n);
    m.mean_solve_iterations = iters / n;
    m.soc_final = log.final_soc;
    m.soc_min   = std::min(m.soc_min, log.final_soc);
    m.soc_max   = std::max(m.soc_max, log.final_soc);
    return m;
}

namespace {

bool close(double logged, double replayed)
{
    return std::abs(logged - replayed) <= 1e-9 * std::max(1.0, std::abs(replayed));
}

}  // namespace

bool replay_check(const SimLog& log, const ShevParams& plant)
{
    if (log.records.empty()) {
        return true;
    }
    const auto& eng = plant.engine;
    VehicleState state{log.records.front().s, log.records.front().v};
    double soc = log.initial_soc;
    try {
        for (const auto& r : log.records) {
            if (!close(r.s, state.position) || !close(r.v, state.velocity) || !close(r.soc, soc)) {
                return false;
            }
            const double pe_raw = engine_power_from_split(wheel_power(r.F_d, state.velocity), r.P_b, eng);
            const double pe = std::clamp(pe_raw, 0.0, eng.max_power());
            if (!close(r.P_e, pe) || !close(r.I_b, battery_current(r.P_b, plant.battery)) ||
                !close(r.mdot_f, fuel_rate(r.P_e, eng)) ||
                !close(r.P_r, eng.motor_efficiency * (r.P_e + r.P_b))) {
                return false;
            }
            state = step_longitudinal(state, r.F_d, log.dt, plant.vehicle);
            soc   = step_soc(soc, r.P_b, log.dt, plant.battery);
        }
    } catch (const std::exception&) {
        return false;
    }
    return close(log.final_state.position, state.position) &&
           close(log.final_state.velocity, state.velocity) && close(log.final_soc, soc);
}

}  // namespace shev
