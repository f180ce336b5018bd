#include "shev/powertrain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shev/errors.hpp"

namespace shev {

namespace {

void require_finite(double value, const char* name)
{
    if (!std::isfinite(value)) {
        throw ValidationError(std::string{name} + " must be finite");
    }
}

void require(bool condition, const char* message)
{
    if (!condition) {
        throw ValidationError(message);
    }
}

}  // namespace

void VehicleParams::validate() const
{
    for (auto [value, name] : {std::pair{mass, "vehicle.mass"},
                               {driveline_efficiency, "vehicle.driveline_efficiency"},
                               {tire_radius, "vehicle.tire_radius"},
                               {aero_coeff, "vehicle.aero_coeff"},
                               {rolling_resistance, "vehicle.rolling_resistance"},
                               {gravity, "vehicle.gravity"},
                               {grade, "vehicle.grade"},
                               {force_min, "vehicle.force_min"},
                               {force_max, "vehicle.force_max"},
                               {v_max, "vehicle.v_max"}}) {
        require_finite(value, name);
    }
    require(mass > 0.0, "vehicle.mass must be positive");
    require(driveline_efficiency > 0.0 && driveline_efficiency <= 1.0,
            "vehicle.driveline_efficiency must be in (0, 1]");
    require(aero_coeff >= 0.0, "vehicle.aero_coeff must be non-negative");
    require(rolling_resistance >= 0.0, "vehicle.rolling_resistance must be non-negative");
    require(force_min < 0.0 && force_max > 0.0, "vehicle force bounds must satisfy force_min < 0 < force_max");
    require(v_max > 0.0, "vehicle.v_max must be positive");
}

void BatteryParams::validate() const
{
    for (auto [value, name] : {std::pair{open_circuit_voltage, "battery.open_circuit_voltage"},
                               {resistance, "battery.resistance"},
                               {capacity, "battery.capacity"},
                               {soc_min, "battery.soc_min"},
                               {soc_max, "battery.soc_max"},
                               {current_min, "battery.current_min"},
                               {current_max, "battery.current_max"}}) {
        require_finite(value, name);
    }
    require(open_circuit_voltage > 0.0, "battery.open_circuit_voltage must be positive");
    require(resistance > 0.0, "battery.resistance must be positive");
    require(capacity > 0.0, "battery.capacity must be positive");
    require(0.0 <= soc_min && soc_min < soc_max && soc_max <= 1.0,
            "battery SOC limits must satisfy 0 <= soc_min < soc_max <= 1");
    require(current_min < 0.0 && current_max > 0.0,
            "battery current limits must satisfy current_min < 0 < current_max");
    require(std::isfinite(max_power()) && max_power() > 0.0, "battery discharge power bound must be finite");
}

double BatteryParams::max_power() const noexcept
{
    return open_circuit_voltage * open_circuit_voltage / (4.0 * resistance);
}

double BatteryParams::max_power_with_margin() const noexcept
{
    return max_power() * (1.0 - 1e-9);
}

void EngineParams::validate() const
{
    for (auto [value, name] : {std::pair{speed_min, "engine.speed_min"},
                               {speed_max, "engine.speed_max"},
                               {torque_min, "engine.torque_min"},
                               {torque_max, "engine.torque_max"},
                               {motor_efficiency, "engine.motor_efficiency"},
                               {fuel_alpha, "engine.fuel_alpha"},
                               {fuel_beta, "engine.fuel_beta"}}) {
        require_finite(value, name);
    }
    require(0.0 <= speed_min && speed_min < speed_max, "engine speed limits must satisfy 0 <= min < max");
    require(0.0 <= torque_min && torque_min < torque_max, "engine torque limits must satisfy 0 <= min < max");
    require(motor_efficiency > 0.0 && motor_efficiency <= 1.0, "engine.motor_efficiency must be in (0, 1]");
    require(fuel_alpha > 0.0, "engine.fuel_alpha must be positive");
    require(fuel_beta >= 0.0, "engine.fuel_beta must be non-negative");
}

// ---------------------------------------------------------------------------
// Longitudinal dynamics

double net_acceleration(const VehicleState& state, double traction_force, const VehicleParams& p)
{
    return net_acceleration(state, traction_force, p, p.grade);
}

double net_acceleration(const VehicleState& state, double traction_force, const VehicleParams& p,
                        double grade)
{
    if (!std::isfinite(state.velocity) || !std::isfinite(traction_force) || !std::isfinite(grade)) {
        throw ValidationError("net_acceleration: non-finite input");
    }
    const double gravity_force = p.mass * p.gravity * std::sin(grade);
    if (state.velocity <= 0.0) {
        // Resistive forces vanish at standstill; the vehicle never rolls backwards.
        return std::max(traction_force - gravity_force, 0.0) / p.mass;
    }
    const double v = state.velocity;
    const double resistive =
        p.aero_coeff * v * v + p.mass * p.gravity * p.rolling_resistance * std::cos(grade);
    return (traction_force - resistive - gravity_force) / p.mass;
}

VehicleState step_longitudinal(const VehicleState& state, double traction_force, double dt,
                               const VehicleParams& p)
{
    return step_longitudinal(state, traction_force, dt, p, p.grade);
}

VehicleState step_longitudinal(const VehicleState& state, double traction_force, double dt,
                               const VehicleParams& p, double grade)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("step_longitudinal: dt must be positive");
    }
    const double accel = net_acceleration(state, traction_force, p, grade);
    VehicleState next;
    next.position = state.position + dt * state.velocity;
    next.velocity = std::clamp(state.velocity + dt * accel, 0.0, p.v_max);
    return next;
}

double wheel_power(double traction_force, double velocity)
{
    return traction_force * velocity;
}

double engine_power_from_split(double requested_power, double battery_power, const EngineParams& eng)
{
    return requested_power / eng.motor_efficiency - battery_power;
}

// ---------------------------------------------------------------------------
// Battery

double battery_current(double battery_power, const BatteryParams& b)
{
    if (!std::isfinite(battery_power)) {
        throw DomainError("battery_current: non-finite battery power");
    }
    if (battery_power > b.max_power_with_margin()) {
        throw DomainError("battery_current: requested discharge power " + std::to_string(battery_power) +
                          " W exceeds the battery capability");
    }
    const double v = b.open_circuit_voltage;
    const double root = std::sqrt(v * v - 4.0 * b.resistance * battery_power);
    // Rationalized form of (V - sqrt(V^2 - 4 R P)) / (2 R); no cancellation near P = 0.
    return 2.0 * battery_power / (v + root);
}

double battery_current_derivative(double battery_power, const BatteryParams& b)
{
    const double v = b.open_circuit_voltage;
    return 1.0 / std::sqrt(v * v - 4.0 * b.resistance * battery_power);
}

double battery_power_from_current(double current, const BatteryParams& b)
{
    return current * (b.open_circuit_voltage - current * b.resistance);
}

double step_soc(double soc, double battery_power, double dt, const BatteryParams& b)
{
    return soc - battery_current(battery_power, b) * dt / b.capacity;
}

// ---------------------------------------------------------------------------
// Engine

double fuel_rate(double engine_power, const EngineParams& eng)
{
    if (!(engine_power >= 0.0) || !std::isfinite(engine_power)) {
        throw RangeError("fuel_rate: engine power must be non-negative");
    }
    return eng.fuel_alpha * engine_power * 1e-3 + eng.fuel_beta;
}

double fuel_increment(double engine_power, double dt, const EngineParams& eng)
{
    if (!(dt > 0.0)) {
        throw ValidationError("fuel_increment: dt must be positive");
    }
    return dt * fuel_rate(engine_power, eng);
}

OperatingLine OperatingLine::max_torque(const EngineParams& eng)
{
    OperatingLine line;
    line.engine_ = eng;
    return line;
}

OperatingLine OperatingLine::from_table(std::vector<std::pair<double, double>> power_to_speed,
                                        const EngineParams& eng)
{
    if (power_to_speed.size() < 2) {
        throw ValidationError("operating line table needs at least two points");
    }
    for (std::size_t i = 1; i < power_to_speed.size(); ++i) {
        if (!(power_to_speed[i].first > power_to_speed[i - 1].first)) {
            throw ValidationError("operating line powers must be strictly increasing");
        }
    }
    OperatingLine line;
    line.engine_ = eng;
    line.table_  = std::move(power_to_speed);
    return line;
}

OperatingPoint OperatingLine::at(double engine_power) const
{
    const double p_max = engine_.max_power();
    if (!(engine_power >= 0.0) || engine_power > p_max) {
        throw RangeError("engine power " + std::to_string(engine_power) + " W outside [0, " +
                         std::to_string(p_max) + "] W");
    }
    if (engine_power == 0.0) {
        return {};
    }
    double speed = 0.0;
    if (table_.empty()) {
        speed = engine_power / engine_.torque_max;
    } else {
        if (engine_power < table_.front().first || engine_power > table_.back().first) {
            throw RangeError("engine power outside the operating line table");
        }
        auto upper = std::lower_bound(table_.begin(), table_.end(), engine_power,
                                      [](const auto& entry, double p) { return entry.first < p; });
        if (upper == table_.begin()) {
            speed = upper->second;
        } else {
            auto lower   = std::prev(upper);
            const double w = (engine_power - lower->first) / (upper->first - lower->first);
            speed = lower->second + w * (upper->second - lower->second);
        }
    }
    OperatingPoint point{speed, engine_power / speed, engine_power};
    if (point.speed < engine_.speed_min || point.speed > engine_.speed_max ||
        point.torque < engine_.torque_min || point.torque > engine_.torque_max * (1.0 + 1e-12)) {
        throw RangeError("operating point leaves the engine speed/torque envelope");
    }
    return point;
}

OperatingPoint engine_operating_point(double engine_power, const EngineParams& eng)
{
    return OperatingLine::max_torque(eng).at(engine_power);
}

FuelFit fit_fuel_coefficients(std::span<const FuelSample> samples)
{
    if (samples.size() < 2) {
        throw DegenerateData("fuel fit needs at least two samples");
    }
    const double n = static_cast<double>(samples.size());
    double mean_p = 0.0;
    double mean_f = 0.0;
    for (const auto& s : samples) {
        mean_p += s.engine_power * 1e-3;
        mean_f += s.fuel_rate;
    }
    mean_p /= n;
    mean_f /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& s : samples) {
        const double dx = s.engine_power * 1e-3 - mean_p;
        const double dy = s.fuel_rate - mean_f;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) {
        throw DegenerateData("fuel fit needs at least two distinct engine powers");
    }

    FuelFit fit;
    fit.alpha = sxy / sxx;
    fit.beta  = mean_f - fit.alpha * mean_p;

    double ss_res = 0.0;
    for (const auto& s : samples) {
        const double r = s.fuel_rate - (fit.alpha * s.engine_power * 1e-3 + fit.beta);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace shev
