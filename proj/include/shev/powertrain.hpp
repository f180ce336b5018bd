#pragma once

#include <span>
#include <utility>
#include <vector>

namespace shev {

// Longitudinal vehicle parameters. Defaults are the reference sedan-class SHEV.
struct VehicleParams {
    double mass                 = 1405.0;   // kg
    double driveline_efficiency = 0.96;     // carried for completeness, traction force is at the wheel
    double tire_radius          = 0.3050;   // m, unused by the force-input dynamics
    double aero_coeff           = 0.5063;   // kg/m, drag force = aero_coeff * v^2
    double rolling_resistance   = 0.01;
    double gravity              = 9.81;     // m/s^2
    double grade                = 0.0;      // rad
    double force_min            = -3000.0;  // N
    double force_max            = 3000.0;   // N
    double v_max                = 40.0;     // m/s

    void validate() const;
};

struct VehicleState {
    double position = 0.0;  // m
    double velocity = 0.0;  // m/s
};

struct BatteryParams {
    double open_circuit_voltage = 220.64;          // V
    double resistance           = 0.3757;          // ohm
    double capacity             = 23.4 * 3600.0;   // C
    double soc_min              = 0.3;
    double soc_max              = 0.8;
    double current_min          = -90.0;  // A, charging
    double current_max          = 90.0;   // A, discharging

    void validate() const;

    // Upper end of the battery-current domain, V_oc^2 / (4 R_b).
    [[nodiscard]] double max_power() const noexcept;
    // Largest admissible discharge power after the 1e-9 relative domain margin.
    [[nodiscard]] double max_power_with_margin() const noexcept;
};

struct EngineParams {
    double speed_min         = 0.0;     // rad/s
    double speed_max         = 105.0;   // rad/s
    double torque_min        = 0.0;     // N m
    double torque_max        = 112.0;   // N m
    double motor_efficiency  = 0.96;
    double fuel_alpha        = 0.0614;  // g/(s kW)
    double fuel_beta         = 0.0583;  // g/s

    void validate() const;

    [[nodiscard]] double max_power() const noexcept { return speed_max * torque_max; }
};

// Everything the plant and the predictor need.
struct ShevParams {
    VehicleParams vehicle;
    BatteryParams battery;
    EngineParams engine;

    void validate() const
    {
        vehicle.validate();
        battery.validate();
        engine.validate();
    }
};

struct OperatingPoint {
    double speed  = 0.0;  // rad/s
    double torque = 0.0;  // N m
    double power  = 0.0;  // W
};

struct FuelSample {
    double engine_power = 0.0;  // W
    double fuel_rate    = 0.0;  // g/s
};

struct FuelFit {
    double alpha     = 0.0;  // g/(s kW)
    double beta      = 0.0;  // g/s
    double r_squared = 0.0;
};

// Engine speed as a function of delivered power. The default is the
// maximum-torque line; a measured table of (power W, speed rad/s) pairs can
// replace it.
class OperatingLine {
public:
    static OperatingLine max_torque(const EngineParams& eng);
    static OperatingLine from_table(std::vector<std::pair<double, double>> power_to_speed,
                                    const EngineParams& eng);

    // Throws RangeError outside [0, max power] or when the point leaves the envelope.
    [[nodiscard]] OperatingPoint at(double engine_power) const;

private:
    OperatingLine() = default;

    EngineParams engine_;
    std::vector<std::pair<double, double>> table_;  // empty: maximum-torque line
};

[[nodiscard]] double net_acceleration(const VehicleState& state, double traction_force,
                                      const VehicleParams& p);
[[nodiscard]] double net_acceleration(const VehicleState& state, double traction_force,
                                      const VehicleParams& p, double grade);

// Forward-Euler step. Position advances with the pre-step velocity.
[[nodiscard]] VehicleState step_longitudinal(const VehicleState& state, double traction_force,
                                             double dt, const VehicleParams& p);
[[nodiscard]] VehicleState step_longitudinal(const VehicleState& state, double traction_force,
                                             double dt, const VehicleParams& p, double grade);

[[nodiscard]] double wheel_power(double traction_force, double velocity);

// P_e = P_r / eta_m - P_b. No bound checks.
[[nodiscard]] double engine_power_from_split(double requested_power, double battery_power,
                                             const EngineParams& eng);

// Terminal current drawn for a given battery power (discharge positive).
// Throws DomainError when the power exceeds the domain margin.
[[nodiscard]] double battery_current(double battery_power, const BatteryParams& b);
// d I_b / d P_b on the domain.
[[nodiscard]] double battery_current_derivative(double battery_power, const BatteryParams& b);
[[nodiscard]] double battery_power_from_current(double current, const BatteryParams& b);

// soc - I_b dt / Q_b, unclamped.
[[nodiscard]] double step_soc(double soc, double battery_power, double dt, const BatteryParams& b);

[[nodiscard]] double fuel_rate(double engine_power, const EngineParams& eng);
[[nodiscard]] double fuel_increment(double engine_power, double dt, const EngineParams& eng);

[[nodiscard]] OperatingPoint engine_operating_point(double engine_power, const EngineParams& eng);

// Ordinary least squares of fuel rate on engine power in kW.
[[nodiscard]] FuelFit fit_fuel_coefficients(std::span<const FuelSample> samples);

namespace detail {
// Affine fuel burn per step without the sign check. Used inside the optimizer
// where soft constraints may let the engine power dip below zero.
[[nodiscard]] inline double affine_fuel_increment(double engine_power, double dt,
                                                  const EngineParams& eng) noexcept
{
    return dt * (eng.fuel_alpha * engine_power * 1e-3 + eng.fuel_beta);
}
}  // namespace detail

}  // namespace shev
