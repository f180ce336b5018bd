#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shev {

enum class SpeedUnit { MetersPerSecond, MilesPerHour };

inline constexpr double kMphToMps = 0.44704;

// Timestamped speed profile. Times strictly increase from 0, speeds are non-negative.
class DriveCycle {
public:
    // Throws ValidationError when the invariants do not hold.
    DriveCycle(std::string name, std::vector<double> times, std::vector<double> speeds);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<double>& speeds() const noexcept { return speeds_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] double duration() const noexcept { return times_.back(); }
    [[nodiscard]] double max_speed() const noexcept;

private:
    std::string name_;
    std::vector<double> times_;
    std::vector<double> speeds_;
};

// Position/velocity reference on a uniform grid.
struct ReferenceTrajectory {
    double dt = 1.0;
    std::vector<double> v_ref;
    std::vector<double> s_ref;

    [[nodiscard]] std::size_t size() const noexcept { return v_ref.size(); }
};

// N+1 consecutive reference samples starting at the current control step.
struct PreviewWindow {
    std::vector<double> s_ref;
    std::vector<double> v_ref;

    [[nodiscard]] std::size_t size() const noexcept { return v_ref.size(); }
};

// CSV with header `t_s,v_mps`. Speeds are converted to m/s when `unit` is mph.
[[nodiscard]] DriveCycle parse_cycle(std::string_view text, std::string name = "cycle",
                                     SpeedUnit unit = SpeedUnit::MetersPerSecond);
[[nodiscard]] DriveCycle load_cycle(const std::filesystem::path& path,
                                    SpeedUnit unit = SpeedUnit::MetersPerSecond);

// Linear interpolation onto t = k dt, k = 0 .. floor(T_end / dt).
[[nodiscard]] DriveCycle resample(const DriveCycle& cycle, double dt);

// Requires the cycle to already sit on the dt grid. Positions are the
// trapezoidal integral of the speeds.
[[nodiscard]] ReferenceTrajectory reference_trajectory(const DriveCycle& cycle, double dt);

// Entries t_index .. t_index + horizon. Past the end of the reference the
// last speed is held and the position keeps advancing at that speed.
[[nodiscard]] PreviewWindow preview(const ReferenceTrajectory& ref, std::size_t t_index,
                                    std::size_t horizon);

}  // namespace shev
