#include "shev/drive_cycle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "shev/errors.hpp"

namespace shev {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_number(std::string_view field, std::size_t line_no)
{
    field = trim(field);
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed number '" +
                         std::string(field) + "'");
    }
    return value;
}

bool on_grid(const DriveCycle& cycle, double dt)
{
    const auto& t = cycle.times();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (std::abs(t[k] - static_cast<double>(k) * dt) > 1e-9 * std::max(1.0, t[k])) {
            return false;
        }
    }
    return true;
}

}  // namespace

DriveCycle::DriveCycle(std::string name, std::vector<double> times, std::vector<double> speeds)
    : name_(std::move(name)), times_(std::move(times)), speeds_(std::move(speeds))
{
    if (times_.size() != speeds_.size()) {
        throw ValidationError("drive cycle: time and speed columns differ in length");
    }
    if (times_.size() < 2) {
        throw ValidationError("drive cycle: at least two samples are required");
    }
    if (times_.front() != 0.0) {
        throw ValidationError("drive cycle: first sample must be at t = 0");
    }
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]) || !std::isfinite(speeds_[i])) {
            throw ValidationError("drive cycle: non-finite sample at row " + std::to_string(i));
        }
        if (speeds_[i] < 0.0) {
            throw ValidationError("drive cycle: negative speed at t = " + std::to_string(times_[i]));
        }
        if (i > 0 && !(times_[i] > times_[i - 1])) {
            throw ValidationError("drive cycle: times must be strictly increasing (t = " +
                                  std::to_string(times_[i]) + ")");
        }
    }
}

double DriveCycle::max_speed() const noexcept
{
    return *std::max_element(speeds_.begin(), speeds_.end());
}

DriveCycle parse_cycle(std::string_view text, std::string name, SpeedUnit unit)
{
    std::vector<double> times;
    std::vector<double> speeds;
    std::size_t line_no = 0;
    bool header_seen = false;

    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
                line.remove_prefix(3);  // UTF-8 BOM
            }
            if (line != "t_s,v_mps") {
                throw ParseError("expected header 't_s,v_mps', got '" + std::string(line) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected two columns");
        }
        times.push_back(parse_number(line.substr(0, comma), line_no));
        double v = parse_number(line.substr(comma + 1), line_no);
        if (unit == SpeedUnit::MilesPerHour) {
            v *= kMphToMps;
        }
        speeds.push_back(v);
    }
    if (!header_seen) {
        throw ParseError("empty cycle file");
    }
    return DriveCycle(std::move(name), std::move(times), std::move(speeds));
}

DriveCycle load_cycle(const std::filesystem::path& path, SpeedUnit unit)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open cycle file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_cycle(buffer.str(), path.stem().string(), unit);
}

DriveCycle resample(const DriveCycle& cycle, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("resample: dt must be positive");
    }
    const auto& t = cycle.times();
    const auto& v = cycle.speeds();
    const auto steps = static_cast<std::size_t>(std::floor(cycle.duration() / dt + 1e-9));

    std::vector<double> times(steps + 1);
    std::vector<double> speeds(steps + 1);
    std::size_t seg = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double tk = std::min(static_cast<double>(k) * dt, cycle.duration());
        while (seg + 2 < t.size() && t[seg + 1] < tk) {
            ++seg;
        }
        double vk = 0.0;
        if (tk == t[seg]) {
            vk = v[seg];
        } else if (tk == t[seg + 1]) {
            vk = v[seg + 1];
        } else {
            const double w = (tk - t[seg]) / (t[seg + 1] - t[seg]);
            vk = v[seg] + w * (v[seg + 1] - v[seg]);
        }
        times[k]  = static_cast<double>(k) * dt;
        speeds[k] = vk;
    }
    return DriveCycle(cycle.name(), std::move(times), std::move(speeds));
}

ReferenceTrajectory reference_trajectory(const DriveCycle& cycle, double dt)
{
    if (!(dt > 0.0)) {
        throw ValidationError("reference_trajectory: dt must be positive");
    }
    if (!on_grid(cycle, dt)) {
        throw ValidationError("reference_trajectory: cycle is not sampled on the controller grid");
    }
    ReferenceTrajectory ref;
    ref.dt    = dt;
    ref.v_ref = cycle.speeds();
    ref.s_ref.assign(ref.v_ref.size(), 0.0);
    for (std::size_t k = 0; k + 1 < ref.v_ref.size(); ++k) {
        ref.s_ref[k + 1] = ref.s_ref[k] + dt * (ref.v_ref[k] + ref.v_ref[k + 1]) / 2.0;
    }
    return ref;
}

PreviewWindow preview(const ReferenceTrajectory& ref, std::size_t t_index, std::size_t horizon)
{
    PreviewWindow window;
    window.s_ref.reserve(horizon + 1);
    window.v_ref.reserve(horizon + 1);
    const std::size_t last = ref.size() - 1;
    for (std::size_t j = 0; j <= horizon; ++j) {
        const std::size_t k = t_index + j;
        if (k <= last) {
            window.s_ref.push_back(ref.s_ref[k]);
            window.v_ref.push_back(ref.v_ref[k]);
        } else {
            const double beyond = static_cast<double>(k - last);
            window.s_ref.push_back(ref.s_ref[last] + beyond * ref.dt * ref.v_ref[last]);
            window.v_ref.push_back(ref.v_ref[last]);
        }
    }
    return window;
}

}  // namespace shev
