#include "shev/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "shev/errors.hpp"

namespace shev {

namespace {

// Shortest form that round-trips a double exactly.
std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

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

double parse_double(std::string_view field, std::size_t line_no)
{
    const std::string text(trim(field));
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid number '" + text + "'");
    }
    return value;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::string trace_csv(const SimLog& log)
{
    std::string out =
        "t,s,s_ref,v,v_ref,F_d,P_r,P_b,P_e,I_b,SOC,mdot_f,cost_total,J_m,J_f,J_b,"
        "solver_iters,kkt_residual,fallback_flag,friction_brake_W\n";
    for (const auto& r : log.records) {
        const double fields[] = {r.t,   r.s,   r.s_ref, r.v,      r.v_ref,      r.F_d,
                                 r.P_r, r.P_b, r.P_e,   r.I_b,    r.soc,        r.mdot_f,
                                 r.cost_total, r.J_m, r.J_f, r.J_b};
        for (double f : fields) {
            out += num(f);
            out += ',';
        }
        out += std::to_string(r.solver_iters);
        out += ',';
        out += num(r.kkt_residual);
        out += r.fallback ? ",1," : ",0,";
        out += num(r.friction_brake_W);
        out += '\n';
    }
    return out;
}

std::string metrics_json(const SimMetrics& m)
{
    nlohmann::ordered_json j;
    j["total_fuel_g"]          = m.total_fuel_g;
    j["velocity_rmse"]         = m.velocity_rmse;
    j["position_rmse"]         = m.position_rmse;
    j["soc_final"]             = m.soc_final;
    j["soc_min"]               = m.soc_min;
    j["soc_max"]               = m.soc_max;
    j["current_min"]           = m.current_min;
    j["current_max"]           = m.current_max;
    j["violation_count"]       = m.violation_count;
    j["mean_solve_iterations"] = m.mean_solve_iterations;
    j["fallback_count"]        = m.fallback_count;
    return j.dump(2) + "\n";
}

std::string summary_text(const SimMetrics& m, const SimLog& log, const std::string& cycle_name)
{
    std::ostringstream out;
    out.precision(6);
    out << "cycle            " << cycle_name << " (" << log.records.size() << " steps, dt "
        << log.dt << " s)\n"
        << "fuel             " << m.total_fuel_g << " g\n"
        << "velocity RMSE    " << m.velocity_rmse << " m/s\n"
        << "position RMSE    " << m.position_rmse << " m\n"
        << "SOC              " << log.initial_soc << " -> " << m.soc_final << " (range "
        << m.soc_min << " .. " << m.soc_max << ")\n"
        << "battery current  " << m.current_min << " .. " << m.current_max << " A\n"
        << "violations       " << m.violation_count << "\n"
        << "mean iterations  " << m.mean_solve_iterations << "\n"
        << "fallback steps   " << m.fallback_count << "\n";
    return out.str();
}

std::string pareto_csv(const std::vector<ParetoPoint>& points)
{
    std::string out = "alpha1,alpha2,alpha3,J_m,J_fb,dominated\n";
    for (const auto& p : points) {
        out += num(p.weights[0]) + ',' + num(p.weights[1]) + ',' + num(p.weights[2]) + ',' +
               num(p.motion_cost) + ',' + num(p.energy_cost) + (p.dominated ? ",1\n" : ",0\n");
    }
    return out;
}

std::vector<FuelSample> parse_fuel_samples(std::string_view text)
{
    std::vector<FuelSample> samples;
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
                line.remove_prefix(3);
            }
            if (line != "P_e_W,mdot_f_gps") {
                throw ParseError("expected header 'P_e_W,mdot_f_gps', got '" + std::string(line) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected two columns");
        }
        FuelSample s{parse_double(line.substr(0, comma), line_no),
                     parse_double(line.substr(comma + 1), line_no)};
        if (s.engine_power < 0.0 || s.fuel_rate < 0.0) {
            throw ValidationError("line " + std::to_string(line_no) + ": negative power or fuel rate");
        }
        samples.push_back(s);
    }
    if (!header_seen) {
        throw ParseError("empty fuel sample file");
    }
    return samples;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace shev
