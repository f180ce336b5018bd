#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shev/mompc.hpp"
#include "shev/powertrain.hpp"
#include "shev/sim.hpp"

namespace shev {

// Write to a sibling temporary file, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Column order: t,s,s_ref,v,v_ref,F_d,P_r,P_b,P_e,I_b,SOC,mdot_f,cost_total,
// J_m,J_f,J_b,solver_iters,kkt_residual,fallback_flag,friction_brake_W.
[[nodiscard]] std::string trace_csv(const SimLog& log);
[[nodiscard]] std::string metrics_json(const SimMetrics& metrics);
[[nodiscard]] std::string summary_text(const SimMetrics& metrics, const SimLog& log,
                                       const std::string& cycle_name);

// Columns alpha1,alpha2,alpha3,J_m,J_fb,dominated.
[[nodiscard]] std::string pareto_csv(const std::vector<ParetoPoint>& points);

// CSV with header `P_e_W,mdot_f_gps`.
[[nodiscard]] std::vector<FuelSample> parse_fuel_samples(std::string_view text);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

}  // namespace shev
