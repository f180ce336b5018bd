#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shev/mompc.hpp"
#include "shev/powertrain.hpp"

namespace shev {

// Everything a run needs. JSON keys mirror the field names; battery capacity
// is written in Ah (`capacity_ah`) and held in coulombs.
struct RunConfig {
    ShevParams params;
    MompcConfig controller;
    VehicleState initial{};
    double initial_soc = 0.66;
    std::string cycle_path;
    std::string output_dir;
    std::optional<ShevParams> plant;  // perturbed plant, off unless given

    void validate() const;
};

struct LoadedConfig {
    RunConfig config;
    std::vector<std::string> warnings;
};

// Missing keys keep their defaults; unknown keys throw ValidationError.
// Weights that do not sum to one are rescaled and reported in `warnings`.
[[nodiscard]] LoadedConfig parse_config(const std::string& json_text);
[[nodiscard]] LoadedConfig load_config(const std::filesystem::path& path);

// Complete JSON document that parse_config maps back to the same RunConfig.
[[nodiscard]] std::string to_json(const RunConfig& config);

}  // namespace shev
