#include "shev/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shev/errors.hpp"

namespace shev {

using nlohmann::json;

namespace {

constexpr double kSecondsPerHour = 3600.0;

// Reads keys out of one JSON object and rejects anything it was not asked about.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) {
            throw ValidationError(path_ + " must be a JSON object");
        }
    }

    void number(const char* key, double& out)
    {
        if (const json* v = take(key)) {
            if (!v->is_number()) {
                throw ValidationError(name(key) + " must be a number");
            }
            out = v->get<double>();
        }
    }

    void integer(const char* key, int& out)
    {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) {
                throw ValidationError(name(key) + " must be an integer");
            }
            out = v->get<int>();
        }
    }

    void text(const char* key, std::string& out)
    {
        if (const json* v = take(key)) {
            if (!v->is_string()) {
                throw ValidationError(name(key) + " must be a string");
            }
            out = v->get<std::string>();
        }
    }

    const json* take(const char* key)
    {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    [[nodiscard]] std::string name(const char* key) const
    {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ValidationError("unknown configuration key '" +
                                      (path_.empty() ? it.key() : path_ + "." + it.key()) + "'");
            }
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_vehicle(const json& node, const std::string& path, VehicleParams& v)
{
    Section s(node, path);
    s.number("mass", v.mass);
    s.number("driveline_efficiency", v.driveline_efficiency);
    s.number("tire_radius", v.tire_radius);
    s.number("aero_coeff", v.aero_coeff);
    s.number("rolling_resistance", v.rolling_resistance);
    s.number("gravity", v.gravity);
    s.number("grade", v.grade);
    s.number("force_min", v.force_min);
    s.number("force_max", v.force_max);
    s.number("v_max", v.v_max);
    s.finish();
}

void read_battery(const json& node, const std::string& path, BatteryParams& b)
{
    Section s(node, path);
    s.number("open_circuit_voltage", b.open_circuit_voltage);
    s.number("resistance", b.resistance);
    if (s.take("capacity_ah") != nullptr) {
        double ah = 0.0;
        s.number("capacity_ah", ah);
        b.capacity = ah * kSecondsPerHour;
    }
    s.number("soc_min", b.soc_min);
    s.number("soc_max", b.soc_max);
    s.number("current_min", b.current_min);
    s.number("current_max", b.current_max);
    s.finish();
}

void read_engine(const json& node, const std::string& path, EngineParams& e)
{
    Section s(node, path);
    s.number("speed_min", e.speed_min);
    s.number("speed_max", e.speed_max);
    s.number("torque_min", e.torque_min);
    s.number("torque_max", e.torque_max);
    s.number("motor_efficiency", e.motor_efficiency);
    s.number("fuel_alpha", e.fuel_alpha);
    s.number("fuel_beta", e.fuel_beta);
    s.finish();
}

void read_params(Section& s, const std::string& prefix, ShevParams& p)
{
    auto child = [&](const char* key) { return prefix.empty() ? std::string(key) : prefix + "." + key; };
    if (const json* v = s.take("vehicle")) {
        read_vehicle(*v, child("vehicle"), p.vehicle);
    }
    if (const json* v = s.take("battery")) {
        read_battery(*v, child("battery"), p.battery);
    }
    if (const json* v = s.take("engine")) {
        read_engine(*v, child("engine"), p.engine);
    }
}

void read_controller(const json& node, MompcConfig& c, std::vector<std::string>& warnings)
{
    Section s(node, "controller");
    s.integer("horizon", c.horizon);
    s.number("dt", c.dt);
    if (const json* w = s.take("weights")) {
        if (!w->is_array() || w->size() != 3 || !(*w)[0].is_number() || !(*w)[1].is_number() ||
            !(*w)[2].is_number()) {
            throw ValidationError("controller.weights must be an array of three numbers");
        }
        std::array<double, 3> raw{(*w)[0].get<double>(), (*w)[1].get<double>(), (*w)[2].get<double>()};
        c.weights = raw;
        const double sum = raw[0] + raw[1] + raw[2];
        if (std::abs(sum - 1.0) > 1e-12) {
            c.weights = normalize_weights(raw);
            std::ostringstream msg;
            msg << "controller.weights sum to " << sum << "; rescaled to sum to 1";
            warnings.push_back(msg.str());
        }
    }
    if (const json* q = s.take("Q")) {
        if (q->is_number()) {
            c.tracking_weight = Eigen::Matrix2d::Identity() * q->get<double>();
        } else if (q->is_array() && q->size() == 2 && (*q)[0].is_array() && (*q)[1].is_array() &&
                   (*q)[0].size() == 2 && (*q)[1].size() == 2) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    if (!(*q)[i][j].is_number()) {
                        throw ValidationError("controller.Q entries must be numbers");
                    }
                    c.tracking_weight(i, j) = (*q)[i][j].get<double>();
                }
            }
        } else {
            throw ValidationError("controller.Q must be a number or a 2x2 array");
        }
    }
    s.number("S", c.control_weight);
    s.number("R", c.fuel_weight);
    s.number("P", c.soc_weight);
    s.number("soc_ref", c.soc_ref);
    s.number("force_norm", c.force_norm);
    s.number("pb_norm", c.pb_norm);
    s.number("soft_constraint_penalty", c.soft_constraint_penalty);
    s.number("tol_kkt", c.solver.tol_kkt);
    s.number("tol_feas", c.solver.tol_feas);
    s.integer("max_iter", c.solver.max_iter);
    s.finish();
}

json params_json(const ShevParams& p)
{
    const auto& v = p.vehicle;
    const auto& b = p.battery;
    const auto& e = p.engine;
    json out;
    out["vehicle"] = {{"mass", v.mass},
                      {"driveline_efficiency", v.driveline_efficiency},
                      {"tire_radius", v.tire_radius},
                      {"aero_coeff", v.aero_coeff},
                      {"rolling_resistance", v.rolling_resistance},
                      {"gravity", v.gravity},
                      {"grade", v.grade},
                      {"force_min", v.force_min},
                      {"force_max", v.force_max},
                      {"v_max", v.v_max}};
    out["battery"] = {{"open_circuit_voltage", b.open_circuit_voltage},
                      {"resistance", b.resistance},
                      {"capacity_ah", b.capacity / kSecondsPerHour},
                      {"soc_min", b.soc_min},
                      {"soc_max", b.soc_max},
                      {"current_min", b.current_min},
                      {"current_max", b.current_max}};
    out["engine"] = {{"speed_min", e.speed_min},
                     {"speed_max", e.speed_max},
                     {"torque_min", e.torque_min},
                     {"torque_max", e.torque_max},
                     {"motor_efficiency", e.motor_efficiency},
                     {"fuel_alpha", e.fuel_alpha},
                     {"fuel_beta", e.fuel_beta}};
    return out;
}

}  // namespace

void RunConfig::validate() const
{
    params.validate();
    controller.validate();
    if (plant) {
        plant->validate();
    }
    if (!std::isfinite(initial.position) || !(initial.velocity >= 0.0) ||
        initial.velocity > params.vehicle.v_max) {
        throw ValidationError("initial state out of range");
    }
    if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) {
        throw ValidationError("initial.soc must be in [0, 1]");
    }
}

LoadedConfig parse_config(const std::string& json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }

    LoadedConfig loaded;
    RunConfig& cfg = loaded.config;
    Section s(root, "");
    read_params(s, "", cfg.params);
    if (const json* c = s.take("controller")) {
        read_controller(*c, cfg.controller, loaded.warnings);
    }
    if (const json* init = s.take("initial")) {
        Section i(*init, "initial");
        i.number("position", cfg.initial.position);
        i.number("velocity", cfg.initial.velocity);
        i.number("soc", cfg.initial_soc);
        i.finish();
    }
    if (const json* plant = s.take("plant")) {
        Section p(*plant, "plant");
        ShevParams perturbed = cfg.params;
        read_params(p, "plant", perturbed);
        p.finish();
        cfg.plant = perturbed;
    }
    s.text("cycle_path", cfg.cycle_path);
    s.text("output_dir", cfg.output_dir);
    s.finish();

    cfg.validate();
    return loaded;
}

LoadedConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string to_json(const RunConfig& config)
{
    json root = params_json(config.params);
    const auto& c = config.controller;
    root["controller"] = {
        {"horizon", c.horizon},
        {"dt", c.dt},
        {"weights", {c.weights[0], c.weights[1], c.weights[2]}},
        {"Q",
         {{c.tracking_weight(0, 0), c.tracking_weight(0, 1)},
          {c.tracking_weight(1, 0), c.tracking_weight(1, 1)}}},
        {"S", c.control_weight},
        {"R", c.fuel_weight},
        {"P", c.soc_weight},
        {"soc_ref", c.soc_ref},
        {"force_norm", c.force_norm},
        {"pb_norm", c.pb_norm},
        {"soft_constraint_penalty", c.soft_constraint_penalty},
        {"tol_kkt", c.solver.tol_kkt},
        {"tol_feas", c.solver.tol_feas},
        {"max_iter", c.solver.max_iter},
    };
    root["initial"] = {{"position", config.initial.position},
                       {"velocity", config.initial.velocity},
                       {"soc", config.initial_soc}};
    if (config.plant) {
        root["plant"] = params_json(*config.plant);
    }
    root["cycle_path"] = config.cycle_path;
    root["output_dir"] = config.output_dir;
    return root.dump(2) + "\n";
}

}  // namespace shev
