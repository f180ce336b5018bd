#include "shev/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "shev/config.hpp"
#include "shev/errors.hpp"
#include "shev/io.hpp"
#include "shev/sim.hpp"

namespace shev::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::string cycle;
    std::string unit = "mps";
    int jobs = 1;
};

void add_common(CLI::App& cmd, CommonFlags& flags)
{
    cmd.add_option("--config", flags.config, "run configuration (JSON)");
    cmd.add_option("--out", flags.out, "output directory");
    cmd.add_option("--cycle", flags.cycle, "drive cycle CSV (t_s,v_mps)");
    cmd.add_option("--unit", flags.unit, "speed unit of the cycle file")
        ->check(CLI::IsMember({"mps", "mph"}));
    cmd.add_option("--jobs", flags.jobs, "concurrent solves")->check(CLI::PositiveNumber);
}

std::shared_ptr<spdlog::logger> make_logger()
{
    auto log = spdlog::get("shev");
    if (!log) {
        log = spdlog::stderr_color_mt("shev");
        log->set_pattern("%^%l%$: %v");
    }
    log->set_level(spdlog::level::info);
    if (const char* env = std::getenv("SHEV_MOMPC_LOG")) {
        const std::string level = env;
        if (level == "error") {
            log->set_level(spdlog::level::err);
        } else if (level == "debug") {
            log->set_level(spdlog::level::debug);
        } else if (level != "info") {
            log->warn("SHEV_MOMPC_LOG='{}' not recognised, using info", level);
        }
    }
    return log;
}

RunConfig resolve_config(const CommonFlags& flags, spdlog::logger& log)
{
    RunConfig cfg;
    if (!flags.config.empty()) {
        auto loaded = load_config(flags.config);
        for (const auto& w : loaded.warnings) {
            log.warn("{}", w);
        }
        cfg = std::move(loaded.config);
    }
    if (!flags.cycle.empty()) {
        cfg.cycle_path = flags.cycle;
    }
    if (!flags.out.empty()) {
        cfg.output_dir = flags.out;
    }
    if (cfg.cycle_path.empty()) {
        throw ValidationError("no drive cycle given (use --cycle or cycle_path in the config)");
    }
    if (cfg.output_dir.empty()) {
        cfg.output_dir = ".";
    }
    return cfg;
}

DriveCycle load_resampled(const RunConfig& cfg, const CommonFlags& flags)
{
    const auto unit = flags.unit == "mph" ? SpeedUnit::MilesPerHour : SpeedUnit::MetersPerSecond;
    return resample(load_cycle(cfg.cycle_path, unit), cfg.controller.dt);
}

fs::path prepare_output(const RunConfig& cfg)
{
    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ValidationError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    return dir;
}

int cmd_simulate(const CommonFlags& flags, spdlog::logger& log)
{
    const RunConfig cfg = resolve_config(flags, log);
    const DriveCycle cycle = load_resampled(cfg, flags);
    const fs::path dir = prepare_output(cfg);

    SimOptions options;
    options.initial     = cfg.initial;
    options.initial_soc = cfg.initial_soc;
    options.plant       = cfg.plant;
    options.progress    = [&log](std::size_t done, std::size_t total) {
        if (done % 100 == 0 || done == total) {
            log.debug("step {}/{}", done, total);
        }
    };
    log.info("simulating {} ({} steps)", cycle.name(), cycle.size());
    const SimLog sim = run_closed_loop(cycle, cfg.controller, cfg.params, options);
    const SimMetrics metrics = compute_metrics(sim, (cfg.plant ? *cfg.plant : cfg.params).battery);

    write_file_atomic(dir / "trace.csv", trace_csv(sim));
    write_file_atomic(dir / "metrics.json", metrics_json(metrics));
    const std::string summary = summary_text(metrics, sim, cycle.name());
    write_file_atomic(dir / "summary.txt", summary);
    write_file_atomic(dir / "config.json", to_json(cfg));
    log.info("wrote trace.csv, metrics.json, summary.txt to {}", dir.string());
    std::cout << summary;
    return kExitOk;
}

int cmd_pareto(const CommonFlags& flags, int grid, std::optional<double> at, spdlog::logger& log)
{
    const auto weights = simplex_grid(grid);
    const RunConfig cfg = resolve_config(flags, log);
    const DriveCycle cycle = load_resampled(cfg, flags);
    const auto ref = reference_trajectory(cycle, cfg.controller.dt);

    std::size_t index = steepest_rise_index(ref);
    if (at) {
        const double k = std::round(*at / cfg.controller.dt);
        if (!(k >= 0.0) || k >= static_cast<double>(ref.size())) {
            throw ValidationError("--at lies outside the cycle");
        }
        index = static_cast<std::size_t>(k);
    }
    const fs::path dir = prepare_output(cfg);

    const VehicleState state{ref.s_ref[index], ref.v_ref[index]};
    const auto window = preview(ref, index, static_cast<std::size_t>(cfg.controller.horizon));
    log.info("pareto sweep: {} weight triples at t = {} s", weights.size(),
             static_cast<double>(index) * cfg.controller.dt);
    const auto points =
        pareto_sweep(state, cfg.initial_soc, window, weights, cfg.controller, cfg.params, flags.jobs);
    write_file_atomic(dir / "pareto.csv", pareto_csv(points));
    log.info("wrote {}", (dir / "pareto.csv").string());
    return kExitOk;
}

int cmd_identify_fuel(const std::string& samples_path)
{
    const auto samples = parse_fuel_samples(read_text_file(samples_path));
    const FuelFit fit = fit_fuel_coefficients(samples);
    nlohmann::ordered_json out;
    out["alpha"]     = fit.alpha;
    out["beta"]      = fit.beta;
    out["r_squared"] = fit.r_squared;
    std::cout << out.dump() << "\n";
    return kExitOk;
}

}  // namespace

std::size_t steepest_rise_index(const ReferenceTrajectory& ref)
{
    std::size_t best = 0;
    double rise = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < ref.size(); ++k) {
        const double d = ref.v_ref[k + 1] - ref.v_ref[k];
        if (d > rise) {
            rise = d;
            best = k;
        }
    }
    return best;
}

int run(int argc, const char* const* argv)
{
    auto log = make_logger();

    CLI::App app{"Multi-objective MPC simulator for series hybrid electric vehicles", "shev-mompc"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "closed-loop run over a drive cycle");
    add_common(*simulate, sim_flags);

    CommonFlags pareto_flags;
    int grid = 10;
    std::optional<double> at;
    auto* pareto = app.add_subcommand("pareto", "weight sweep at one instant of a cycle");
    add_common(*pareto, pareto_flags);
    pareto->add_option("--grid", grid, "number of weight triples on the simplex");
    pareto->add_option("--at", at, "instant in seconds (default: steepest reference rise)");

    std::string samples;
    auto* identify = app.add_subcommand("identify-fuel", "least-squares fuel coefficients");
    identify->add_option("--samples", samples, "CSV with header P_e_W,mdot_f_gps")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (simulate->parsed()) {
            return cmd_simulate(sim_flags, *log);
        }
        if (pareto->parsed()) {
            return cmd_pareto(pareto_flags, grid, at, *log);
        }
        return cmd_identify_fuel(samples);
    } catch (const ValidationError& e) {
        log->error("{}", e.what());
    } catch (const ParseError& e) {
        log->error("{}", e.what());
    } catch (const DegenerateData& e) {
        log->error("{}", e.what());
    } catch (const std::exception& e) {
        log->error("aborted: {}", e.what());
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace shev::cli
