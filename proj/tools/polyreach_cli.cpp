// Command-line driver: reach, simulate, project, check.

#include "polyreach/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace polyreach;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolverCap = 3;
constexpr int kExitAudit = 4;

struct Overrides {
    std::optional<double> epsilon;
    std::optional<double> lambda;
    std::optional<std::size_t> horizon;
    std::optional<std::uint64_t> seed;

    void apply(RunConfig& c) const {
        if (epsilon) c.epsilon = *epsilon;
        if (lambda) c.lambda = *lambda;
        if (horizon) c.horizon = *horizon;
        if (seed) c.seed = *seed;
        c.validate();
    }
};

std::array<Eigen::Index, 2> parse_dims(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw ConfigError("--dims: expected i,j");
    }
    try {
        return {std::stol(text.substr(0, comma)), std::stol(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError("--dims: expected two integers i,j");
    }
}

int run_reach(const std::string& config_path, const std::string& out, const Overrides& o,
              unsigned threads, bool quiet) {
    RunConfig config = load_config(config_path);
    o.apply(config);
    const ControlledSystem sys = make_system(config);
    ReachOptions options = config.reach_options();
    options.threads = threads;
    if (!quiet) {
        options.on_step = [](std::size_t k, const Polytope& p) {
            std::cerr << "step " << k << ": " << p.C.rows() << " directions\n";
        };
    }
    std::string target = out;
    if (target.empty() && config.output) {
        target = config.output->string();
    }
    try {
        const ReachResult result = reach(sys, config.horizon, options);
        if (target.empty()) {
            std::cout << result_to_json(result, &config);
        } else {
            save_result(result, target, &config);
        }
        if (!quiet) {
            std::cerr << "solved " << result.direction_solves() << " directions in "
                      << result.wall_time.count() << " s\n";
        }
    } catch (const ReachAborted& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!target.empty()) {
            save_result(e.partial, target + ".partial", &config);
            std::cerr << "partial result written to " << target << ".partial\n";
        }
        return kExitSolverCap;
    }
    return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& out, const Overrides& o,
                 std::size_t samples) {
    RunConfig config = load_config(config_path);
    o.apply(config);
    const ControlledSystem sys = make_system(config);
    const Trajectories t = simulate(sys, samples, config.horizon, config.seed);
    if (out.empty()) {
        throw ConfigError("--out: simulate needs an output CSV path");
    }
    write_trajectories_csv(t, out);
    return kExitOk;
}

int run_project(const std::string& result_path, std::size_t step, const std::string& dims,
                std::size_t angles, const std::string& out) {
    const ReachResult result = load_result(result_path);
    if (step >= result.polytopes.size()) {
        throw ConfigError("--step: result has steps 0.." + std::to_string(result.polytopes.size() - 1));
    }
    const auto polygon = project_2d(result.polytopes[step], parse_dims(dims), angles);
    if (out.empty()) {
        std::printf("x,y\n");
        for (const auto& v : polygon) {
            std::printf("%.17g,%.17g\n", v[0], v[1]);
        }
    } else {
        write_polygon_csv(polygon, out);
    }
    return kExitOk;
}

int run_check(const std::string& config_path, const std::string& result_path, const Overrides& o,
              std::size_t samples, double tol) {
    RunConfig config = load_config(config_path);
    o.apply(config);
    const ControlledSystem sys = make_system(config);
    const ReachResult result = load_result(result_path);
    const std::size_t horizon = result.polytopes.empty() ? 0 : result.polytopes.size() - 1;
    const Trajectories t = simulate(sys, samples, horizon, config.seed);
    const AuditReport report = audit_containment(result, t, tol, sys.generator ? 1 : 0);
    std::printf("checked %zu states over %zu steps: %zu violations (worst excess %.3e at step %zu)\n",
                report.checked, horizon + 1, report.violations, report.worst_excess,
                report.worst_step);
    return report.violations == 0 ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reachable-set over-approximation for ReLU-controlled affine systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string result_path;
    std::string dims = "0,1";
    std::size_t angles = 64;
    std::size_t samples = 10000;
    std::size_t step = 0;
    unsigned threads = 0;
    double tol = 1e-6;
    bool quiet = false;
    Overrides o;

    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--eps", o.epsilon, "BnB gap (overrides config)");
        sub->add_option("--lambda", o.lambda, "Cosine pruning threshold (overrides config)");
        sub->add_option("--horizon", o.horizon, "Number of steps (overrides config)");
        sub->add_option("--seed", o.seed, "Sampling seed (overrides config)");
    };

    auto* reach_cmd = app.add_subcommand("reach", "Compute reach polytopes for every step");
    reach_cmd->add_option("--config", config_path, "Run configuration JSON")->required();
    reach_cmd->add_option("--out", out, "Result JSON (default: config output, else stdout)");
    reach_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    reach_cmd->add_flag("--quiet", quiet, "No progress output");
    add_overrides(reach_cmd);

    auto* sim_cmd = app.add_subcommand("simulate", "Sample trajectories to CSV");
    sim_cmd->add_option("--config", config_path, "Run configuration JSON")->required();
    sim_cmd->add_option("--out", out, "Trajectory CSV")->required();
    sim_cmd->add_option("--samples", samples, "Number of sampled initial states");
    add_overrides(sim_cmd);

    auto* proj_cmd = app.add_subcommand("project", "Export a 2-D projection of one step as CSV");
    proj_cmd->add_option("--result", result_path, "Result JSON")->required();
    proj_cmd->add_option("--step", step, "Step k to project");
    proj_cmd->add_option("--dims", dims, "Coordinate pair i,j");
    proj_cmd->add_option("--angles", angles, "Number of support directions (>= 3)");
    proj_cmd->add_option("--out", out, "Polygon CSV (default: stdout)");

    auto* check_cmd = app.add_subcommand("check", "Audit a result against fresh simulations");
    check_cmd->add_option("--config", config_path, "Run configuration JSON")->required();
    check_cmd->add_option("--result", result_path, "Result JSON")->required();
    check_cmd->add_option("--samples", samples, "Number of sampled initial states");
    check_cmd->add_option("--tol", tol, "Containment tolerance");
    add_overrides(check_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (reach_cmd->parsed()) {
            return run_reach(config_path, out, o, threads, quiet);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(config_path, out, o, samples);
        }
        if (proj_cmd->parsed()) {
            return run_project(result_path, step, dims, angles, out);
        }
        if (check_cmd->parsed()) {
            return run_check(config_path, result_path, o, samples, tol);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
