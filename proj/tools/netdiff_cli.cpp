// netdiff: simulate SI spread on configuration-model graphs and compare the
// runs against the mean-field and fluctuation theory.
//
// Subcommands: simulate | lln | fclt | profile | compare | cost
// Exit codes:  0 ok, 1 usage/config error, 2 tolerance failure,
//              3 numeric singularity.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netdiff/netdiff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string command;
    std::string dist = "poisson:5";
    int n = 1000;
    double beta = 0.5;
    double alpha_s = 0.9;
    double horizon = 1.0;
    double h = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int replicas = 200;
    std::string graph_mode = "erased";
    std::string out = "out";
    int threads = 0; // execution detail; never serialized into outputs
                     // (`out` is treated the same way)

    // command-specific
    std::string beta_grid = "0.1:2.0:20";
    int time_points = 41;
    double gamma = 1.0;
    double c = 0.0; // 0 -> default 1/n
    double level = 0.95;
    double percolation_level = 0.99;
    std::string checkpoints = "0.5,1.0";
    double window = 0.2;
    std::string method = "monte_carlo";
    bool plot_script = false;
    bool edge_list = false;
    std::string config_path;
};

json config_to_json(const RunConfig& cfg) {
    return json{{"command", cfg.command},
                {"dist", cfg.dist},
                {"n", cfg.n},
                {"beta", cfg.beta},
                {"alpha_s", cfg.alpha_s},
                {"T", cfg.horizon},
                {"h", cfg.h},
                {"seed", cfg.seed},
                {"replicas", cfg.replicas},
                {"graph_mode", cfg.graph_mode},
                {"beta_grid", cfg.beta_grid},
                {"time_points", cfg.time_points},
                {"gamma", cfg.gamma},
                {"c", cfg.c},
                {"level", cfg.level},
                {"percolation_level", cfg.percolation_level},
                {"checkpoints", cfg.checkpoints},
                {"window", cfg.window},
                {"method", cfg.method}};
}

std::vector<double> parse_value_list(const std::string& text, const char* field) {
    std::vector<double> values;
    if (text.find(':') != std::string::npos) {
        double lo = 0.0, hi = 0.0;
        int count = 0;
        char sep1 = 0, sep2 = 0;
        std::istringstream in(text);
        if (!(in >> lo >> sep1 >> hi >> sep2 >> count) || sep1 != ':' || sep2 != ':' ||
            count < 1)
            throw netdiff::config_error(std::string(field) +
                                        ": expected 'lo:hi:count' or comma list");
        for (int i = 0; i < count; ++i)
            values.push_back(count == 1 ? lo
                                        : lo + (hi - lo) * static_cast<double>(i) /
                                              static_cast<double>(count - 1));
        return values;
    }
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw netdiff::config_error(std::string(field) + ": malformed number '" +
                                        item + "'");
        }
    }
    if (values.empty())
        throw netdiff::config_error(std::string(field) + ": empty list");
    return values;
}

// Flat key = value config file; '#' starts a comment, values may be quoted.
// Command-line flags always win over file entries.
void apply_config_file(RunConfig& cfg, const CLI::App* cmd) {
    std::ifstream in(cfg.config_path);
    if (!in) throw netdiff::config_error("config: cannot open '" + cfg.config_path + "'");
    const auto given = [cmd](const std::string& flag) {
        return cmd->count("--" + flag) > 0;
    };
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw netdiff::config_error("config: expected 'key = value' at line " +
                                        std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        if (given(key)) continue;
        try {
            if (key == "dist") cfg.dist = value;
            else if (key == "n") cfg.n = std::stoi(value);
            else if (key == "beta") cfg.beta = std::stod(value);
            else if (key == "alpha-s") cfg.alpha_s = std::stod(value);
            else if (key == "T") cfg.horizon = std::stod(value);
            else if (key == "h") cfg.h = std::stod(value);
            else if (key == "seed") {
                cfg.seed = std::stoull(value);
                cfg.seed_set = true;
            } else if (key == "replicas") cfg.replicas = std::stoi(value);
            else if (key == "out") cfg.out = value;
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "graph-mode") cfg.graph_mode = value;
            else if (key == "beta-grid") cfg.beta_grid = value;
            else if (key == "time-points") cfg.time_points = std::stoi(value);
            else if (key == "gamma") cfg.gamma = std::stod(value);
            else if (key == "c") cfg.c = std::stod(value);
            else if (key == "level") cfg.level = std::stod(value);
            else if (key == "percolation-level") cfg.percolation_level = std::stod(value);
            else if (key == "checkpoints") cfg.checkpoints = value;
            else if (key == "window") cfg.window = std::stod(value);
            else if (key == "method") cfg.method = value;
            else
                throw netdiff::config_error("config: unknown key '" + key + "' at line " +
                                            std::to_string(line_no));
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const netdiff::config_error*>(&e)) throw;
            throw netdiff::config_error("config: malformed value for '" + key +
                                        "' at line " + std::to_string(line_no));
        }
    }
}

void write_run_sidecar(const RunConfig& cfg, const json& extra) {
    json j;
    j["config"] = config_to_json(cfg);
    j["seed"] = cfg.seed;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    netdiff::atomic_write(fs::path(cfg.out) / "run.json", j.dump(2) + "\n");
}

json mat3_to_json(const netdiff::Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

json vec3_to_json(const netdiff::Vec3& v) { return json{v[0], v[1], v[2]}; }

int cmd_simulate(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    netdiff::Rng rng = netdiff::Rng::stream(cfg.seed, 0);
    const auto degrees = dist.sample_degree_sequence(cfg.n, rng);
    const netdiff::Graph graph = netdiff::build_configuration_model(
        degrees, netdiff::parse_graph_mode(cfg.graph_mode), rng);
    netdiff::Trajectory traj =
        netdiff::simulate(graph, cfg.beta, cfg.alpha_s, cfg.horizon, rng);
    traj.dist_descriptor = dist.descriptor();
    traj.seed = cfg.seed;
    netdiff::atomic_write(fs::path(cfg.out) / "trajectory.csv",
                          netdiff::trajectory_csv(traj));
    if (cfg.edge_list) {
        std::ostringstream edges;
        graph.write_edge_list(edges);
        netdiff::atomic_write(fs::path(cfg.out) / "edges.csv", edges.str());
    }
    json extra;
    extra["n"] = traj.n;
    extra["beta"] = traj.beta;
    extra["alpha_s"] = traj.alpha_s;
    extra["T"] = traj.horizon;
    extra["dist"] = traj.dist_descriptor;
    extra["graph_fingerprint"] = traj.graph_fingerprint;
    extra["events"] = traj.events.size();
    extra["initial"] = json{{"x_s", traj.initial.x_s},
                            {"x_si", traj.initial.x_si},
                            {"x_ss", traj.initial.x_ss},
                            {"x_i", traj.initial.x_i}};
    write_run_sidecar(cfg, extra);
    return 0;
}

int cmd_lln(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    const auto sol = netdiff::solve_lln(dist, cfg.beta, cfg.alpha_s, cfg.horizon, cfg.h);
    netdiff::atomic_write(fs::path(cfg.out) / "lln.csv", netdiff::lln_csv(sol, dist));
    json extra;
    extra["truncated"] = sol.truncated;
    extra["refinement_sup_error"] = sol.refinement_sup_error;
    write_run_sidecar(cfg, extra);
    return 0;
}

int cmd_fclt(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    const auto lln = netdiff::solve_lln(dist, cfg.beta, cfg.alpha_s, cfg.horizon, cfg.h);
    const auto fclt = netdiff::solve_fclt(lln, dist, cfg.beta);
    netdiff::atomic_write(fs::path(cfg.out) / "fclt.csv", netdiff::fclt_csv(fclt));
    const std::size_t stride = std::max<std::size_t>(1, fclt.size() / 200);
    netdiff::atomic_write(fs::path(cfg.out) / "ellipses.csv",
                          netdiff::ellipse_csv(lln, fclt, cfg.n, cfg.level, stride));
    write_run_sidecar(cfg, json::object());
    return 0;
}

int cmd_profile(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    const auto betas = parse_value_list(cfg.beta_grid, "--beta-grid");
    const auto profile = netdiff::percolation_profile(
        dist, cfg.alpha_s, betas, cfg.horizon, cfg.time_points, cfg.h, cfg.threads);
    netdiff::atomic_write(fs::path(cfg.out) / "profile.csv",
                          netdiff::profile_csv(profile));
    if (cfg.plot_script) {
        std::ostringstream gp;
        gp << "set xlabel 't'\nset ylabel 'beta'\nset view map\n"
           << "splot 'profile.csv' matrix nonuniform with image notitle\n";
        netdiff::atomic_write(fs::path(cfg.out) / "profile.gp", gp.str());
    }
    write_run_sidecar(cfg, json::object());
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    netdiff::CompareParams params;
    params.n = cfg.n;
    params.beta = cfg.beta;
    params.alpha_s = cfg.alpha_s;
    params.horizon = cfg.horizon;
    params.replicas = cfg.replicas;
    params.checkpoints = parse_value_list(cfg.checkpoints, "--checkpoints");
    params.jump_window = cfg.window;
    params.mode = netdiff::parse_graph_mode(cfg.graph_mode);
    params.seed = cfg.seed;
    params.threads = cfg.threads;
    params.h = cfg.h;
    const auto report = netdiff::compare_mc_theory(dist, params);

    json j;
    j["config"] = config_to_json(cfg);
    j["seed"] = cfg.seed;
    j["sigma0"] = mat3_to_json(report.sigma0);
    j["pass"] = report.pass;
    j["checkpoints"] = json::array();
    for (const auto& cp : report.checkpoints) {
        json c;
        c["t"] = cp.t;
        c["mean_emp"] = vec3_to_json(cp.mean_emp);
        c["mean_theory"] = vec3_to_json(cp.mean_theory);
        c["mean_se"] = vec3_to_json(cp.mean_se);
        c["mean_z"] = vec3_to_json(cp.mean_z);
        c["mean_tol"] = vec3_to_json(cp.mean_tol);
        c["mean_ok"] = cp.mean_ok;
        c["cov_emp"] = mat3_to_json(cp.cov_emp);
        c["cov_theory"] = mat3_to_json(cp.cov_theory);
        c["cov_se"] = mat3_to_json(cp.cov_se);
        c["cov_ok"] = cp.cov_ok;
        json entries = json::array();
        for (bool ok : cp.cov_ok_entry) entries.push_back(ok);
        c["cov_ok_entry"] = entries;
        c["rho_emp"] = cp.rho_emp;
        c["rho_theory_window"] = cp.rho_theory_window;
        c["rho_theory_instant"] = cp.rho_theory_instant;
        c["rho_se"] = cp.rho_se;
        c["rho_events"] = cp.rho_events;
        c["rho_ok"] = cp.rho_ok;
        j["checkpoints"].push_back(c);
    }
    netdiff::atomic_write(fs::path(cfg.out) / "compare.json", j.dump(2) + "\n");
    if (cfg.plot_script) {
        std::ostringstream csv;
        csv << "t,mean_S,err_S,theory_S,mean_SI,err_SI,theory_SI\n";
        for (const auto& cp : report.checkpoints)
            csv << netdiff::fmt_real(cp.t) << "," << netdiff::fmt_real(cp.mean_emp[0])
                << "," << netdiff::fmt_real(3.0 * cp.mean_se[0]) << ","
                << netdiff::fmt_real(cp.mean_theory[0]) << ","
                << netdiff::fmt_real(cp.mean_emp[1]) << ","
                << netdiff::fmt_real(3.0 * cp.mean_se[1]) << ","
                << netdiff::fmt_real(cp.mean_theory[1]) << "\n";
        netdiff::atomic_write(fs::path(cfg.out) / "compare_means.csv", csv.str());
        std::ostringstream gp;
        gp << "set datafile separator ','\nset xlabel 't'\nset ylabel 'X/n'\n"
           << "plot 'compare_means.csv' using 1:2:3 with yerrorbars title 'simulation',"
           << " '' using 1:4 with lines title 'theory'\n";
        netdiff::atomic_write(fs::path(cfg.out) / "compare.gp", gp.str());
    }
    return report.pass ? 0 : 2;
}

int cmd_cost(const RunConfig& cfg) {
    const auto dist = netdiff::DegreeDistribution::parse(cfg.dist);
    netdiff::CostParams params;
    params.n = cfg.n;
    params.beta = cfg.beta;
    params.alpha_s = cfg.alpha_s;
    params.gamma = cfg.gamma;
    params.c = cfg.c > 0.0 ? cfg.c : 1.0 / static_cast<double>(cfg.n);
    params.horizon = cfg.horizon;
    params.replicas = cfg.replicas;
    params.mode = netdiff::parse_graph_mode(cfg.graph_mode);
    params.seed = cfg.seed;
    params.threads = cfg.threads;
    params.h = cfg.h;

    netdiff::CostMethod method;
    if (cfg.method == "monte_carlo") method = netdiff::CostMethod::monte_carlo;
    else if (cfg.method == "gaussian") method = netdiff::CostMethod::gaussian;
    else throw netdiff::config_error("--method must be 'monte_carlo' or 'gaussian'");

    const auto report = netdiff::discounted_cost(dist, params, method);
    json j;
    j["config"] = config_to_json(cfg);
    j["seed"] = cfg.seed;
    j["method"] = report.method;
    j["c"] = params.c;
    j["log_value"] = report.log_value;
    if (std::isfinite(report.log_std_error)) j["log_std_error"] = report.log_std_error;
    j["log_samples"] = report.log_samples;
    netdiff::atomic_write(fs::path(cfg.out) / "cost.json", j.dump(2) + "\n");
    return 0;
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, bool stochastic) {
    cmd->set_help_flag("--help", "print help"); // frees -h / --h for the step size
    cmd->add_option("--config", cfg.config_path, "flat key = value config file");
    cmd->add_option("--dist", cfg.dist, "degree distribution descriptor");
    cmd->add_option("--n", cfg.n, "number of nodes")->check(CLI::PositiveNumber);
    cmd->add_option("--beta", cfg.beta, "infection rate per SI edge")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--alpha-s", cfg.alpha_s, "initial susceptible fraction");
    cmd->add_option("--T", cfg.horizon, "time horizon")->check(CLI::PositiveNumber);
    cmd->add_option("--h", cfg.h, "ODE step (0 selects T/2000)");
    cmd->add_option("--out", cfg.out, "output directory");
    cmd->add_option("--threads", cfg.threads,
                    "worker threads (0: NETDIFF_THREADS or hardware)");
    cmd->add_option("--graph-mode", cfg.graph_mode,
                    "multigraph | erased | rejection_simple");
    cmd->add_option("--seed", cfg.seed, "master seed");
    (void)stochastic; // the seed requirement is enforced after config merging
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SI spread on configuration-model graphs: simulation and theory"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    app.set_config("--config");

    RunConfig cfg;

    auto* sim = app.add_subcommand("simulate", "one Gillespie run, CSV event log");
    add_common_options(sim, cfg, true);
    sim->add_flag("--edge-list", cfg.edge_list, "also export the graph as edges.csv");

    auto* lln = app.add_subcommand("lln", "mean-field ODE path, CSV");
    add_common_options(lln, cfg, false);

    auto* fclt = app.add_subcommand("fclt", "fluctuation theory (v, V, Sigma), CSV");
    add_common_options(fclt, cfg, false);
    fclt->add_option("--level", cfg.level, "confidence level for ellipses");

    auto* profile = app.add_subcommand("profile", "infected-share profile over (beta, t)");
    add_common_options(profile, cfg, false);
    profile->add_option("--beta-grid", cfg.beta_grid, "comma list or lo:hi:count");
    profile->add_option("--time-points", cfg.time_points, "time grid size")
        ->check(CLI::Range(2, 100000));
    profile->add_option("--percolation-level", cfg.percolation_level,
                        "share counted as percolated");
    profile->add_flag("--plot-script", cfg.plot_script, "emit a gnuplot script");

    auto* compare = app.add_subcommand("compare", "Monte-Carlo versus theory report");
    add_common_options(compare, cfg, true);
    compare->add_option("--replicas", cfg.replicas, "Monte-Carlo replicas")
        ->check(CLI::Range(2, 1000000));
    compare->add_option("--checkpoints", cfg.checkpoints, "comma list of times");
    compare->add_option("--window", cfg.window, "jump-statistics window width");
    compare->add_flag("--plot-script", cfg.plot_script, "emit a gnuplot script");

    auto* cost = app.add_subcommand("cost", "discounted exponential infection cost");
    add_common_options(cost, cfg, true);
    cost->add_option("--replicas", cfg.replicas, "Monte-Carlo replicas");
    cost->add_option("--gamma", cfg.gamma, "discount rate")->check(CLI::PositiveNumber);
    cost->add_option("--c", cfg.c, "cost exponent per infected node (0: 1/n)");
    cost->add_option("--method", cfg.method, "monte_carlo | gaussian");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        CLI::App* parsed_cmd = nullptr;
        bool stochastic = false;
        if (sim->parsed()) { cfg.command = "simulate"; parsed_cmd = sim; stochastic = true; }
        else if (lln->parsed()) { cfg.command = "lln"; parsed_cmd = lln; }
        else if (fclt->parsed()) { cfg.command = "fclt"; parsed_cmd = fclt; }
        else if (profile->parsed()) { cfg.command = "profile"; parsed_cmd = profile; }
        else if (compare->parsed()) { cfg.command = "compare"; parsed_cmd = compare; stochastic = true; }
        else if (cost->parsed()) { cfg.command = "cost"; parsed_cmd = cost; stochastic = true; }
        if (parsed_cmd == nullptr) return 1;

        if (parsed_cmd->count("--seed") > 0) cfg.seed_set = true;
        if (!cfg.config_path.empty()) apply_config_file(cfg, parsed_cmd);
        if (stochastic && !cfg.seed_set &&
            !(cfg.command == "cost" && cfg.method == "gaussian"))
            throw netdiff::config_error(
                "seed: required for stochastic commands (no implicit entropy)");

        if (cfg.command == "simulate") return cmd_simulate(cfg);
        if (cfg.command == "lln") return cmd_lln(cfg);
        if (cfg.command == "fclt") return cmd_fclt(cfg);
        if (cfg.command == "profile") return cmd_profile(cfg);
        if (cfg.command == "compare") return cmd_compare(cfg);
        if (cfg.command == "cost") return cmd_cost(cfg);
    } catch (const netdiff::singular_error& e) {
        std::cerr << "error (singular state): " << e.what() << "\n";
        return 3;
    } catch (const netdiff::config_error& e) {
        std::cerr << "error (config): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
