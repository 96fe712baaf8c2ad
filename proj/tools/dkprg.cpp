// Command-line front end: analytic trajectories, Monte Carlo simulation,
// theory-vs-simulation comparison, canned table/figure bundles, and a
// stand-alone tour solver. Exit codes: 0 success, 2 invalid configuration,
// 3 I/O failure.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dkprg/analytics.hpp"
#include "dkprg/experiment.hpp"
#include "dkprg/game.hpp"
#include "dkprg/io.hpp"
#include "dkprg/tsp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitIoFailure = 3;

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty())
        std::cout << content;
    else
        dkprg::io::write_text_file(out_path, content);
}

// Options shared by `simulate` and `compare`. String-typed enums are parsed
// after CLI11 runs so the error message and exit code stay uniform with the
// config-file path.
struct ExperimentCli {
    std::string config_path;
    int agents = 0;
    int stops = 0;
    std::string policy;
    std::string placement;
    double lambda = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::string semantics;
    int max_days = 0;
    std::uint64_t budget = 0;
    int workers = 0;
    std::string format;
    std::string out_path;

    CLI::Option* agents_opt = nullptr;
    CLI::Option* stops_opt = nullptr;
    CLI::Option* policy_opt = nullptr;
    CLI::Option* placement_opt = nullptr;
    CLI::Option* lambda_opt = nullptr;
    CLI::Option* reps_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* semantics_opt = nullptr;
    CLI::Option* max_days_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* format_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    void attach(CLI::App& cmd, bool with_semantics) {
        cmd.add_option("--config", config_path,
                       "JSON config file; explicit flags override its values");
        agents_opt = cmd.add_option("--agents", agents, "agent/restaurant count n");
        stops_opt = cmd.add_option("--stops", stops, "stops per day m");
        policy_opt = cmd.add_option("--policy", policy, "tour policy: tsp or random");
        placement_opt =
            cmd.add_option("--placement", placement, "agent placement: concentrated or uniform");
        lambda_opt = cmd.add_option("--lambda", lambda, "distance/preference blend in [0,1]");
        reps_opt = cmd.add_option("--reps", reps, "Monte Carlo replications");
        seed_opt = cmd.add_option("--seed", seed, "master seed");
        if (with_semantics)
            semantics_opt =
                cmd.add_option("--semantics", semantics, "day semantics: behavioral or counting");
        max_days_opt = cmd.add_option("--max-days", max_days, "day cap per game");
        budget_opt = cmd.add_option("--budget", budget,
                                    "move evaluations per in-game solve (0 = auto)");
        workers_opt = cmd.add_option("--workers", workers, "worker threads (0 = hardware)");
        format_opt = cmd.add_option("--format", format, "output format: csv or json");
        out_opt = cmd.add_option("--out", out_path, "output file (default stdout)");
    }

    dkprg::experiment::ExperimentConfig resolve() const {
        namespace experiment = dkprg::experiment;
        experiment::ExperimentConfig config;
        if (!config_path.empty()) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(dkprg::io::read_text_file(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw std::invalid_argument(config_path + ": invalid JSON: " + e.what());
            }
            config = experiment::experiment_from_json(j);
        }
        if (agents_opt->count()) config.game.n = agents;
        if (stops_opt->count()) config.game.m = stops;
        if (policy_opt->count()) config.game.tour_policy = experiment::parse_policy(policy);
        if (placement_opt->count())
            config.game.placement = experiment::parse_placement(placement);
        if (lambda_opt->count()) config.game.lambda = lambda;
        if (reps_opt->count()) config.replications = reps;
        if (seed_opt->count()) config.master_seed = seed;
        if (semantics_opt && semantics_opt->count())
            config.semantics = experiment::parse_semantics(semantics);
        if (max_days_opt->count()) config.game.max_days = max_days;
        if (budget_opt->count()) config.game.solver_budget = budget;
        if (workers_opt->count()) config.workers = workers;
        if (format_opt->count()) config.format = experiment::parse_format(format);
        if (out_opt->count()) config.output_path = out_path;
        return config;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"m-stop restaurant-game toolkit: exact recurrences, Monte Carlo play, "
                 "and personalized tour solving"};
    app.require_subcommand(1);

    // analytic
    auto* analytic = app.add_subcommand("analytic", "exact day-by-day expectation trajectory");
    double an_agents = 0.0;
    int an_stops = 0, an_horizon = 256;
    std::string an_out;
    analytic->add_option("--agents", an_agents, "agent/restaurant count n (real, >= 1)")
        ->required();
    analytic->add_option("--stops", an_stops, "stops per day m")->required();
    analytic->add_option("--horizon", an_horizon, "maximum days to compute");
    analytic->add_option("--out", an_out, "output file (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo replications");
    ExperimentCli sim_cli;
    sim_cli.attach(*simulate, /*with_semantics=*/true);
    std::string sim_dump;
    simulate->add_option("--dump-replications", sim_dump,
                         "also write raw per-replication day rows to this file");

    // compare
    auto* compare = app.add_subcommand(
        "compare", "exact vs approximate vs Monte Carlo utilization, day by day");
    ExperimentCli cmp_cli;
    cmp_cli.attach(*compare, /*with_semantics=*/false);

    // reproduce-tables
    auto* tables = app.add_subcommand("reproduce-tables",
                                      "write per-day expectation tables as CSV files");
    int tb_stops = 0;
    std::vector<double> tb_agents;
    std::string tb_dir = ".";
    auto* tb_stops_opt = tables->add_option("--stops", tb_stops, "stops per day m");
    auto* tb_agents_opt =
        tables->add_option("--agents", tb_agents, "agent counts (repeatable)");
    tables->add_option("--out-dir", tb_dir, "output directory (default .)");

    // emit-figures
    auto* figures = app.add_subcommand(
        "emit-figures", "day-indexed utilization curves for plotting (long CSV)");
    std::vector<std::string> fg_series;
    std::vector<int> fg_approx;
    int fg_horizon = 0, fg_samples = 0;
    std::string fg_out, fg_format = "csv";
    figures->add_option("--series", fg_series, "exact curve as n:m (repeatable)");
    figures->add_option("--approx-m", fg_approx, "approximation curve for this m (repeatable)");
    figures->add_option("--horizon", fg_horizon, "days per curve");
    figures->add_option("--samples-per-day", fg_samples, "grid density of approximation curves");
    figures->add_option("--format", fg_format, "output format: csv or json");
    figures->add_option("--out", fg_out, "output file (default stdout)");

    // tsp-solve
    auto* solve = app.add_subcommand("tsp-solve", "solve one tour instance from file");
    std::string ts_instance, ts_out;
    bool ts_exact = false;
    std::uint64_t ts_budget = 100000, ts_seed = 0;
    solve->add_option("--instance", ts_instance, "JSON instance descriptor")->required();
    auto* ts_exact_opt = solve->add_flag("--exact", ts_exact, "dynamic-programming exact solve");
    solve->add_option("--budget", ts_budget, "move-evaluation budget")->excludes(ts_exact_opt);
    solve->add_option("--seed", ts_seed, "metaheuristic seed");
    solve->add_option("--out", ts_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadConfig;
    }

    try {
        if (*analytic) {
            const auto trajectory = dkprg::analytics::trajectory(
                dkprg::analytics::ModelParams{an_agents, an_stops}, an_horizon);
            emit(dkprg::io::trajectory_csv(trajectory), an_out);
        } else if (*simulate) {
            const auto config = sim_cli.resolve();
            const auto report = dkprg::experiment::run_monte_carlo(config);
            emit(config.format == dkprg::experiment::OutputFormat::Json
                     ? dkprg::experiment::report_json(report)
                     : dkprg::experiment::report_csv(report),
                 config.output_path);
            if (!sim_dump.empty())
                dkprg::io::write_text_file(sim_dump,
                                           dkprg::experiment::replication_logs_csv(report));
        } else if (*compare) {
            const auto config = cmp_cli.resolve();
            const auto comparison = dkprg::experiment::compare(
                config.game, config.replications, config.master_seed, config.workers);
            emit(config.format == dkprg::experiment::OutputFormat::Json
                     ? dkprg::experiment::comparison_json(comparison)
                     : dkprg::experiment::comparison_csv(comparison),
                 config.output_path);
        } else if (*tables) {
            std::vector<std::pair<int, std::vector<double>>> jobs;
            if (tb_stops_opt->count() || tb_agents_opt->count()) {
                if (!tb_stops_opt->count() || !tb_agents_opt->count())
                    throw std::invalid_argument(
                        "reproduce-tables needs both --stops and --agents (or neither)");
                jobs.emplace_back(tb_stops, tb_agents);
            } else {
                jobs.emplace_back(2, std::vector<double>{100.0, 1e3, 1e6, 1e9});
                jobs.emplace_back(3, std::vector<double>{1e9});
            }
            for (const auto& [m, n_list] : jobs)
                for (const auto& path : dkprg::experiment::reproduce_tables(m, n_list, tb_dir))
                    std::cout << path << '\n';
        } else if (*figures) {
            dkprg::experiment::FigureSpec spec;
            if (fg_series.empty() && fg_approx.empty() && fg_horizon == 0 && fg_samples == 0) {
                spec = dkprg::experiment::default_figure_spec();
            } else {
                for (const auto& text : fg_series) {
                    const auto colon = text.find(':');
                    std::size_t parsed = 0;
                    if (colon == std::string::npos)
                        throw std::invalid_argument("--series expects n:m, got \"" + text + "\"");
                    dkprg::experiment::ExactSeries series;
                    series.n = std::stod(text.substr(0, colon), &parsed);
                    if (parsed != colon)
                        throw std::invalid_argument("--series expects n:m, got \"" + text + "\"");
                    series.m = std::stoi(text.substr(colon + 1), &parsed);
                    if (parsed != text.size() - colon - 1)
                        throw std::invalid_argument("--series expects n:m, got \"" + text + "\"");
                    spec.exact.push_back(series);
                }
                spec.approx_m = fg_approx;
                if (fg_horizon > 0) spec.horizon_days = fg_horizon;
                if (fg_samples > 0) spec.samples_per_day = fg_samples;
            }
            emit(dkprg::experiment::parse_format(fg_format) == dkprg::experiment::OutputFormat::Json
                     ? dkprg::experiment::figure_json(spec)
                     : dkprg::experiment::figure_csv(spec),
                 fg_out);
        } else if (*solve) {
            const auto instance = dkprg::io::import_instance(ts_instance);
            dkprg::tsp::Tour tour;
            std::string method;
            if (ts_exact) {
                tour = dkprg::tsp::solve_exact(instance);
                method = "exact";
            } else {
                tour = dkprg::tsp::solve_metaheuristic(instance, ts_budget, ts_seed);
                method = "metaheuristic";
            }
            nlohmann::json result;
            result["instance"] = ts_instance;
            result["node_count"] = instance.node_count();
            result["method"] = method;
            if (!ts_exact) {
                result["budget"] = ts_budget;
                result["seed"] = ts_seed;
            }
            result["cost"] = std::strtod(
                dkprg::io::format_g(dkprg::tsp::tour_cost(instance, tour)).c_str(), nullptr);
            result["visit_order"] = tour.visit_order;
            emit(result.dump(2) + "\n", ts_out);
        }
    } catch (const dkprg::io::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIoFailure;
    } catch (const std::logic_error& e) {
        // Domain validation: invalid_argument, domain_error, size caps.
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIoFailure;
    }
    return kExitOk;
}
