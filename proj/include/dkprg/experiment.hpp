#pragma once
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dkprg/analytics.hpp"
#include "dkprg/game.hpp"
#include "dkprg/io.hpp"
#include "dkprg/rng.hpp"

// Seeded Monte Carlo orchestration: replicated games with derived seeds,
// per-day aggregation, theory-vs-simulation comparison tables, and the
// canned table/figure bundles. Outputs are byte-deterministic for a fixed
// config; wall-clock time therefore stays out of every serialized form.

namespace dkprg::experiment {

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
    game::GameConfig game;
    int replications = 1;
    std::uint64_t master_seed = 0;
    game::DaySemantics semantics = game::DaySemantics::Behavioral;
    std::string output_path; // empty = stdout only
    OutputFormat format = OutputFormat::Csv;
    int workers = 0;         // 0 = hardware concurrency
};

inline void validate(const ExperimentConfig& config) {
    game::validate(config.game);
    if (config.replications < 1)
        throw std::invalid_argument("ExperimentConfig: replications must be >= 1");
    if (config.workers < 0)
        throw std::invalid_argument("ExperimentConfig: workers must be >= 0");
}

struct DayAggregate {
    int day = 0;
    double utilization_mean = 0.0;
    double utilization_stddev = 0.0;
    double utilization_ci = 0.0; // 1.96 * stddev / sqrt(replications)
    double served_mean = 0.0;
    double served_stddev = 0.0;
    double served_ci = 0.0;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<DayAggregate> days;
    std::vector<std::vector<game::DayLog>> replication_logs; // index = replication
    double duration_seconds = 0.0; // in-memory only, never serialized
};

namespace detail {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
    double ci = 0.0;
};

inline Moments moments(const std::vector<double>& samples) {
    Moments m;
    const auto count = static_cast<double>(samples.size());
    if (samples.empty()) return m;
    double sum = 0.0;
    for (double s : samples) sum += s;
    m.mean = sum / count;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double s : samples) ss += (s - m.mean) * (s - m.mean);
        m.stddev = std::sqrt(ss / (count - 1.0));
    }
    m.ci = 1.96 * m.stddev / std::sqrt(count);
    return m;
}

// A run that converged before day d contributes utilization 1 and zero new
// services to day d's statistics.
inline double utilization_on_day(const std::vector<game::DayLog>& logs, int day) {
    if (logs.empty()) return 1.0;
    const auto idx = static_cast<std::size_t>(day - 1);
    if (idx < logs.size()) return logs[idx].utilization;
    return logs.back().utilization;
}

inline double served_on_day(const std::vector<game::DayLog>& logs, int day) {
    const auto idx = static_cast<std::size_t>(day - 1);
    if (idx < logs.size()) return static_cast<double>(logs[idx].served_today);
    return 0.0;
}

inline const char* policy_name(game::TourPolicy policy) {
    return policy == game::TourPolicy::MetaheuristicTsp ? "tsp" : "random";
}

inline const char* placement_name(game::Placement placement) {
    return placement == game::Placement::Concentrated ? "concentrated" : "uniform";
}

inline const char* semantics_name(game::DaySemantics semantics) {
    return semantics == game::DaySemantics::Behavioral ? "behavioral" : "counting";
}

// Round through the 9-significant-digit decimal form so CSV text and JSON
// numbers carry identical values.
inline double round9(double value) { return std::strtod(io::format_g(value).c_str(), nullptr); }

} // namespace detail

inline std::uint64_t replication_seed(std::uint64_t master_seed, int replication) {
    return rng::derive_seed(master_seed, static_cast<std::uint64_t>(replication));
}

inline RunReport run_monte_carlo(const ExperimentConfig& config) {
    validate(config);
    const auto started = std::chrono::steady_clock::now();

    RunReport report;
    report.config = config;
    report.replication_logs.resize(static_cast<std::size_t>(config.replications));

    unsigned worker_count = config.workers > 0
        ? static_cast<unsigned>(config.workers)
        : std::max(1u, std::thread::hardware_concurrency());
    worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(config.replications));

    auto run_range = [&](int begin, int end) {
        for (int rep = begin; rep < end; ++rep) {
            game::GameConfig gc = config.game;
            gc.seed = replication_seed(config.master_seed, rep);
            report.replication_logs[static_cast<std::size_t>(rep)] =
                game::run_game(gc, config.semantics);
        }
    };

    if (worker_count <= 1) {
        run_range(0, config.replications);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        const int per_worker = (config.replications + static_cast<int>(worker_count) - 1) /
                               static_cast<int>(worker_count);
        for (unsigned w = 0; w < worker_count; ++w) {
            const int begin = static_cast<int>(w) * per_worker;
            const int end = std::min(config.replications, begin + per_worker);
            if (begin >= end) break;
            workers.emplace_back(run_range, begin, end);
        }
        for (auto& worker : workers) worker.join();
    }

    int horizon = 0;
    for (const auto& logs : report.replication_logs)
        horizon = std::max(horizon, static_cast<int>(logs.size()));

    std::vector<double> utilization(static_cast<std::size_t>(config.replications));
    std::vector<double> served(static_cast<std::size_t>(config.replications));
    for (int day = 1; day <= horizon; ++day) {
        for (int rep = 0; rep < config.replications; ++rep) {
            const auto& logs = report.replication_logs[static_cast<std::size_t>(rep)];
            utilization[static_cast<std::size_t>(rep)] = detail::utilization_on_day(logs, day);
            served[static_cast<std::size_t>(rep)] = detail::served_on_day(logs, day);
        }
        const auto u = detail::moments(utilization);
        const auto s = detail::moments(served);
        DayAggregate aggregate;
        aggregate.day = day;
        aggregate.utilization_mean = u.mean;
        aggregate.utilization_stddev = u.stddev;
        aggregate.utilization_ci = u.ci;
        aggregate.served_mean = s.mean;
        aggregate.served_stddev = s.stddev;
        aggregate.served_ci = s.ci;
        report.days.push_back(aggregate);
    }

    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

namespace detail {

inline void append_metadata(std::ostringstream& out, const ExperimentConfig& config) {
    out << "# n=" << config.game.n << '\n'
        << "# m=" << config.game.m << '\n'
        << "# policy=" << policy_name(config.game.tour_policy) << '\n'
        << "# placement=" << placement_name(config.game.placement) << '\n'
        << "# lambda=" << io::format_g(config.game.lambda) << '\n'
        << "# semantics=" << semantics_name(config.semantics) << '\n'
        << "# replications=" << config.replications << '\n'
        << "# master_seed=" << config.master_seed << '\n'
        << "# seed_derivation=" << rng::kSeedDerivation << '\n';
}

inline nlohmann::json metadata_json(const ExperimentConfig& config) {
    return {
        {"n", config.game.n},
        {"m", config.game.m},
        {"policy", policy_name(config.game.tour_policy)},
        {"placement", placement_name(config.game.placement)},
        {"lambda", round9(config.game.lambda)},
        {"semantics", semantics_name(config.semantics)},
        {"replications", config.replications},
        {"master_seed", config.master_seed},
        {"seed_derivation", rng::kSeedDerivation},
    };
}

} // namespace detail

inline std::string report_csv(const RunReport& report) {
    std::ostringstream out;
    detail::append_metadata(out, report.config);
    out << "day,utilization_mean,utilization_stddev,utilization_ci,"
           "served_mean,served_stddev,served_ci\n";
    for (const auto& d : report.days) {
        out << d.day << ',' << io::format_g(d.utilization_mean) << ','
            << io::format_g(d.utilization_stddev) << ',' << io::format_g(d.utilization_ci) << ','
            << io::format_g(d.served_mean) << ',' << io::format_g(d.served_stddev) << ','
            << io::format_g(d.served_ci) << '\n';
    }
    return out.str();
}

inline std::string report_json(const RunReport& report) {
    nlohmann::json j;
    j["metadata"] = detail::metadata_json(report.config);
    j["days"] = nlohmann::json::array();
    for (const auto& d : report.days) {
        j["days"].push_back({
            {"day", d.day},
            {"utilization_mean", detail::round9(d.utilization_mean)},
            {"utilization_stddev", detail::round9(d.utilization_stddev)},
            {"utilization_ci", detail::round9(d.utilization_ci)},
            {"served_mean", detail::round9(d.served_mean)},
            {"served_stddev", detail::round9(d.served_stddev)},
            {"served_ci", detail::round9(d.served_ci)},
        });
    }
    return j.dump(2) + "\n";
}

// ---- theory vs simulation ----

struct CompareRow {
    int day = 0;
    double exact_f = 1.0;
    double approx_f = 1.0;      // 1 - e^{-t m}
    double counting_mean = 0.0;
    double counting_ci = 0.0;
    double behavioral_mean = 0.0;
    double behavioral_ci = 0.0;
    double gap_mean = 0.0;      // behavioral - counting, paired per replication
    double gap_ci = 0.0;
};

struct Comparison {
    ExperimentConfig behavioral_config;
    std::vector<CompareRow> rows;
};

// Runs both semantics on identical replication seeds (day-1 tours are then
// identical pairs) and lines the means up against the exact recurrence and
// the exponential approximation.
inline Comparison compare(const game::GameConfig& game_config, int replications,
                          std::uint64_t master_seed, int workers = 0) {
    ExperimentConfig counting_config;
    counting_config.game = game_config;
    counting_config.replications = replications;
    counting_config.master_seed = master_seed;
    counting_config.semantics = game::DaySemantics::AnalyticCounting;
    counting_config.workers = workers;
    ExperimentConfig behavioral_config = counting_config;
    behavioral_config.semantics = game::DaySemantics::Behavioral;

    const RunReport counting = run_monte_carlo(counting_config);
    const RunReport behavioral = run_monte_carlo(behavioral_config);

    const auto trajectory = analytics::trajectory(
        analytics::ModelParams{static_cast<double>(game_config.n), game_config.m});

    Comparison result;
    result.behavioral_config = behavioral_config;
    const int horizon = std::max(static_cast<int>(counting.days.size()),
                                 static_cast<int>(behavioral.days.size()));
    std::vector<double> gaps(static_cast<std::size_t>(replications));
    for (int day = 1; day <= horizon; ++day) {
        CompareRow row;
        row.day = day;
        const auto idx = static_cast<std::size_t>(day - 1);
        row.exact_f = idx < trajectory.days.size() ? trajectory.days[idx].f : 1.0;
        row.approx_f = -std::expm1(-static_cast<double>(day) * game_config.m);
        if (idx < counting.days.size()) {
            row.counting_mean = counting.days[idx].utilization_mean;
            row.counting_ci = counting.days[idx].utilization_ci;
        } else {
            row.counting_mean = 1.0;
        }
        if (idx < behavioral.days.size()) {
            row.behavioral_mean = behavioral.days[idx].utilization_mean;
            row.behavioral_ci = behavioral.days[idx].utilization_ci;
        } else {
            row.behavioral_mean = 1.0;
        }
        for (int rep = 0; rep < replications; ++rep) {
            const auto r = static_cast<std::size_t>(rep);
            gaps[r] = detail::utilization_on_day(behavioral.replication_logs[r], day) -
                      detail::utilization_on_day(counting.replication_logs[r], day);
        }
        const auto g = detail::moments(gaps);
        row.gap_mean = g.mean;
        row.gap_ci = g.ci;
        result.rows.push_back(row);
    }
    return result;
}

inline std::string comparison_csv(const Comparison& comparison) {
    std::ostringstream out;
    detail::append_metadata(out, comparison.behavioral_config);
    out << "day,exact_f,approx_f,counting_mean,counting_ci,"
           "behavioral_mean,behavioral_ci,gap_mean,gap_ci\n";
    for (const auto& row : comparison.rows) {
        out << row.day << ',' << io::format_g(row.exact_f) << ',' << io::format_g(row.approx_f)
            << ',' << io::format_g(row.counting_mean) << ',' << io::format_g(row.counting_ci)
            << ',' << io::format_g(row.behavioral_mean) << ',' << io::format_g(row.behavioral_ci)
            << ',' << io::format_g(row.gap_mean) << ',' << io::format_g(row.gap_ci) << '\n';
    }
    return out.str();
}

inline std::string comparison_json(const Comparison& comparison) {
    nlohmann::json j;
    j["metadata"] = detail::metadata_json(comparison.behavioral_config);
    j["days"] = nlohmann::json::array();
    for (const auto& row : comparison.rows) {
        j["days"].push_back({
            {"day", row.day},
            {"exact_f", detail::round9(row.exact_f)},
            {"approx_f", detail::round9(row.approx_f)},
            {"counting_mean", detail::round9(row.counting_mean)},
            {"counting_ci", detail::round9(row.counting_ci)},
            {"behavioral_mean", detail::round9(row.behavioral_mean)},
            {"behavioral_ci", detail::round9(row.behavioral_ci)},
            {"gap_mean", detail::round9(row.gap_mean)},
            {"gap_ci", detail::round9(row.gap_ci)},
        });
    }
    return j.dump(2) + "\n";
}

// ---- canned outputs ----

// One CSV per (m, n) pair in layout day,n_t,vp,a_s,a_u,f at 7 significant
// digits. Returns the written paths.
inline std::vector<std::string> reproduce_tables(int m, const std::vector<double>& n_list,
                                                 const std::string& out_dir) {
    std::vector<std::string> paths;
    for (double n : n_list) {
        const auto trajectory = analytics::trajectory(analytics::ModelParams{n, m});
        std::ostringstream name;
        name << out_dir << "/table_m" << m << "_n" << io::format_g(n, 15) << ".csv";
        io::write_text_file(name.str(), io::trajectory_csv(trajectory, 7));
        paths.push_back(name.str());
    }
    return paths;
}

struct ExactSeries {
    double n = 0.0;
    int m = 1;
};

struct FigureSpec {
    std::vector<ExactSeries> exact;  // one utilization curve per (n, m)
    std::vector<int> approx_m;       // one 1 - e^{-t m} curve per entry
    int horizon_days = 11;
    int samples_per_day = 1;         // approx curves sampled this densely
};

// Long-format curve data: series,t,f. Exact curves emit integer days padded
// to the horizon with 1.0 after convergence; approximation curves sample
// t in (0, horizon] on the requested grid.
struct FigureRow {
    std::string series;
    double t = 0.0;
    double f = 0.0;
};

inline std::vector<FigureRow> figure_rows(const FigureSpec& spec) {
    if (spec.horizon_days < 1) throw std::invalid_argument("FigureSpec: horizon_days must be >= 1");
    if (spec.samples_per_day < 1)
        throw std::invalid_argument("FigureSpec: samples_per_day must be >= 1");
    std::vector<FigureRow> rows;
    for (const auto& series : spec.exact) {
        const auto trajectory =
            analytics::trajectory(analytics::ModelParams{series.n, series.m}, spec.horizon_days);
        std::ostringstream label;
        label << "exact_n" << io::format_g(series.n, 15) << "_m" << series.m;
        for (int day = 1; day <= spec.horizon_days; ++day) {
            const auto idx = static_cast<std::size_t>(day - 1);
            const double f = idx < trajectory.days.size() ? trajectory.days[idx].f : 1.0;
            rows.push_back({label.str(), static_cast<double>(day), f});
        }
    }
    for (int m : spec.approx_m) {
        for (int i = 1; i <= spec.horizon_days * spec.samples_per_day; ++i) {
            const double t = static_cast<double>(i) / spec.samples_per_day;
            rows.push_back({"approx_m" + std::to_string(m), t, -std::expm1(-t * m)});
        }
    }
    return rows;
}

inline std::string figure_csv(const FigureSpec& spec) {
    std::ostringstream out;
    out << "series,t,f\n";
    for (const auto& row : figure_rows(spec))
        out << row.series << ',' << io::format_g(row.t) << ',' << io::format_g(row.f) << '\n';
    return out.str();
}

inline std::string figure_json(const FigureSpec& spec) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : figure_rows(spec))
        j.push_back({{"series", row.series},
                     {"t", detail::round9(row.t)},
                     {"f", detail::round9(row.f)}});
    return j.dump(2) + "\n";
}

// The five-series bundle the CLI emits by default: m=2 at four scales plus
// m=3 at the largest, with both approximation curves.
inline FigureSpec default_figure_spec() {
    FigureSpec spec;
    spec.exact = {{100.0, 2}, {1e3, 2}, {1e6, 2}, {1e9, 2}, {1e9, 3}};
    spec.approx_m = {2, 3};
    spec.horizon_days = 11;
    spec.samples_per_day = 4;
    return spec;
}

// ---- config-file plumbing ----

inline game::TourPolicy parse_policy(const std::string& name) {
    if (name == "tsp") return game::TourPolicy::MetaheuristicTsp;
    if (name == "random") return game::TourPolicy::UniformRandom;
    throw std::invalid_argument("policy must be tsp or random, got \"" + name + "\"");
}

inline game::Placement parse_placement(const std::string& name) {
    if (name == "concentrated") return game::Placement::Concentrated;
    if (name == "uniform") return game::Placement::Uniform;
    throw std::invalid_argument("placement must be concentrated or uniform, got \"" + name + "\"");
}

inline game::DaySemantics parse_semantics(const std::string& name) {
    if (name == "behavioral") return game::DaySemantics::Behavioral;
    if (name == "counting") return game::DaySemantics::AnalyticCounting;
    throw std::invalid_argument("semantics must be behavioral or counting, got \"" + name + "\"");
}

inline OutputFormat parse_format(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw std::invalid_argument("format must be csv or json, got \"" + name + "\"");
}

// JSON mirror of ExperimentConfig; every field optional, unknown keys
// rejected so typos cannot silently fall back to defaults.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    auto require_keys = [](const nlohmann::json& object, std::initializer_list<const char*> known,
                           const char* where) {
        for (const auto& item : object.items()) {
            bool ok = false;
            for (const char* key : known)
                if (item.key() == key) { ok = true; break; }
            if (!ok)
                throw std::invalid_argument(std::string("unknown config key \"") + item.key() +
                                            "\" in " + where);
        }
    };
    if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    require_keys(j, {"game", "replications", "master_seed", "semantics", "output_path", "format",
                     "workers"},
                 "config root");
    if (j.contains("game")) {
        const auto& g = j.at("game");
        if (!g.is_object()) throw std::invalid_argument("config key \"game\" must be an object");
        require_keys(g, {"n", "m", "policy", "placement", "lambda", "seed", "max_days",
                         "solver_budget"},
                     "game");
        config.game.n = g.value("n", config.game.n);
        config.game.m = g.value("m", config.game.m);
        if (g.contains("policy")) config.game.tour_policy = parse_policy(g.at("policy").get<std::string>());
        if (g.contains("placement"))
            config.game.placement = parse_placement(g.at("placement").get<std::string>());
        config.game.lambda = g.value("lambda", config.game.lambda);
        config.game.seed = g.value("seed", config.game.seed);
        config.game.max_days = g.value("max_days", config.game.max_days);
        config.game.solver_budget = g.value("solver_budget", config.game.solver_budget);
    }
    config.replications = j.value("replications", config.replications);
    config.master_seed = j.value("master_seed", config.master_seed);
    if (j.contains("semantics")) config.semantics = parse_semantics(j.at("semantics").get<std::string>());
    config.output_path = j.value("output_path", config.output_path);
    if (j.contains("format")) config.format = parse_format(j.at("format").get<std::string>());
    config.workers = j.value("workers", config.workers);
    return config;
}

// Raw per-replication day rows; feeding these back through the aggregation
// formulas must reproduce report_csv exactly.
inline std::string replication_logs_csv(const RunReport& report) {
    std::ostringstream out;
    detail::append_metadata(out, report.config);
    out << "replication,day,active_at_start,served_today,still_unserved,utilization\n";
    for (std::size_t rep = 0; rep < report.replication_logs.size(); ++rep)
        for (const auto& log : report.replication_logs[rep])
            out << rep << ',' << log.day << ',' << log.active_at_start << ',' << log.served_today
                << ',' << log.still_unserved << ',' << io::format_g(log.utilization) << '\n';
    return out.str();
}

} // namespace dkprg::experiment
