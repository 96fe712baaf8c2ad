#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dkprg/analytics.hpp"
#include "dkprg/experiment.hpp"
#include "dkprg/game.hpp"

using namespace dkprg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dkprg_exp_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int value = 0;
        return value;
    }
};

experiment::ExperimentConfig small_config(int replications, std::uint64_t master_seed) {
    experiment::ExperimentConfig config;
    config.game.n = 20;
    config.game.m = 2;
    config.game.tour_policy = game::TourPolicy::UniformRandom;
    config.game.seed = 0; // replaced per replication
    config.replications = replications;
    config.master_seed = master_seed;
    config.workers = 1;
    return config;
}

} // namespace

TEST_CASE("a single replication reproduces a plain game run", "[experiment]") {
    auto config = small_config(1, 555);
    const auto report = experiment::run_monte_carlo(config);

    auto gc = config.game;
    gc.seed = experiment::replication_seed(555, 0);
    const auto direct = game::run_game(gc);

    REQUIRE(report.replication_logs.size() == 1);
    REQUIRE(report.replication_logs[0].size() == direct.size());
    REQUIRE(report.days.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        REQUIRE(report.days[i].utilization_mean == direct[i].utilization);
        REQUIRE(report.days[i].utilization_stddev == 0.0);
        REQUIRE(report.days[i].utilization_ci == 0.0);
        REQUIRE(report.days[i].served_mean == static_cast<double>(direct[i].served_today));
    }
}

TEST_CASE("monte carlo reports are byte-stable and worker-count independent", "[experiment]") {
    auto config = small_config(24, 99);
    const auto a = experiment::run_monte_carlo(config);
    const auto b = experiment::run_monte_carlo(config);
    REQUIRE(experiment::report_csv(a) == experiment::report_csv(b));
    REQUIRE(experiment::report_json(a) == experiment::report_json(b));

    config.workers = 3; // different chunking, same replication seeds
    const auto c = experiment::run_monte_carlo(config);
    REQUIRE(experiment::report_csv(a) == experiment::report_csv(c));
}

TEST_CASE("aggregates recompute from the replication logs", "[experiment]") {
    auto config = small_config(16, 2024);
    const auto report = experiment::run_monte_carlo(config);
    const int reps = config.replications;
    for (std::size_t d = 0; d < report.days.size(); ++d) {
        const int day = static_cast<int>(d) + 1;
        double sum = 0.0;
        for (const auto& logs : report.replication_logs)
            sum += experiment::detail::utilization_on_day(logs, day);
        const double mean = sum / reps;
        double ss = 0.0;
        for (const auto& logs : report.replication_logs) {
            const double x = experiment::detail::utilization_on_day(logs, day) - mean;
            ss += x * x;
        }
        const double stddev = std::sqrt(ss / (reps - 1));
        REQUIRE(report.days[d].utilization_mean == Catch::Approx(mean).margin(1e-15));
        REQUIRE(report.days[d].utilization_stddev == Catch::Approx(stddev).margin(1e-12));
        REQUIRE(report.days[d].utilization_ci ==
                Catch::Approx(1.96 * stddev / std::sqrt(static_cast<double>(reps))).margin(1e-12));
    }
}

TEST_CASE("report CSV carries provenance metadata", "[experiment]") {
    auto config = small_config(3, 42);
    const auto csv = experiment::report_csv(experiment::run_monte_carlo(config));
    REQUIRE(csv.find("# n=20\n") != std::string::npos);
    REQUIRE(csv.find("# m=2\n") != std::string::npos);
    REQUIRE(csv.find("# policy=random\n") != std::string::npos);
    REQUIRE(csv.find("# placement=uniform\n") != std::string::npos);
    REQUIRE(csv.find("# semantics=behavioral\n") != std::string::npos);
    REQUIRE(csv.find("# replications=3\n") != std::string::npos);
    REQUIRE(csv.find("# master_seed=42\n") != std::string::npos);
    REQUIRE(csv.find("# seed_derivation=" + std::string(rng::kSeedDerivation)) !=
            std::string::npos);
    REQUIRE(csv.find("day,utilization_mean,utilization_stddev,utilization_ci,"
                     "served_mean,served_stddev,served_ci\n") != std::string::npos);
    // Wall-clock timing never leaks into the serialized bytes.
    REQUIRE(csv.find("duration") == std::string::npos);

    const auto j = nlohmann::json::parse(
        experiment::report_json(experiment::run_monte_carlo(config)));
    REQUIRE(j["metadata"]["n"] == 20);
    REQUIRE(j["metadata"]["seed_derivation"] == rng::kSeedDerivation);
    REQUIRE(j["days"].size() > 0);
    REQUIRE_FALSE(j.contains("duration"));
    REQUIRE_FALSE(j["metadata"].contains("duration"));
}

TEST_CASE("replication log CSV is long-format with one row per day", "[experiment]") {
    auto config = small_config(2, 7);
    const auto report = experiment::run_monte_carlo(config);
    const auto csv = experiment::replication_logs_csv(report);
    REQUIRE(csv.find("replication,day,active_at_start,served_today,still_unserved,utilization\n") !=
            std::string::npos);
    std::size_t rows = 0;
    for (char ch : csv)
        if (ch == '\n') ++rows;
    std::size_t expected = 1; // header
    for (const auto& logs : report.replication_logs) expected += logs.size();
    std::size_t metadata = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] == '#') ++metadata;
    REQUIRE(rows == expected + metadata);
}

TEST_CASE("experiment config parses from JSON with overrides and strict keys", "[experiment]") {
    const auto j = nlohmann::json::parse(R"({
        "game": {"n": 50, "m": 3, "policy": "random", "placement": "concentrated",
                 "lambda": 0.7, "max_days": 32, "solver_budget": 12345},
        "replications": 9,
        "master_seed": 77,
        "semantics": "counting",
        "format": "json",
        "workers": 2,
        "output_path": "out.json"
    })");
    const auto config = experiment::experiment_from_json(j);
    REQUIRE(config.game.n == 50);
    REQUIRE(config.game.m == 3);
    REQUIRE(config.game.tour_policy == game::TourPolicy::UniformRandom);
    REQUIRE(config.game.placement == game::Placement::Concentrated);
    REQUIRE(config.game.lambda == 0.7);
    REQUIRE(config.game.max_days == 32);
    REQUIRE(config.game.solver_budget == 12345);
    REQUIRE(config.replications == 9);
    REQUIRE(config.master_seed == 77);
    REQUIRE(config.semantics == game::DaySemantics::AnalyticCounting);
    REQUIRE(config.format == experiment::OutputFormat::Json);
    REQUIRE(config.workers == 2);
    REQUIRE(config.output_path == "out.json");

    // Partial configs keep defaults.
    const auto partial = experiment::experiment_from_json(
        nlohmann::json::parse(R"({"game": {"n": 8}})"));
    REQUIRE(partial.game.n == 8);
    REQUIRE(partial.game.m == 1);
    REQUIRE(partial.replications == 1);

    REQUIRE_THROWS_AS(
        experiment::experiment_from_json(nlohmann::json::parse(R"({"bogus": 1})")),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        experiment::experiment_from_json(nlohmann::json::parse(R"({"game": {"players": 3}})")),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        experiment::experiment_from_json(
            nlohmann::json::parse(R"({"game": {"policy": "greedy"}})")),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        experiment::experiment_from_json(nlohmann::json::parse(R"({"semantics": "magic"})")),
        std::invalid_argument);
}

TEST_CASE("enum parsers accept canonical names only", "[experiment]") {
    REQUIRE(experiment::parse_policy("tsp") == game::TourPolicy::MetaheuristicTsp);
    REQUIRE(experiment::parse_policy("random") == game::TourPolicy::UniformRandom);
    REQUIRE_THROWS_AS(experiment::parse_policy("TSP"), std::invalid_argument);
    REQUIRE(experiment::parse_placement("uniform") == game::Placement::Uniform);
    REQUIRE(experiment::parse_placement("concentrated") == game::Placement::Concentrated);
    REQUIRE_THROWS_AS(experiment::parse_placement("grid"), std::invalid_argument);
    REQUIRE(experiment::parse_semantics("behavioral") == game::DaySemantics::Behavioral);
    REQUIRE(experiment::parse_semantics("counting") == game::DaySemantics::AnalyticCounting);
    REQUIRE_THROWS_AS(experiment::parse_semantics("exact"), std::invalid_argument);
    REQUIRE(experiment::parse_format("csv") == experiment::OutputFormat::Csv);
    REQUIRE(experiment::parse_format("json") == experiment::OutputFormat::Json);
    REQUIRE_THROWS_AS(experiment::parse_format("xml"), std::invalid_argument);
}

TEST_CASE("comparison on a degenerate game is exact on day 1", "[experiment]") {
    game::GameConfig gc;
    gc.n = 4;
    gc.m = 4; // everyone eats on day 1 regardless of tour
    gc.tour_policy = game::TourPolicy::UniformRandom;
    const auto comparison = experiment::compare(gc, 8, 31, 1);
    REQUIRE_FALSE(comparison.rows.empty());
    const auto& first = comparison.rows.front();
    REQUIRE(first.exact_f == 1.0);
    REQUIRE(first.counting_mean == 1.0);
    REQUIRE(first.behavioral_mean == 1.0);
    REQUIRE(first.gap_mean == 0.0);
    REQUIRE(first.gap_ci == 0.0);
}

TEST_CASE("comparison lines up the four estimates on a real game", "[experiment]") {
    game::GameConfig gc;
    gc.n = 40;
    gc.m = 2;
    gc.tour_policy = game::TourPolicy::UniformRandom;
    const int reps = 300;
    const auto comparison = experiment::compare(gc, reps, 1234, 1);
    REQUIRE_FALSE(comparison.rows.empty());
    const auto& first = comparison.rows.front();

    // Counting day 1 estimates the exact finite-n recurrence.
    const double exact = analytics::trajectory(analytics::ModelParams{40.0, 2}).days[0].f;
    REQUIRE(first.exact_f == Catch::Approx(exact).margin(1e-15));
    REQUIRE(first.counting_mean ==
            Catch::Approx(exact).margin(5.0 * first.counting_ci / 1.96 + 1e-9));

    // Behavioral never beats counting on shared seeds, so the paired gap
    // cannot sit above zero.
    REQUIRE(first.gap_mean <= 1e-12);
    REQUIRE(first.behavioral_mean <= first.counting_mean + 1e-12);

    // approx column matches the closed form.
    REQUIRE(first.approx_f == Catch::Approx(-std::expm1(-2.0)).margin(1e-15));

    const auto csv = experiment::comparison_csv(comparison);
    REQUIRE(csv.find("day,exact_f,approx_f,counting_mean,counting_ci,"
                     "behavioral_mean,behavioral_ci,gap_mean,gap_ci\n") != std::string::npos);
    const auto j = nlohmann::json::parse(experiment::comparison_json(comparison));
    REQUIRE(j["days"].size() == comparison.rows.size());
}

TEST_CASE("counting day-1 mean approaches the recurrence as replications grow", "[experiment]") {
    const double exact = analytics::trajectory(analytics::ModelParams{20.0, 2}).days[0].f;
    for (int reps : {40, 400, 4000}) {
        auto config = small_config(reps, 8675309);
        config.semantics = game::DaySemantics::AnalyticCounting;
        const auto report = experiment::run_monte_carlo(config);
        const double mean = report.days[0].utilization_mean;
        const double stddev = report.days[0].utilization_stddev;
        // five-sigma band shrinks with sqrt(reps), so this pins convergence
        const double tolerance = 5.0 * stddev / std::sqrt(static_cast<double>(reps));
        REQUIRE(mean == Catch::Approx(exact).margin(tolerance));
    }
}

TEST_CASE("table reproduction writes one trajectory CSV per scale", "[experiment]") {
    TempDir dir;
    const auto paths_m2 =
        experiment::reproduce_tables(2, {100.0, 1e9}, dir.path.string());
    REQUIRE(paths_m2.size() == 2);
    REQUIRE(fs::exists(paths_m2[0]));
    REQUIRE(paths_m2[0].find("table_m2_n100.csv") != std::string::npos);
    REQUIRE(paths_m2[1].find("table_m2_n1000000000.csv") != std::string::npos);

    const auto count_rows = [](const std::string& path) {
        std::istringstream in(io::read_text_file(path));
        std::string line;
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') ++rows;
        return rows - 1; // drop header
    };
    REQUIRE(count_rows(paths_m2[0]) == 3);
    REQUIRE(count_rows(paths_m2[1]) == 11);

    const auto paths_m3 = experiment::reproduce_tables(3, {1e9}, dir.path.string());
    REQUIRE(count_rows(paths_m3[0]) == 8);
    const auto body = io::read_text_file(paths_m3[0]);
    REQUIRE(body.find("0.9502129") != std::string::npos); // 7-digit day-1 f
    // Every table ends fully utilized.
    REQUIRE(body.find(",1\n") != std::string::npos);
}

TEST_CASE("figure CSV covers exact and approximation series", "[experiment]") {
    const auto csv = experiment::figure_csv(experiment::default_figure_spec());
    REQUIRE(csv.rfind("series,t,f\n", 0) == 0);
    REQUIRE(csv.find("exact_n100_m2,1,0.867380444\n") != std::string::npos);
    REQUIRE(csv.find("exact_n1000000000_m3,1,0.950212932\n") != std::string::npos);
    REQUIRE(csv.find("approx_m2,1,0.864664717\n") != std::string::npos);
    REQUIRE(csv.find("approx_m3,0.25,0.527633447\n") != std::string::npos);
    // Exact series pad to the horizon after convergence.
    REQUIRE(csv.find("exact_n100_m2,11,1\n") != std::string::npos);

    experiment::FigureSpec empty;
    REQUIRE(experiment::figure_csv(empty) == "series,t,f\n");
    empty.horizon_days = 0;
    REQUIRE_THROWS_AS(experiment::figure_csv(empty), std::invalid_argument);
}

TEST_CASE("figure JSON mirrors the CSV rows field for field", "[experiment]") {
    experiment::FigureSpec spec;
    spec.exact = {{100.0, 2}};
    spec.approx_m = {2};
    spec.horizon_days = 3;
    spec.samples_per_day = 1;
    const auto j = nlohmann::json::parse(experiment::figure_json(spec));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 6); // 3 exact days + 3 approx samples
    REQUIRE(j[0]["series"] == "exact_n100_m2");
    REQUIRE(j[0]["t"] == 1.0);
    REQUIRE(j[0]["f"] == 0.867380444); // 9-digit rounding, as in the CSV
    REQUIRE(j[3]["series"] == "approx_m2");
    REQUIRE(j[3]["f"] == 0.864664717);

    REQUIRE(experiment::figure_json(experiment::FigureSpec{}) == "[]\n");
}
