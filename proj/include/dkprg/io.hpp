#pragma once
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dkprg/analytics.hpp"
#include "dkprg/game.hpp"
#include "dkprg/spatial.hpp"
#include "dkprg/tsp.hpp"

// File formats: CSV writers for points, day logs and analytic trajectories,
// and the two-file TSP instance exchange format (JSON descriptor + CSV edge
// list). All floating-point output goes through format_g so bytes are stable
// across runs.

namespace dkprg::io {

// Filesystem-level failure (open/read/write); maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what) {}
};

// Well-read file with malformed content; maps to CLI exit code 2.
class FormatError : public std::invalid_argument {
public:
    FormatError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what) {}
};

// %.{sig}g rendering; 9 significant digits unless a caller narrows it.
inline std::string format_g(double value, int significant_digits = 9) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", significant_digits, value);
    return buffer;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

inline std::string points_csv(const std::vector<spatial::Point>& points) {
    std::ostringstream out;
    out << "id,x,y\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        out << i << ',' << format_g(points[i].x, 17) << ',' << format_g(points[i].y, 17) << '\n';
    return out.str();
}

// One row per day; per-stop service counts become stop1..stopm when
// requested.
inline std::string day_logs_csv(const std::vector<game::DayLog>& logs, bool per_stop_columns = false) {
    std::ostringstream out;
    out << "day,active_at_start,served_today,still_unserved,utilization";
    const std::size_t stops = logs.empty() ? 0 : logs.front().per_stop_services.size();
    if (per_stop_columns)
        for (std::size_t z = 1; z <= stops; ++z) out << ",stop" << z;
    out << '\n';
    for (const auto& log : logs) {
        out << log.day << ',' << log.active_at_start << ',' << log.served_today << ','
            << log.still_unserved << ',' << format_g(log.utilization);
        if (per_stop_columns)
            for (int count : log.per_stop_services) out << ',' << count;
        out << '\n';
    }
    return out.str();
}

inline std::string trajectory_csv(const analytics::Trajectory& trajectory,
                                  int significant_digits = 9) {
    std::ostringstream out;
    out << "day,n_t,vp,a_s,a_u,f\n";
    for (const auto& day : trajectory.days) {
        out << day.t << ',' << format_g(day.n_t, significant_digits) << ','
            << format_g(day.vp, significant_digits) << ','
            << format_g(day.a_s, significant_digits) << ','
            << format_g(day.a_u, significant_digits) << ','
            << format_g(day.f, significant_digits) << '\n';
    }
    return out.str();
}

// ---- TSP instance exchange ----
// Descriptor JSON: {"node_count": N, "depot": D, "edges_csv": "file.csv"}.
// The CSV holds header i,j,cost and every unordered node pair once (either
// orientation). Node ids are 0-based; import relabels so the depot becomes
// node 0 while other nodes keep their relative order.

inline void export_instance(const tsp::TspInstance& instance, const std::string& descriptor_path,
                            const std::string& edges_csv_path) {
    std::ostringstream edges;
    edges << "i,j,cost\n";
    for (int i = 0; i < instance.node_count(); ++i)
        for (int j = i + 1; j < instance.node_count(); ++j)
            edges << i << ',' << j << ',' << format_g(instance.cost(i, j), 17) << '\n';
    write_text_file(edges_csv_path, edges.str());

    nlohmann::json descriptor;
    descriptor["node_count"] = instance.node_count();
    descriptor["depot"] = 0;
    descriptor["edges_csv"] = std::filesystem::path(edges_csv_path).filename().string();
    write_text_file(descriptor_path, descriptor.dump(2) + "\n");
}

inline tsp::TspInstance import_instance(const std::string& descriptor_path) {
    nlohmann::json descriptor;
    try {
        descriptor = nlohmann::json::parse(read_text_file(descriptor_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(descriptor_path, std::string("invalid JSON: ") + e.what());
    }
    if (!descriptor.contains("node_count") || !descriptor.contains("edges_csv"))
        throw FormatError(descriptor_path, "descriptor needs node_count and edges_csv");
    const int node_count = descriptor["node_count"].get<int>();
    const int depot = descriptor.value("depot", 0);
    if (node_count < 2) throw FormatError(descriptor_path, "node_count must be >= 2");
    if (depot < 0 || depot >= node_count) throw FormatError(descriptor_path, "depot out of range");

    const auto edges_path =
        (std::filesystem::path(descriptor_path).parent_path() /
         descriptor["edges_csv"].get<std::string>()).string();
    std::istringstream in(read_text_file(edges_path));

    std::vector<std::vector<double>> matrix(
        static_cast<std::size_t>(node_count),
        std::vector<double>(static_cast<std::size_t>(node_count), -1.0));
    for (int i = 0; i < node_count; ++i) matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0.0;

    std::string line;
    if (!std::getline(in, line) || line.rfind("i,j,cost", 0) != 0)
        throw FormatError(edges_path, "expected header i,j,cost");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        int i = 0, j = 0;
        double cost = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%lf", &i, &j, &cost) != 3)
            throw FormatError(edges_path, "bad edge row at line " + std::to_string(line_no));
        if (i < 0 || i >= node_count || j < 0 || j >= node_count || i == j)
            throw FormatError(edges_path, "edge endpoints out of range at line " + std::to_string(line_no));
        if (cost < 0.0)
            throw FormatError(edges_path, "negative cost at line " + std::to_string(line_no));
        auto& forward = matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        auto& backward = matrix[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        if ((forward >= 0.0 && forward != cost) || (backward >= 0.0 && backward != cost))
            throw FormatError(edges_path, "conflicting duplicate edge at line " + std::to_string(line_no));
        forward = cost;
        backward = cost;
    }
    for (int i = 0; i < node_count; ++i)
        for (int j = 0; j < node_count; ++j)
            if (matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] < 0.0)
                throw FormatError(edges_path, "missing edge " + std::to_string(i) + "-" + std::to_string(j));

    if (depot != 0) {
        // Swap-free relabeling: depot first, everyone else in original order.
        std::vector<int> order;
        order.reserve(static_cast<std::size_t>(node_count));
        order.push_back(depot);
        for (int i = 0; i < node_count; ++i)
            if (i != depot) order.push_back(i);
        std::vector<std::vector<double>> relabeled(
            static_cast<std::size_t>(node_count),
            std::vector<double>(static_cast<std::size_t>(node_count), 0.0));
        for (int i = 0; i < node_count; ++i)
            for (int j = 0; j < node_count; ++j)
                relabeled[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    matrix[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]
                          [static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        matrix = std::move(relabeled);
    }
    return tsp::TspInstance::from_matrix(matrix);
}

// Full-state dump for replay debugging.
inline nlohmann::json state_json(const game::GameState& state) {
    nlohmann::json j;
    j["config"] = {
        {"n", state.config.n},
        {"m", state.config.m},
        {"tour_policy",
         state.config.tour_policy == game::TourPolicy::MetaheuristicTsp ? "tsp" : "random"},
        {"placement",
         state.config.placement == game::Placement::Concentrated ? "concentrated" : "uniform"},
        {"lambda", state.config.lambda},
        {"seed", state.config.seed},
        {"max_days", state.config.max_days},
        {"solver_budget", state.config.solver_budget},
    };
    j["day"] = state.day;
    j["agents"] = nlohmann::json::array();
    for (const auto& agent : state.agents) {
        j["agents"].push_back({
            {"id", agent.id},
            {"start", {agent.start.x, agent.start.y}},
            {"satisfied", agent.satisfied},
            {"restaurant", agent.restaurant},
            {"route", agent.route},
            {"prefs", agent.prefs},
        });
    }
    j["restaurants"] = nlohmann::json::array();
    for (const auto& restaurant : state.restaurants) {
        j["restaurants"].push_back({
            {"id", restaurant.id},
            {"location", {restaurant.location.x, restaurant.location.y}},
            {"reserved", restaurant.reserved},
            {"reserver", restaurant.reserver},
        });
    }
    return j;
}

} // namespace dkprg::io
