#pragma once
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkprg/rng.hpp"
#include "dkprg/spatial.hpp"
#include "dkprg/tsp.hpp"

// The repeated m-stop restaurant game. Each day every still-unserved agent
// walks the first m positions of its personal tour; collisions at a free
// restaurant are settled by a uniform draw; served agents reserve their
// restaurant permanently and everyone else re-plans over the remaining
// vacant restaurants in the evening.

namespace dkprg::game {

enum class TourPolicy { MetaheuristicTsp, UniformRandom };
enum class Placement { Concentrated, Uniform };

struct GameConfig {
    int n = 1;                       // agents = restaurants
    int m = 1;                       // stops per day
    TourPolicy tour_policy = TourPolicy::MetaheuristicTsp;
    Placement placement = Placement::Uniform;
    double lambda = 0.3;             // distance/preference blend for personal instances
    std::uint64_t seed = 0;
    int max_days = 64;
    std::uint64_t solver_budget = 0; // move evaluations per in-game solve; 0 = scale with instance size
};

inline void validate(const GameConfig& config) {
    if (config.n < 1) throw std::invalid_argument("GameConfig: n must be >= 1");
    if (config.m < 1 || config.m > config.n)
        throw std::invalid_argument("GameConfig: need 1 <= m <= n");
    if (!(config.lambda >= 0.0 && config.lambda <= 1.0))
        throw std::invalid_argument("GameConfig: lambda must be in [0,1]");
    if (config.max_days < 1) throw std::invalid_argument("GameConfig: max_days must be >= 1");
}

struct AgentState {
    int id = 0;
    spatial::Point start{0.0, 0.0};
    std::vector<int> prefs;  // all restaurant ids, most preferred first
    bool satisfied = false;
    int restaurant = -1;     // reserved restaurant id once satisfied
    std::vector<int> route;  // current tour as restaurant ids, depot implicit
};

struct RestaurantState {
    int id = 0;
    spatial::Point location{0.0, 0.0};
    bool reserved = false;
    int reserver = -1;       // agent id once reserved
};

struct DayLog {
    int day = 0;             // 1-based
    int active_at_start = 0;
    int served_today = 0;
    int still_unserved = 0;
    double utilization = 0.0; // cumulative: (n - still_unserved) / n
    std::vector<int> per_stop_services; // one count per stop
};

struct GameState {
    GameConfig config;
    std::vector<AgentState> agents;
    std::vector<RestaurantState> restaurants;
    int day = 0;             // completed days; routes on file are for day+1
};

namespace detail {

// Disjoint named substreams of the master seed; nested derivation keys the
// per-day and per-agent streams.
inline constexpr std::uint64_t kRestaurantStream = 1;
inline constexpr std::uint64_t kStartStream = 2;
inline constexpr std::uint64_t kPrefStream = 3;
inline constexpr std::uint64_t kTourStream = 4;
inline constexpr std::uint64_t kTieBreakStream = 5;

inline std::uint64_t tour_seed(const GameConfig& config, int day, int agent_id) {
    return rng::derive_seed(
        rng::derive_seed(rng::derive_seed(config.seed, kTourStream), static_cast<std::uint64_t>(day)),
        static_cast<std::uint64_t>(agent_id));
}

inline std::uint64_t default_budget(int vacant_count) {
    const auto v = static_cast<std::uint64_t>(vacant_count);
    return std::max<std::uint64_t>(1000, v * v);
}

} // namespace detail

inline std::vector<int> vacant_restaurants(const GameState& state) {
    std::vector<int> ids;
    for (const auto& r : state.restaurants)
        if (!r.reserved) ids.push_back(r.id);
    return ids;
}

inline int active_count(const GameState& state) {
    int count = 0;
    for (const auto& a : state.agents)
        if (!a.satisfied) ++count;
    return count;
}

inline double utilization(const GameState& state) {
    return static_cast<double>(static_cast<int>(state.agents.size()) - active_count(state)) /
           static_cast<double>(state.agents.size());
}

namespace detail {

// Fresh tours for every active agent over exactly the vacant restaurants.
// `day` keys the per-agent tour seeds, so replays are position-exact.
inline void assign_tours(GameState& state, int day) {
    const std::vector<int> vacant = vacant_restaurants(state);
    const int v = static_cast<int>(vacant.size());
    if (v == 0) return;

    std::vector<spatial::Point> points;
    std::vector<char> is_vacant(state.restaurants.size(), 0);
    if (state.config.tour_policy == TourPolicy::MetaheuristicTsp) {
        points.reserve(vacant.size());
        for (int id : vacant) points.push_back(state.restaurants[static_cast<std::size_t>(id)].location);
        for (int id : vacant) is_vacant[static_cast<std::size_t>(id)] = 1;
    }
    std::vector<int> rank_of(state.restaurants.size());

    for (auto& agent : state.agents) {
        if (agent.satisfied) continue;
        const std::uint64_t seed = tour_seed(state.config, day, agent.id);
        tsp::Tour tour;
        if (state.config.tour_policy == TourPolicy::UniformRandom) {
            tour = tsp::random_tour(v, seed);
        } else if (v == 1) {
            tour = tsp::Tour{{1}};
        } else {
            // Induce the agent's ranking on the vacant subset: the j-th
            // vacant id in global preference order gets rank j.
            int next_rank = 0;
            for (int id : agent.prefs)
                if (is_vacant[static_cast<std::size_t>(id)])
                    rank_of[static_cast<std::size_t>(id)] = next_rank++;
            tsp::PreferenceRanking prefs;
            prefs.order.resize(static_cast<std::size_t>(v));
            for (int i = 0; i < v; ++i)
                prefs.order[static_cast<std::size_t>(
                    rank_of[static_cast<std::size_t>(vacant[static_cast<std::size_t>(i)])])] = i + 1;
            const auto instance =
                tsp::build_personal_instance(agent.start, points, prefs, state.config.lambda);
            const std::uint64_t budget = state.config.solver_budget != 0
                ? state.config.solver_budget
                : default_budget(v);
            tour = tsp::solve_metaheuristic(instance, budget, seed);
        }
        agent.route.clear();
        agent.route.reserve(tour.visit_order.size());
        for (int node : tour.visit_order)
            agent.route.push_back(vacant[static_cast<std::size_t>(node - 1)]);
    }
}

} // namespace detail

inline GameState new_game(const GameConfig& config) {
    validate(config);
    GameState state;
    state.config = config;

    const auto locations = spatial::sample_uniform_points(
        config.n, rng::derive_seed(config.seed, detail::kRestaurantStream));
    state.restaurants.resize(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        state.restaurants[static_cast<std::size_t>(i)].id = i;
        state.restaurants[static_cast<std::size_t>(i)].location = locations[static_cast<std::size_t>(i)];
    }

    std::vector<spatial::Point> starts;
    if (config.placement == Placement::Uniform)
        starts = spatial::sample_uniform_points(
            config.n, rng::derive_seed(config.seed, detail::kStartStream));
    else
        starts.assign(static_cast<std::size_t>(config.n), spatial::Point{0.5, 0.5});

    const std::uint64_t pref_base = rng::derive_seed(config.seed, detail::kPrefStream);
    state.agents.resize(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        auto& agent = state.agents[static_cast<std::size_t>(i)];
        agent.id = i;
        agent.start = starts[static_cast<std::size_t>(i)];
        agent.prefs.resize(static_cast<std::size_t>(config.n));
        std::iota(agent.prefs.begin(), agent.prefs.end(), 0);
        rng::Engine pref_engine(rng::derive_seed(pref_base, static_cast<std::uint64_t>(i)));
        rng::shuffle(agent.prefs, pref_engine);
    }

    detail::assign_tours(state, 1);
    return state;
}

// One day of walking. Stops are synchronized rounds: during stop z every
// still-unserved agent stands at position z of its route. A restaurant
// that is permanently reserved, or already served someone today, rejects
// all arrivals; otherwise one arrival wins a uniform draw. Contested
// restaurants consume the day's tie-break stream in (stop, restaurant-id)
// order, so a seed fixes every outcome.
inline DayLog play_day(GameState& state) {
    const int n = static_cast<int>(state.agents.size());
    const int day = state.day + 1;
    DayLog log;
    log.day = day;
    log.active_at_start = active_count(state);
    log.per_stop_services.assign(static_cast<std::size_t>(state.config.m), 0);
    if (log.active_at_start == 0) throw std::logic_error("play_day: no active agents");

    rng::Engine tie_break(rng::derive_seed(
        rng::derive_seed(state.config.seed, detail::kTieBreakStream), static_cast<std::uint64_t>(day)));

    std::vector<char> serving_today(static_cast<std::size_t>(n), 0);
    std::vector<char> served_agent(state.agents.size(), 0);
    std::vector<std::pair<int, int>> winners; // (agent id, restaurant id)
    std::vector<std::vector<int>> arrivals(static_cast<std::size_t>(n));
    std::vector<int> touched;

    for (int z = 1; z <= state.config.m; ++z) {
        touched.clear();
        for (const auto& agent : state.agents) {
            if (agent.satisfied || served_agent[static_cast<std::size_t>(agent.id)]) continue;
            if (static_cast<std::size_t>(z) > agent.route.size()) continue;
            const int r = agent.route[static_cast<std::size_t>(z - 1)];
            const auto& restaurant = state.restaurants[static_cast<std::size_t>(r)];
            if (restaurant.reserved || serving_today[static_cast<std::size_t>(r)]) continue;
            if (arrivals[static_cast<std::size_t>(r)].empty()) touched.push_back(r);
            arrivals[static_cast<std::size_t>(r)].push_back(agent.id);
        }
        std::sort(touched.begin(), touched.end());
        for (int r : touched) {
            auto& group = arrivals[static_cast<std::size_t>(r)];
            const int winner = group.size() == 1
                ? group.front()
                : group[static_cast<std::size_t>(tie_break.uniform_below(group.size()))];
            serving_today[static_cast<std::size_t>(r)] = 1;
            served_agent[static_cast<std::size_t>(winner)] = 1;
            winners.emplace_back(winner, r);
            ++log.per_stop_services[static_cast<std::size_t>(z - 1)];
            group.clear();
        }
    }

    for (const auto& [agent_id, restaurant_id] : winners) {
        auto& agent = state.agents[static_cast<std::size_t>(agent_id)];
        agent.satisfied = true;
        agent.restaurant = restaurant_id;
        agent.route.clear();
        auto& restaurant = state.restaurants[static_cast<std::size_t>(restaurant_id)];
        restaurant.reserved = true;
        restaurant.reserver = agent_id;
    }

    state.day = day;
    log.served_today = static_cast<int>(winners.size());
    log.still_unserved = log.active_at_start - log.served_today;
    log.utilization = static_cast<double>(n - log.still_unserved) / static_cast<double>(n);
    return log;
}

namespace detail {

// first_stop[r]: smallest tour position (1-based, <= m) at which restaurant
// r appears in any active route; 0 = absent.
inline std::vector<int> first_stop_scan(const GameState& state) {
    std::vector<int> first_stop(state.restaurants.size(), 0);
    for (const auto& agent : state.agents) {
        if (agent.satisfied) continue;
        const int limit = static_cast<int>(
            std::min(static_cast<std::size_t>(state.config.m), agent.route.size()));
        for (int z = 1; z <= limit; ++z) {
            const int r = agent.route[static_cast<std::size_t>(z - 1)];
            auto& slot = first_stop[static_cast<std::size_t>(r)];
            if (slot == 0 || z < slot) slot = z;
        }
    }
    return first_stop;
}

} // namespace detail

// Previously-vacant restaurants that appear within the first m positions of
// at least one active route — the day's utilized set under the counting
// semantics. Pure query; ids ascend.
inline std::vector<int> counting_utilized_today(const GameState& state) {
    const auto first_stop = detail::first_stop_scan(state);
    std::vector<int> utilized;
    for (std::size_t r = 0; r < first_stop.size(); ++r)
        if (first_stop[r] != 0 && !state.restaurants[r].reserved)
            utilized.push_back(static_cast<int>(r));
    return utilized;
}

// Book-keeping day under the counting semantics: no walking or tie-breaking
// happens; the counting_utilized_today set is handed to the lowest-id active
// agents, which keeps the served/vacant counts exact while leaving
// identities arbitrary. Per-stop counts attribute each utilized restaurant
// to its earliest appearance position.
inline DayLog counting_play_day(GameState& state) {
    const int n = static_cast<int>(state.agents.size());
    const int day = state.day + 1;
    DayLog log;
    log.day = day;
    log.active_at_start = active_count(state);
    log.per_stop_services.assign(static_cast<std::size_t>(state.config.m), 0);
    if (log.active_at_start == 0) throw std::logic_error("counting_play_day: no active agents");

    const auto first_stop = detail::first_stop_scan(state);
    std::vector<int> utilized;
    for (int r = 0; r < n; ++r) {
        if (first_stop[static_cast<std::size_t>(r)] == 0) continue;
        if (state.restaurants[static_cast<std::size_t>(r)].reserved) continue;
        utilized.push_back(r);
        ++log.per_stop_services[static_cast<std::size_t>(first_stop[static_cast<std::size_t>(r)] - 1)];
    }

    std::size_t next = 0;
    for (auto& agent : state.agents) {
        if (next == utilized.size()) break;
        if (agent.satisfied) continue;
        const int r = utilized[next++];
        agent.satisfied = true;
        agent.restaurant = r;
        agent.route.clear();
        auto& restaurant = state.restaurants[static_cast<std::size_t>(r)];
        restaurant.reserved = true;
        restaurant.reserver = agent.id;
    }

    state.day = day;
    log.served_today = static_cast<int>(utilized.size());
    log.still_unserved = log.active_at_start - log.served_today;
    log.utilization = static_cast<double>(n - log.still_unserved) / static_cast<double>(n);
    return log;
}

// Evening re-planning: every active agent gets a fresh tour over exactly
// the currently vacant restaurants. Satisfied agents are untouched.
inline void revise(GameState& state) {
    detail::assign_tours(state, state.day + 1);
}

enum class DaySemantics { Behavioral, AnalyticCounting };

inline std::vector<DayLog> run_game(const GameConfig& config,
                                    DaySemantics semantics = DaySemantics::Behavioral) {
    GameState state = new_game(config);
    std::vector<DayLog> logs;
    while (active_count(state) > 0 && state.day < config.max_days) {
        logs.push_back(semantics == DaySemantics::Behavioral ? play_day(state)
                                                             : counting_play_day(state));
        if (active_count(state) == 0) break;
        revise(state);
    }
    return logs;
}

} // namespace dkprg::game
