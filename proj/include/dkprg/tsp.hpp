#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dkprg/rng.hpp"
#include "dkprg/spatial.hpp"

// Personalized TSP instances and solvers. Node 0 is always the agent's
// starting point; nodes 1..n are restaurants. Tours are permutations of the
// restaurant indices with the depot implicit at both ends.

namespace dkprg::tsp {

// Thrown by solve_exact above the dynamic-programming size cap.
class InstanceTooLarge : public std::length_error {
public:
    explicit InstanceTooLarge(int node_count)
        : std::length_error("solve_exact: instance with " + std::to_string(node_count) +
                            " nodes exceeds the exact-solver cap of 16") {}
};

struct PreferenceRanking {
    std::vector<int> order; // restaurant indices 1..n, most preferred first
};

inline bool is_permutation_1_to_n(const std::vector<int>& v, int n) {
    if (static_cast<int>(v.size()) != n) return false;
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    for (int x : v) {
        if (x < 1 || x > n || seen[static_cast<std::size_t>(x)]) return false;
        seen[static_cast<std::size_t>(x)] = true;
    }
    return true;
}

class TspInstance {
public:
    // Matrix rows/cols are nodes 0..n; must be symmetric, non-negative, with
    // a zero diagonal.
    static TspInstance from_matrix(const std::vector<std::vector<double>>& m) {
        const std::size_t nodes = m.size();
        if (nodes < 2) throw std::invalid_argument("TspInstance: need at least one restaurant");
        TspInstance inst;
        inst.restaurant_count_ = static_cast<int>(nodes) - 1;
        inst.costs_.assign(nodes * nodes, 0.0);
        for (std::size_t i = 0; i < nodes; ++i) {
            if (m[i].size() != nodes) throw std::invalid_argument("TspInstance: matrix not square");
            for (std::size_t j = 0; j < nodes; ++j) {
                if (i == j && m[i][j] != 0.0)
                    throw std::invalid_argument("TspInstance: diagonal must be zero");
                if (m[i][j] < 0.0) throw std::invalid_argument("TspInstance: negative cost");
                if (m[i][j] != m[j][i])
                    throw std::invalid_argument("TspInstance: matrix not symmetric");
                inst.costs_[i * nodes + j] = m[i][j];
            }
        }
        return inst;
    }

    int restaurant_count() const noexcept { return restaurant_count_; }
    int node_count() const noexcept { return restaurant_count_ + 1; }

    double cost(int i, int j) const noexcept {
        return costs_[static_cast<std::size_t>(i) * node_count() + j];
    }

private:
    friend TspInstance build_personal_instance(spatial::Point,
                                               const std::vector<spatial::Point>&,
                                               const PreferenceRanking&, double);
    TspInstance() = default;
    int restaurant_count_ = 0;
    std::vector<double> costs_; // (n+1) x (n+1), row-major
};

struct Tour {
    std::vector<int> visit_order; // permutation of 1..n
};

inline bool is_valid_tour(const Tour& tour, const TspInstance& instance) {
    return is_permutation_1_to_n(tour.visit_order, instance.restaurant_count());
}

// Blends normalized distance with a symmetric preference penalty:
//   cost(u, v) = (1 - lambda) * d(u, v) / d_max + lambda * (pen(u) + pen(v)) / 2
// where pen(depot) = 0 and pen(restaurant) scales its preference rank onto
// [0, 1]. Both terms live on [0, 1], so lambda is directly interpretable.
// Equidistant restaurants of different rank get strictly ordered costs for
// any lambda > 0.
inline TspInstance build_personal_instance(spatial::Point start,
                                           const std::vector<spatial::Point>& restaurants,
                                           const PreferenceRanking& prefs,
                                           double lambda) {
    const int n = static_cast<int>(restaurants.size());
    if (n < 1) throw std::invalid_argument("build_personal_instance: empty restaurant set");
    if (!is_permutation_1_to_n(prefs.order, n))
        throw std::invalid_argument("build_personal_instance: prefs must be a permutation of 1..n");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("build_personal_instance: lambda must be in [0,1]");

    std::vector<spatial::Point> nodes;
    nodes.reserve(static_cast<std::size_t>(n) + 1);
    nodes.push_back(start);
    nodes.insert(nodes.end(), restaurants.begin(), restaurants.end());

    double d_max = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            d_max = std::max(d_max, spatial::euclidean_distance(nodes[i], nodes[j]));

    std::vector<double> pen(nodes.size(), 0.0);
    const double rank_scale = 1.0 / std::max(n - 1, 1);
    for (int pos = 0; pos < n; ++pos)
        pen[static_cast<std::size_t>(prefs.order[static_cast<std::size_t>(pos)])] = pos * rank_scale;

    TspInstance inst;
    inst.restaurant_count_ = n;
    inst.costs_.assign(nodes.size() * nodes.size(), 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            const double dist = d_max > 0.0
                ? spatial::euclidean_distance(nodes[i], nodes[j]) / d_max
                : 0.0;
            const double c = (1.0 - lambda) * dist + lambda * 0.5 * (pen[i] + pen[j]);
            inst.costs_[i * nodes.size() + j] = c;
            inst.costs_[j * nodes.size() + i] = c;
        }
    }
    return inst;
}

inline double tour_cost(const TspInstance& instance, const Tour& tour) {
    if (!is_valid_tour(tour, instance))
        throw std::invalid_argument("tour_cost: tour is not a permutation of the instance's restaurants");
    double total = 0.0;
    int prev = 0;
    for (int node : tour.visit_order) {
        total += instance.cost(prev, node);
        prev = node;
    }
    total += instance.cost(prev, 0);
    return total;
}

// Greedy construction from the depot; ties go to the smaller index.
inline Tour nearest_neighbor(const TspInstance& instance) {
    const int n = instance.restaurant_count();
    std::vector<bool> visited(static_cast<std::size_t>(n) + 1, false);
    Tour tour;
    tour.visit_order.reserve(static_cast<std::size_t>(n));
    int current = 0;
    for (int step = 0; step < n; ++step) {
        int nearest = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int next = 1; next <= n; ++next) {
            if (!visited[static_cast<std::size_t>(next)] && instance.cost(current, next) < best) {
                best = instance.cost(current, next);
                nearest = next;
            }
        }
        visited[static_cast<std::size_t>(nearest)] = true;
        tour.visit_order.push_back(nearest);
        current = nearest;
    }
    return tour;
}

namespace detail {

// Improving moves must beat this margin; keeps float noise from cycling.
inline constexpr double kImproveEps = 1e-12;

struct EvalBudget {
    std::uint64_t remaining = std::numeric_limits<std::uint64_t>::max();
    bool spend() noexcept {
        if (remaining == 0) return false;
        --remaining;
        return true;
    }
    bool exhausted() const noexcept { return remaining == 0; }
};

// path = [0, v_1, ..., v_n, 0]; moves operate on indices 1..n.
inline std::vector<int> to_path(const Tour& tour) {
    std::vector<int> path;
    path.reserve(tour.visit_order.size() + 2);
    path.push_back(0);
    path.insert(path.end(), tour.visit_order.begin(), tour.visit_order.end());
    path.push_back(0);
    return path;
}

inline Tour to_tour(const std::vector<int>& path) {
    return Tour{std::vector<int>(path.begin() + 1, path.end() - 1)};
}

// One first-improvement 2-opt sweep in fixed scan order. Returns true if a
// move was applied. A move removes edges (path[i-1], path[i]) and
// (path[j], path[j+1]) and reverses path[i..j]; i = 1 and j = n cover the
// depot edges.
inline bool sweep_2opt(const TspInstance& instance, std::vector<int>& path, EvalBudget& budget) {
    const int n = static_cast<int>(path.size()) - 2;
    for (int i = 1; i < n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            if (!budget.spend()) return false;
            const int a = path[static_cast<std::size_t>(i - 1)];
            const int b = path[static_cast<std::size_t>(i)];
            const int c = path[static_cast<std::size_t>(j)];
            const int d = path[static_cast<std::size_t>(j + 1)];
            const double delta = instance.cost(a, c) + instance.cost(b, d)
                               - instance.cost(a, b) - instance.cost(c, d);
            if (delta < -kImproveEps) {
                std::reverse(path.begin() + i, path.begin() + j + 1);
                return true;
            }
        }
    }
    return false;
}

// First-improvement Or-opt sweep: relocate a segment of length 1..3 to
// another position, orientation preserved.
inline bool sweep_oropt(const TspInstance& instance, std::vector<int>& path, EvalBudget& budget) {
    const int n = static_cast<int>(path.size()) - 2;
    for (int len = 1; len <= 3 && len < n; ++len) {
        for (int i = 1; i + len - 1 <= n; ++i) {
            const int seg_first = path[static_cast<std::size_t>(i)];
            const int seg_last = path[static_cast<std::size_t>(i + len - 1)];
            const int before = path[static_cast<std::size_t>(i - 1)];
            const int after = path[static_cast<std::size_t>(i + len)];
            const double removal_gain = instance.cost(before, seg_first)
                                      + instance.cost(seg_last, after)
                                      - instance.cost(before, after);
            // Insert between path[j] and path[j+1], outside the segment.
            for (int j = 0; j <= n; ++j) {
                if (j >= i - 1 && j <= i + len - 1) continue;
                if (!budget.spend()) return false;
                const int u = path[static_cast<std::size_t>(j)];
                const int v = path[static_cast<std::size_t>(j + 1)];
                const double insertion_cost = instance.cost(u, seg_first)
                                            + instance.cost(seg_last, v)
                                            - instance.cost(u, v);
                if (insertion_cost - removal_gain < -kImproveEps) {
                    std::vector<int> segment(path.begin() + i, path.begin() + i + len);
                    path.erase(path.begin() + i, path.begin() + i + len);
                    const int target = j < i ? j : j - len;
                    path.insert(path.begin() + target + 1, segment.begin(), segment.end());
                    return true;
                }
            }
        }
    }
    return false;
}

// Variable-neighborhood descent: 2-opt to a local optimum, then Or-opt;
// any Or-opt gain reopens the 2-opt neighborhood.
inline void vnd_descent(const TspInstance& instance, std::vector<int>& path, EvalBudget& budget) {
    while (!budget.exhausted()) {
        while (sweep_2opt(instance, path, budget)) {}
        if (budget.exhausted()) return;
        if (!sweep_oropt(instance, path, budget)) return;
    }
}

// Double bridge: cut the restaurant sequence into four parts and reconnect
// them as A C B D. Not reversible by a single 2-opt move.
inline void double_bridge(std::vector<int>& path, rng::Engine& engine) {
    const int n = static_cast<int>(path.size()) - 2;
    if (n < 4) return;
    // 1 <= p1 < p2 < p3 <= n-1 chosen uniformly among valid triples.
    int cuts[3];
    cuts[0] = 1 + static_cast<int>(engine.uniform_below(static_cast<std::uint64_t>(n - 3)));
    cuts[1] = cuts[0] + 1 + static_cast<int>(engine.uniform_below(
                  static_cast<std::uint64_t>(n - 2 - cuts[0])));
    cuts[2] = cuts[1] + 1 + static_cast<int>(engine.uniform_below(
                  static_cast<std::uint64_t>(n - 1 - cuts[1])));
    std::vector<int> next;
    next.reserve(path.size());
    next.insert(next.end(), path.begin(), path.begin() + 1 + cuts[0]);
    next.insert(next.end(), path.begin() + 1 + cuts[1], path.begin() + 1 + cuts[2]);
    next.insert(next.end(), path.begin() + 1 + cuts[0], path.begin() + 1 + cuts[1]);
    next.insert(next.end(), path.begin() + 1 + cuts[2], path.end());
    path = std::move(next);
}

inline double path_cost(const TspInstance& instance, const std::vector<int>& path) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        total += instance.cost(path[i], path[i + 1]);
    return total;
}

} // namespace detail

// First-improvement 2-opt descent to a local optimum. Never increases cost.
inline Tour improve_2opt(const TspInstance& instance, const Tour& tour) {
    if (!is_valid_tour(tour, instance))
        throw std::invalid_argument("improve_2opt: invalid tour");
    auto path = detail::to_path(tour);
    detail::EvalBudget unlimited;
    while (detail::sweep_2opt(instance, path, unlimited)) {}
    return detail::to_tour(path);
}

// Held-Karp dynamic program over restaurant subsets; exact up to 16 nodes.
// Ties resolve to the lexicographically smallest visit order.
inline Tour solve_exact(const TspInstance& instance) {
    const int n = instance.restaurant_count();
    if (instance.node_count() > 16) throw InstanceTooLarge(instance.node_count());
    if (n == 1) return Tour{{1}};

    // completion[s][j]: cheapest way to finish the tour from restaurant j+1
    // when the visited set is s (bit k set = restaurant k+1 visited, j in s).
    const std::size_t full = (std::size_t{1} << n) - 1;
    std::vector<double> completion((full + 1) * static_cast<std::size_t>(n),
                                   std::numeric_limits<double>::infinity());
    auto at = [n](std::size_t mask, int j) { return mask * static_cast<std::size_t>(n) + j; };

    for (int j = 0; j < n; ++j) completion[at(full, j)] = instance.cost(j + 1, 0);
    for (std::size_t mask = full - 1; mask >= 1; --mask) {
        for (int j = 0; j < n; ++j) {
            if (!(mask & (std::size_t{1} << j))) continue;
            double best = std::numeric_limits<double>::infinity();
            for (int k = 0; k < n; ++k) {
                if (mask & (std::size_t{1} << k)) continue;
                const double candidate =
                    instance.cost(j + 1, k + 1) + completion[at(mask | (std::size_t{1} << k), k)];
                best = std::min(best, candidate);
            }
            completion[at(mask, j)] = best;
        }
    }

    double optimal = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
        optimal = std::min(optimal, instance.cost(0, k + 1) + completion[at(std::size_t{1} << k, k)]);

    // Greedy reconstruction, smallest feasible index first; comparisons are
    // bit-exact because each completion entry is the min of these very sums.
    Tour tour;
    tour.visit_order.reserve(static_cast<std::size_t>(n));
    std::size_t mask = 0;
    int current = 0; // depot
    double target = optimal;
    for (int step = 0; step < n; ++step) {
        for (int k = 0; k < n; ++k) {
            if (mask & (std::size_t{1} << k)) continue;
            const std::size_t next_mask = mask | (std::size_t{1} << k);
            if (instance.cost(current, k + 1) + completion[at(next_mask, k)] == target) {
                target = completion[at(next_mask, k)];
                tour.visit_order.push_back(k + 1);
                mask = next_mask;
                current = k + 1;
                break;
            }
        }
    }
    // A symmetric tour and its reversal are the same cycle; canonicalize to
    // the lexicographically smaller orientation.
    std::vector<int> reversed(tour.visit_order.rbegin(), tour.visit_order.rend());
    if (reversed < tour.visit_order) tour.visit_order = std::move(reversed);
    return tour;
}

// GVNS: nearest-neighbor start, 2-opt + Or-opt descent, double-bridge shake,
// best tour kept. Deterministic in (instance, budget, seed); the budget
// bounds the number of move evaluations.
inline Tour solve_metaheuristic(const TspInstance& instance, std::uint64_t budget,
                                std::uint64_t seed) {
    if (budget < 1) throw std::invalid_argument("solve_metaheuristic: budget must be >= 1");
    const int n = instance.restaurant_count();
    Tour start = nearest_neighbor(instance);
    if (n <= 2) return start; // all tours are cost-equal up to reversal

    detail::EvalBudget evals{budget};
    auto best = detail::to_path(start);
    detail::vnd_descent(instance, best, evals);
    double best_cost = detail::path_cost(instance, best);

    rng::Engine engine(seed);
    while (!evals.exhausted() && n >= 4) {
        auto candidate = best;
        detail::double_bridge(candidate, engine);
        detail::vnd_descent(instance, candidate, evals);
        const double candidate_cost = detail::path_cost(instance, candidate);
        if (candidate_cost < best_cost - detail::kImproveEps) {
            best = std::move(candidate);
            best_cost = candidate_cost;
        }
    }
    return detail::to_tour(best);
}

// Uniform random permutation of 1..n.
inline Tour random_tour(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("random_tour: n must be >= 1");
    Tour tour;
    tour.visit_order.resize(static_cast<std::size_t>(n));
    std::iota(tour.visit_order.begin(), tour.visit_order.end(), 1);
    rng::Engine engine(seed);
    rng::shuffle(tour.visit_order, engine);
    return tour;
}

} // namespace dkprg::tsp
