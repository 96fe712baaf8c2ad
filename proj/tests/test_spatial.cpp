#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "dkprg/rng.hpp"
#include "dkprg/spatial.hpp"

using namespace dkprg::spatial;

TEST_CASE("partition geometry: side, count, area, diameter", "[spatial]") {
    Partition p(32);
    REQUIRE(p.grid_side() == 32);
    REQUIRE(p.cell_count() == 1024);
    REQUIRE(p.cell_area() == Catch::Approx(1.0 / 1024).epsilon(1e-15));
    REQUIRE(p.cell_diameter() == Catch::Approx(std::sqrt(2.0) / 32).epsilon(1e-15));
    // diameter^2 = 2 * area = 2 / cell_count
    REQUIRE(p.cell_diameter() * p.cell_diameter() ==
            Catch::Approx(2.0 / p.cell_count()).epsilon(1e-12));
    REQUIRE_THROWS_AS(Partition(0), std::invalid_argument);
    REQUIRE_THROWS_AS(Partition(-3), std::invalid_argument);
}

TEST_CASE("cell_of: half-open cells, boundaries go up, exactly one cell", "[spatial]") {
    Partition p(4);
    REQUIRE(p.cell_of({0.0, 0.0}) == CellId{0, 0});
    REQUIRE(p.cell_of({0.24999, 0.0}) == CellId{0, 0});
    REQUIRE(p.cell_of({0.25, 0.0}) == CellId{0, 1});   // left edge belongs to the cell
    REQUIRE(p.cell_of({0.0, 0.75}) == CellId{3, 0});
    REQUIRE(p.cell_of({0.999999, 0.999999}) == CellId{3, 3});
    REQUIRE_THROWS_AS(p.cell_of({1.0, 0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(p.cell_of({0.5, -0.1}), std::invalid_argument);

    // Every sampled point has exactly one valid cell and index.
    const auto points = sample_uniform_points(2000, 99);
    for (const auto& point : points) {
        const auto cell = p.cell_of(point);
        REQUIRE(p.valid(cell));
        const int index = p.index_of(cell);
        REQUIRE(index >= 0);
        REQUIRE(index < p.cell_count());
        REQUIRE(index == cell.row * 4 + cell.col);
    }
}

TEST_CASE("adjacency includes diagonal neighbors and rejects identity", "[spatial]") {
    Partition p(8);
    REQUIRE(p.cells_adjacent({3, 3}, {3, 4}));
    REQUIRE(p.cells_adjacent({3, 3}, {4, 4}));   // corner contact counts
    REQUIRE(p.cells_adjacent({0, 0}, {1, 1}));
    REQUIRE_FALSE(p.cells_adjacent({0, 0}, {0, 2}));
    REQUIRE_FALSE(p.cells_adjacent({0, 0}, {2, 2}));
    REQUIRE_THROWS_AS(p.cells_adjacent({1, 1}, {1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(p.cells_adjacent({0, 0}, {8, 0}), std::invalid_argument);
}

TEST_CASE("distance bound holds for every adjacent-cell pair tried", "[spatial]") {
    Partition p(32);
    dkprg::rng::Engine engine(4242);
    int checked = 0;
    while (checked < 20000) {
        const Point a{engine.uniform_double(), engine.uniform_double()};
        const Point b{engine.uniform_double(), engine.uniform_double()};
        const auto ca = p.cell_of(a);
        const auto cb = p.cell_of(b);
        if (ca == cb) continue;
        if (!p.cells_adjacent(ca, cb)) continue;
        REQUIRE(check_distance_bound(p, a, b));
        ++checked;
    }
    // Non-adjacent pairs are rejected, not judged.
    REQUIRE_THROWS_AS(check_distance_bound(p, {0.01, 0.01}, {0.99, 0.99}),
                      std::invalid_argument);
}

TEST_CASE("sampling is deterministic, in range, and evenly spread", "[spatial]") {
    const auto a = sample_uniform_points(512, 7);
    const auto b = sample_uniform_points(512, 7);
    const auto c = sample_uniform_points(512, 8);
    REQUIRE(a.size() == 512);
    bool identical = true, any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a[i].x == b[i].x && a[i].y == b[i].y;
        any_diff = any_diff || a[i].x != c[i].x || a[i].y != c[i].y;
        REQUIRE(in_unit_square(a[i]));
    }
    REQUIRE(identical);
    REQUIRE(any_diff);
    REQUIRE_THROWS_AS(sample_uniform_points(0, 1), std::invalid_argument);

    // Quadrant counts of 40000 points: expected 10000, sd ~ 86.6, +-500 > 5 sigma.
    Partition quadrants(2);
    const auto occ = occupancy_counts(quadrants, sample_uniform_points(40000, 123));
    REQUIRE(occ.total == 40000);
    for (auto count : occ.counts) {
        REQUIRE(count > 9500u);
        REQUIRE(count < 10500u);
    }
}

TEST_CASE("occupancy counts add up and land in the right cells", "[spatial]") {
    Partition p(4);
    std::vector<Point> points{{0.1, 0.1}, {0.1, 0.15}, {0.9, 0.9}, {0.3, 0.8}};
    const auto occ = occupancy_counts(p, points);
    REQUIRE(occ.total == 4);
    REQUIRE(occ.counts[static_cast<std::size_t>(p.index_of(CellId{0, 0}))] == 2);
    REQUIRE(occ.counts[static_cast<std::size_t>(p.index_of(CellId{3, 3}))] == 1);
    REQUIRE(occ.counts[static_cast<std::size_t>(p.index_of(CellId{3, 1}))] == 1);
    std::uint64_t sum = 0;
    for (auto count : occ.counts) sum += count;
    REQUIRE(sum == occ.total);
}
