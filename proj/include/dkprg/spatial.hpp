#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dkprg/rng.hpp"

// Spatial layout of the city: the unit square [0,1)^2, its k x k equal-area
// partitions, and uniform point placement. Distances are Euclidean.

namespace dkprg::spatial {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool in_unit_square(Point p) noexcept {
    return p.x >= 0.0 && p.x < 1.0 && p.y >= 0.0 && p.y < 1.0;
}

inline double euclidean_distance(Point p, Point q) noexcept {
    // Plain sqrt: coordinates live in [0,1), so the guarded std::hypot buys
    // nothing and costs an order of magnitude in the solver's hot loop.
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    return std::sqrt(dx * dx + dy * dy);
}

struct CellId {
    int row = 0;
    int col = 0;
    friend bool operator==(CellId a, CellId b) noexcept {
        return a.row == b.row && a.col == b.col;
    }
};

// k x k grid of half-open square cells over the unit square. Cell (row, col)
// spans [col/k, (col+1)/k) x [row/k, (row+1)/k), so every point of the square
// belongs to exactly one cell and boundary points go to the higher-index cell.
class Partition {
public:
    explicit Partition(int k) : k_(k) {
        if (k < 1) throw std::invalid_argument("Partition: grid side k must be >= 1");
    }

    int grid_side() const noexcept { return k_; }
    int cell_count() const noexcept { return k_ * k_; }
    double cell_area() const noexcept { return 1.0 / cell_count(); }

    // sqrt(2)/k = sqrt(2/n): the diagonal of one cell.
    double cell_diameter() const noexcept { return std::sqrt(2.0) / k_; }

    CellId cell_of(Point p) const {
        if (!in_unit_square(p))
            throw std::invalid_argument("cell_of: point outside [0,1)^2");
        auto clamp = [this](double v) {
            int i = static_cast<int>(v * k_);
            return i >= k_ ? k_ - 1 : i; // guards v*k rounding up to k
        };
        return CellId{clamp(p.y), clamp(p.x)};
    }

    bool valid(CellId c) const noexcept {
        return c.row >= 0 && c.row < k_ && c.col >= 0 && c.col < k_;
    }

    // Flat index in row-major order.
    int index_of(CellId c) const {
        if (!valid(c)) throw std::invalid_argument("index_of: cell id out of range");
        return c.row * k_ + c.col;
    }

    // Closed cells touch iff they differ by at most one row and one column;
    // corner contact counts because the infimum distance is zero there.
    bool cells_adjacent(CellId a, CellId b) const {
        if (!valid(a) || !valid(b))
            throw std::invalid_argument("cells_adjacent: cell id out of range");
        if (a == b)
            throw std::invalid_argument("cells_adjacent: cells must be distinct");
        return std::abs(a.row - b.row) <= 1 && std::abs(a.col - b.col) <= 1;
    }

private:
    int k_;
};

// d(p, q) <= diam(cell of p) + diam(cell of q) = 2*sqrt(2)/k, for points in
// adjacent cells. Always true on a square grid; exposed as a checkable
// predicate rather than an assumption.
inline bool check_distance_bound(const Partition& partition, Point p, Point q) {
    const CellId a = partition.cell_of(p);
    const CellId b = partition.cell_of(q);
    if (!partition.cells_adjacent(a, b))
        throw std::invalid_argument("check_distance_bound: cells are not adjacent");
    return euclidean_distance(p, q) <= 2.0 * partition.cell_diameter();
}

inline std::vector<Point> sample_uniform_points(std::size_t count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_uniform_points: count must be >= 1");
    rng::Engine engine(seed);
    std::vector<Point> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = engine.uniform_double();
        const double y = engine.uniform_double();
        points.push_back(Point{x, y});
    }
    return points;
}

struct OccupancyCounts {
    std::vector<std::uint64_t> counts; // one entry per cell, row-major
    std::uint64_t total = 0;
};

inline OccupancyCounts occupancy_counts(const Partition& partition,
                                        const std::vector<Point>& points) {
    OccupancyCounts occ;
    occ.counts.assign(static_cast<std::size_t>(partition.cell_count()), 0);
    for (const Point& p : points) {
        ++occ.counts[static_cast<std::size_t>(partition.index_of(partition.cell_of(p)))];
        ++occ.total;
    }
    return occ;
}

} // namespace dkprg::spatial
