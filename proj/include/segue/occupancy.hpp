#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "segue/core.hpp"

namespace segue {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

// ---------------------------------------------------------------------------
// OccupancyGrid
//
// Row-major H x W grid at a fixed metric resolution. Row index follows y,
// column index follows x. Cell (r, c) spans
//   [origin_x + c*res, origin_x + (c+1)*res) x [origin_y + r*res, ...)
// and its center sits at origin + (c + 0.5, r + 0.5) * res.

class OccupancyGrid {
public:
    OccupancyGrid(int width, int height, double resolution,
                  double origin_x = 0.0, double origin_y = 0.0)
        : width_(width),
          height_(height),
          resolution_(resolution),
          origin_x_(origin_x),
          origin_y_(origin_y),
          cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 CellState::Unknown) {
        if (width <= 0 || height <= 0 || resolution <= 0.0)
            throw InvalidDims("OccupancyGrid: non-positive dimensions or resolution");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }

    bool in_bounds(GridIndex i) const {
        return i.row >= 0 && i.row < height_ && i.col >= 0 && i.col < width_;
    }

    CellState at(GridIndex i) const { return cells_[index_of(i)]; }
    void set(GridIndex i, CellState s) { cells_[index_of(i)] = s; }

    const std::vector<CellState>& cells() const { return cells_; }

    /// Floor-binned cell containing the world point. Throws OutOfBounds when
    /// the point falls outside the grid rectangle.
    GridIndex world_to_grid(double x, double y) const {
        const int col = static_cast<int>(std::floor((x - origin_x_) / resolution_));
        const int row = static_cast<int>(std::floor((y - origin_y_) / resolution_));
        const GridIndex idx{row, col};
        if (!in_bounds(idx)) throw OutOfBounds("world_to_grid: point outside grid extents");
        return idx;
    }

    GridIndex world_to_grid(const Pose& p) const { return world_to_grid(p.x, p.y); }

    /// Center of the cell in world coordinates.
    void grid_to_world(GridIndex i, double& x, double& y) const {
        x = origin_x_ + (static_cast<double>(i.col) + 0.5) * resolution_;
        y = origin_y_ + (static_cast<double>(i.row) + 0.5) * resolution_;
    }

    std::size_t index_of(GridIndex i) const {
        if (!in_bounds(i)) throw OutOfBounds("OccupancyGrid: index outside grid");
        return static_cast<std::size_t>(i.row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(i.col);
    }

    std::size_t count(CellState s) const {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s));
    }

    friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

private:
    int width_;
    int height_;
    double resolution_;
    double origin_x_;
    double origin_y_;
    std::vector<CellState> cells_;
};

// ---------------------------------------------------------------------------
// Bresenham raycasting

/// 8-connected Bresenham line from a to b, inclusive of both endpoints.
///
/// The walk is direction-canonical: the traced cells for (a, b) and (b, a)
/// are the same set, so reversing the endpoints reverses the list exactly.
/// When the ideal line crosses a cell corner exactly, the canonical trace
/// takes the row step together with the column step (a diagonal move).
inline std::vector<GridIndex> bresenham_line(GridIndex a, GridIndex b) {
    const bool flip = b < a;
    if (flip) std::swap(a, b);

    std::vector<GridIndex> cells;
    const int dr = std::abs(b.row - a.row);
    const int dc = std::abs(b.col - a.col);
    const int sr = (b.row >= a.row) ? 1 : -1;
    const int sc = (b.col >= a.col) ? 1 : -1;
    cells.reserve(static_cast<std::size_t>(std::max(dr, dc)) + 1);

    int r = a.row;
    int c = a.col;
    int err = dc - dr;
    while (true) {
        cells.push_back(GridIndex{r, c});
        if (r == b.row && c == b.col) break;
        const int e2 = 2 * err;
        if (e2 > -dr) {
            err -= dr;
            c += sc;
        }
        if (e2 <= dc) {  // row step wins exact ties
            err += dc;
            r += sr;
        }
    }

    if (flip) std::reverse(cells.begin(), cells.end());
    return cells;
}

struct RaycastResult {
    std::vector<GridIndex> traversed;
    std::optional<GridIndex> blocked_at;
};

/// Walks the Bresenham line from `from` to `to`, stopping at (and including)
/// the first Occupied cell. Unknown and Free cells are transparent.
inline RaycastResult raycast(const OccupancyGrid& grid, GridIndex from, GridIndex to) {
    if (!grid.in_bounds(from) || !grid.in_bounds(to))
        throw OutOfBounds("raycast: endpoint outside grid");

    RaycastResult result;
    for (const GridIndex& cell : bresenham_line(from, to)) {
        result.traversed.push_back(cell);
        if (grid.at(cell) == CellState::Occupied) {
            result.blocked_at = cell;
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Visibility
//
// Line of sight is defined by sampling the sight segment every 0.1 cells:
// with n = ceil(len / (0.1 * resolution)) the sample points are
//   p_k = a + (b - a) * (k / n),  k = 0..n,
// and sight is clear when no sample before the target cell lands in an
// Occupied cell. An Occupied target is itself visible when the segment
// reaches it. This sampled definition, rather than the discrete Bresenham
// walk, is the geometry the view mask guarantees.

namespace detail {

inline bool line_of_sight(const OccupancyGrid& grid, double ax, double ay,
                          GridIndex target) {
    double bx, by;
    grid.grid_to_world(target, bx, by);
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len = std::sqrt(dx * dx + dy * dy);
    const double step = 0.1 * grid.resolution();
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n);
        const double px = ax + dx * t;
        const double py = ay + dy * t;
        const int col = static_cast<int>(std::floor((px - grid.origin_x()) / grid.resolution()));
        const int row = static_cast<int>(std::floor((py - grid.origin_y()) / grid.resolution()));
        const GridIndex cell{row, col};
        if (!grid.in_bounds(cell)) continue;
        if (cell == target) return true;
        if (grid.at(cell) == CellState::Occupied) return false;
    }
    return true;
}

}  // namespace detail

/// Cells visible from a pose. `visible` is sorted row-major and unique.
struct ViewMask {
    Pose origin_pose;
    std::vector<GridIndex> visible;

    bool contains(GridIndex i) const {
        return std::binary_search(visible.begin(), visible.end(), i);
    }
};

/// A cell is visible iff its center lies within max_range of the pose, the
/// bearing from the pose to the center lies within +-fov/2 of the heading
/// (every bearing passes at fov = 2*pi), and the sampled sight segment from
/// the pose-cell center is not blocked before reaching it. The pose cell is
/// always a member. Obstacles the sight line terminates on are included.
inline ViewMask visibility_mask(const OccupancyGrid& grid, const Pose& pose,
                                double fov, double max_range) {
    const GridIndex pose_cell = grid.world_to_grid(pose);  // throws OutOfBounds
    double ax, ay;
    grid.grid_to_world(pose_cell, ax, ay);

    const bool full_circle = fov >= kTwoPi;
    const double half_fov = 0.5 * fov;

    // Candidate cells restricted to the bounding box of the range disk.
    const double res = grid.resolution();
    const int reach = static_cast<int>(std::ceil(max_range / res)) + 1;
    const int r_lo = std::max(0, pose_cell.row - reach);
    const int r_hi = std::min(grid.height() - 1, pose_cell.row + reach);
    const int c_lo = std::max(0, pose_cell.col - reach);
    const int c_hi = std::min(grid.width() - 1, pose_cell.col + reach);

    ViewMask mask;
    mask.origin_pose = pose;
    for (int r = r_lo; r <= r_hi; ++r) {
        for (int c = c_lo; c <= c_hi; ++c) {
            const GridIndex cell{r, c};
            if (cell == pose_cell) {
                mask.visible.push_back(cell);
                continue;
            }
            double cx, cy;
            grid.grid_to_world(cell, cx, cy);
            const double dist = std::hypot(cx - pose.x, cy - pose.y);
            if (dist > max_range) continue;
            if (!full_circle) {
                const double rel = normalize_angle(bearing(pose.x, pose.y, cx, cy) - pose.theta);
                if (std::abs(rel) > half_fov) continue;
            }
            if (detail::line_of_sight(grid, ax, ay, cell)) mask.visible.push_back(cell);
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Occupancy updates from range scans

/// One sweep of range measurements. Bearings are absolute (world frame) and
/// evenly spaced when produced by the simulated scanner; `hit` distinguishes
/// a return from a max-range miss.
struct RangeScan {
    struct Beam {
        double bearing = 0.0;
        double distance = 0.0;
        bool hit = false;
    };
    std::vector<Beam> beams;
    double max_range = 0.0;
};

/// Deterministic latched update: cells strictly before a hit become Free, the
/// hit cell becomes Occupied, miss beams free every cell out to max range,
/// and Occupied never reverts. Beams leaving the grid are clipped at the
/// boundary.
inline void update_occupancy(OccupancyGrid& grid, const Pose& pose, const RangeScan& scan) {
    const GridIndex pose_cell = grid.world_to_grid(pose);
    const double res = grid.resolution();
    const double min_x = grid.origin_x();
    const double min_y = grid.origin_y();
    const double max_x = min_x + grid.width() * res;
    const double max_y = min_y + grid.height() * res;

    for (const RangeScan::Beam& beam : scan.beams) {
        const double ex = pose.x + beam.distance * std::cos(beam.bearing);
        const double ey = pose.y + beam.distance * std::sin(beam.bearing);

        // Clip the beam segment to the grid rectangle.
        double t_end = 1.0;
        const double dx = ex - pose.x;
        const double dy = ey - pose.y;
        if (dx > 0.0) t_end = std::min(t_end, (max_x - pose.x) / dx);
        if (dx < 0.0) t_end = std::min(t_end, (min_x - pose.x) / dx);
        if (dy > 0.0) t_end = std::min(t_end, (max_y - pose.y) / dy);
        if (dy < 0.0) t_end = std::min(t_end, (min_y - pose.y) / dy);
        const bool clipped = t_end < 1.0;

        const double fx = pose.x + dx * t_end;
        const double fy = pose.y + dy * t_end;
        GridIndex end_cell{
            std::clamp(static_cast<int>(std::floor((fy - min_y) / res)), 0, grid.height() - 1),
            std::clamp(static_cast<int>(std::floor((fx - min_x) / res)), 0, grid.width() - 1)};

        const std::vector<GridIndex> line = bresenham_line(pose_cell, end_cell);
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
            if (grid.at(line[i]) != CellState::Occupied) grid.set(line[i], CellState::Free);
        }
        const GridIndex last = line.back();
        if (beam.hit && !clipped) {
            grid.set(last, CellState::Occupied);
        } else if (grid.at(last) != CellState::Occupied) {
            grid.set(last, CellState::Free);
        }
    }
}

}  // namespace segue
