#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>
#include <vector>

#include "segue/core.hpp"
#include "segue/occupancy.hpp"
#include "segue/sampling.hpp"

namespace segue {

/// 8-connected waypoint chain from start to goal; every waypoint was Free at
/// plan time and no waypoint repeats.
struct Path {
    std::vector<GridIndex> waypoints;

    bool empty() const { return waypoints.empty(); }
    const GridIndex& goal() const { return waypoints.back(); }
};

inline double path_cost(const Path& path) {
    double cost = 0.0;
    for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
        const bool diagonal = path.waypoints[i].row != path.waypoints[i + 1].row &&
                              path.waypoints[i].col != path.waypoints[i + 1].col;
        cost += diagonal ? std::numbers::sqrt2 : 1.0;
    }
    return cost;
}

struct RobotState {
    Pose pose;
    int tick = 0;
};

/// Cost-optimal A* on the occupancy grid: unit cardinal cost, sqrt(2)
/// diagonal cost, octile heuristic. Obstacles are inflated by `inflation`
/// Chebyshev cells and Unknown is untraversable; the start cell is exempt
/// from inflation. Expansion order is fixed by (f, h, row-major) so equal-cost
/// maps always yield the same path.
inline Path plan(const OccupancyGrid& grid, GridIndex start, GridIndex goal, int inflation) {
    if (!grid.in_bounds(start) || !grid.in_bounds(goal))
        throw InvalidEndpoint("plan: endpoint outside grid");
    if (grid.at(start) != CellState::Free) throw InvalidEndpoint("plan: start is not free");
    if (grid.at(goal) != CellState::Free) throw InvalidEndpoint("plan: goal is not free");

    const int h = grid.height();
    const int w = grid.width();
    const std::vector<std::uint8_t> inflated = inflate_obstacles(grid, inflation);
    auto traversable = [&](GridIndex i) {
        if (i == start) return true;
        return grid.at(i) == CellState::Free &&
               inflated[static_cast<std::size_t>(i.row) * w + i.col] == 0;
    };
    if (!traversable(goal)) throw NoPath("plan: goal inside inflation zone");

    auto octile = [&](GridIndex a) {
        const int dr = std::abs(a.row - goal.row);
        const int dc = std::abs(a.col - goal.col);
        const int lo = std::min(dr, dc);
        return lo * std::numbers::sqrt2 + (std::max(dr, dc) - lo);
    };

    const std::size_t cells = static_cast<std::size_t>(h) * w;
    std::vector<double> g(cells, std::numeric_limits<double>::infinity());
    std::vector<int> parent(cells, -1);
    std::vector<std::uint8_t> closed(cells, 0);
    auto flat = [w](GridIndex i) {
        return static_cast<std::size_t>(i.row) * w + i.col;
    };

    using Entry = std::tuple<double, double, int, int>;  // f, h, row, col
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    g[flat(start)] = 0.0;
    open.emplace(octile(start), octile(start), start.row, start.col);

    while (!open.empty()) {
        const auto [f, hh, row, col] = open.top();
        open.pop();
        const GridIndex cur{row, col};
        const std::size_t cur_flat = flat(cur);
        if (closed[cur_flat]) continue;
        closed[cur_flat] = 1;
        if (cur == goal) break;

        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const GridIndex next{row + dr, col + dc};
                if (!grid.in_bounds(next) || !traversable(next)) continue;
                const double step = (dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0;
                const double cand = g[cur_flat] + step;
                const std::size_t next_flat = flat(next);
                if (cand < g[next_flat]) {
                    g[next_flat] = cand;
                    parent[next_flat] = static_cast<int>(cur_flat);
                    open.emplace(cand + octile(next), octile(next), next.row, next.col);
                }
            }
        }
    }

    if (!std::isfinite(g[flat(goal)])) throw NoPath("plan: goal unreachable");

    Path path;
    for (int at = static_cast<int>(flat(goal)); at != -1; at = parent[static_cast<std::size_t>(at)]) {
        path.waypoints.push_back(GridIndex{at / w, at % w});
        if (path.waypoints.back() == start) break;
    }
    std::reverse(path.waypoints.begin(), path.waypoints.end());
    return path;
}

/// Dijkstra cost-to-reach field from `start` over the same traversability
/// rule as plan(); unreachable cells are +infinity. Used to rank frontier
/// targets without one A* call per candidate.
inline std::vector<double> distance_field(const OccupancyGrid& grid, GridIndex start,
                                          int inflation) {
    const int h = grid.height();
    const int w = grid.width();
    const std::vector<std::uint8_t> inflated = inflate_obstacles(grid, inflation);
    auto traversable = [&](GridIndex i) {
        if (i == start) return true;
        return grid.at(i) == CellState::Free &&
               inflated[static_cast<std::size_t>(i.row) * w + i.col] == 0;
    };

    std::vector<double> dist(static_cast<std::size_t>(h) * w,
                             std::numeric_limits<double>::infinity());
    using Entry = std::tuple<double, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[static_cast<std::size_t>(start.row) * w + start.col] = 0.0;
    open.emplace(0.0, start.row, start.col);
    while (!open.empty()) {
        const auto [d, row, col] = open.top();
        open.pop();
        const std::size_t at = static_cast<std::size_t>(row) * w + col;
        if (d > dist[at]) continue;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const GridIndex next{row + dr, col + dc};
                if (!grid.in_bounds(next) || !traversable(next)) continue;
                const double step = (dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0;
                const std::size_t next_flat = static_cast<std::size_t>(next.row) * w + next.col;
                if (d + step < dist[next_flat]) {
                    dist[next_flat] = d + step;
                    open.emplace(d + step, next.row, next.col);
                }
            }
        }
    }
    return dist;
}

/// Moves one waypoint along the path, pointing the heading along the motion
/// direction; on arrival at the final waypoint the heading snaps to
/// `goal_theta`. Throws PathBlocked when the next waypoint is Occupied in
/// the current grid (the caller replans).
inline RobotState advance(const RobotState& state, const Path& path, const OccupancyGrid& grid,
                          double goal_theta) {
    if (path.empty()) throw InvalidPose("advance: empty path");
    const GridIndex at = grid.world_to_grid(state.pose);

    // Locate the robot on the path, or pick the first adjacent waypoint to
    // step back onto it.
    std::size_t next_index = path.waypoints.size();
    for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
        if (path.waypoints[i] == at) {
            next_index = i + 1;
            break;
        }
    }
    if (next_index == path.waypoints.size()) {
        for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
            const int dr = std::abs(path.waypoints[i].row - at.row);
            const int dc = std::abs(path.waypoints[i].col - at.col);
            if (std::max(dr, dc) == 1) {
                next_index = i;
                break;
            }
        }
        if (next_index == path.waypoints.size())
            throw InvalidPose("advance: robot is not on or adjacent to the path");
    }

    if (next_index >= path.waypoints.size()) {
        // Already at the goal waypoint: only align the heading.
        RobotState done = state;
        done.pose.theta = normalize_angle(goal_theta);
        done.tick += 1;
        return done;
    }

    const GridIndex next = path.waypoints[next_index];
    if (grid.at(next) == CellState::Occupied) throw PathBlocked("advance: next waypoint occupied");

    double nx, ny;
    grid.grid_to_world(next, nx, ny);
    RobotState moved;
    moved.tick = state.tick + 1;
    moved.pose.x = nx;
    moved.pose.y = ny;
    if (next_index + 1 == path.waypoints.size()) {
        moved.pose.theta = normalize_angle(goal_theta);
    } else {
        moved.pose.theta = bearing(state.pose.x, state.pose.y, nx, ny);
    }
    return moved;
}

}  // namespace segue
