#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "segue/core.hpp"
#include "segue/metrics.hpp"
#include "segue/occupancy.hpp"
#include "segue/parallel.hpp"
#include "segue/planner.hpp"
#include "segue/sampling.hpp"
#include "segue/semantics.hpp"
#include "segue/sim.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Configuration

enum class Method { SegueUs, SegueIs, NoScoreUs, NoScoreIs, Frontier };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::SegueUs: return "segue_us";
        case Method::SegueIs: return "segue_is";
        case Method::NoScoreUs: return "noscore_us";
        case Method::NoScoreIs: return "noscore_is";
        case Method::Frontier: return "frontier";
    }
    return "?";
}

inline Method method_from_string(const std::string& name) {
    if (name == "segue_us") return Method::SegueUs;
    if (name == "segue_is") return Method::SegueIs;
    if (name == "noscore_us") return Method::NoScoreUs;
    if (name == "noscore_is") return Method::NoScoreIs;
    if (name == "frontier") return Method::Frontier;
    throw ConfigError("unknown method '" + name + "'");
}

struct ExplorationConfig {
    Method method = Method::SegueUs;
    double tau = 0.05;             // terminate when the best pose score drops below
    double ratio_threshold = 1.1;  // per-cell convergence ratio
    SamplerConfig sampler;
    SensorSpec sensor;
    int max_ticks = 2000;
    std::uint64_t seed = 1;
    int inflation = 1;     // cells, shared by sampler and planner
    bool dwell = true;     // full heading sweep on arrival
    int feature_dim = 64;  // N
    double temperature = 0.25;
};

inline void validate(const ExplorationConfig& config) {
    if (!(config.tau > 0.0 && config.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (!(config.ratio_threshold > 1.0)) throw ConfigError("ratio_threshold must exceed 1");
    if (config.max_ticks <= 0) throw ConfigError("max_ticks must be positive");
    if (config.sampler.n_samples <= 0) throw ConfigError("n_samples must be positive");
    if (config.sampler.n_iterations <= 0) throw ConfigError("n_iterations must be positive");
    if (config.sampler.heading_set.empty()) throw ConfigError("heading_set must not be empty");
    if (config.sampler.n_samples < config.sampler.gmm_components)
        throw ConfigError("n_samples must be at least the component count");
    if (config.inflation < 0) throw ConfigError("inflation must be non-negative");
    if (config.feature_dim <= 0 || config.temperature <= 0.0)
        throw ConfigError("feature_dim and temperature must be positive");
    validate(config.sensor);
}

// ---------------------------------------------------------------------------
// Baseline scoring and frontiers

/// No-Score baseline cell metric: 1 for cells with no semantic feature, 0
/// otherwise.
inline int noscore_cell_score(const OccupancyGrid& occupancy, const SemanticMap& semantic,
                              GridIndex cell) {
    if (!occupancy.in_bounds(cell)) throw OutOfBounds("noscore_cell_score: cell outside grid");
    return semantic.at(cell).feature.has_value() ? 0 : 1;
}

struct FrontierCluster {
    std::vector<GridIndex> cells;  // row-major sorted
    GridIndex centroid;
};

/// Frontier cells (Free cells 8-adjacent to Unknown) grouped into
/// 8-connected clusters; clusters smaller than 3 cells are discarded.
inline std::vector<FrontierCluster> detect_frontiers(const OccupancyGrid& grid) {
    const int h = grid.height();
    const int w = grid.width();
    auto is_frontier = [&](GridIndex i) {
        if (grid.at(i) != CellState::Free) return false;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const GridIndex n{i.row + dr, i.col + dc};
                if (grid.in_bounds(n) && grid.at(n) == CellState::Unknown) return true;
            }
        return false;
    };

    std::vector<std::uint8_t> seen(static_cast<std::size_t>(h) * w, 0);
    std::vector<FrontierCluster> clusters;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const GridIndex origin{r, c};
            const std::size_t origin_flat = static_cast<std::size_t>(r) * w + c;
            if (seen[origin_flat] || !is_frontier(origin)) continue;

            FrontierCluster cluster;
            std::vector<GridIndex> stack{origin};
            seen[origin_flat] = 1;
            while (!stack.empty()) {
                const GridIndex cur = stack.back();
                stack.pop_back();
                cluster.cells.push_back(cur);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        const GridIndex n{cur.row + dr, cur.col + dc};
                        if (!grid.in_bounds(n)) continue;
                        std::uint8_t& mark = seen[static_cast<std::size_t>(n.row) * w + n.col];
                        if (mark || !is_frontier(n)) continue;
                        mark = 1;
                        stack.push_back(n);
                    }
                }
            }
            if (cluster.cells.size() < 3) continue;
            std::sort(cluster.cells.begin(), cluster.cells.end());
            double mr = 0.0, mc = 0.0;
            for (const GridIndex& i : cluster.cells) {
                mr += i.row;
                mc += i.col;
            }
            cluster.centroid = GridIndex{
                static_cast<int>(std::llround(mr / static_cast<double>(cluster.cells.size()))),
                static_cast<int>(std::llround(mc / static_cast<double>(cluster.cells.size())))};
            clusters.push_back(std::move(cluster));
        }
    }
    return clusters;
}

/// Frontier baseline target: the reachable cluster centroid with the lowest
/// path cost, falling back to the nearest reachable frontier cell of any
/// cluster. Empty when exploration is done.
inline std::optional<GridIndex> frontier_step(const OccupancyGrid& grid, const RobotState& state,
                                              int inflation) {
    const std::vector<FrontierCluster> clusters = detect_frontiers(grid);
    if (clusters.empty()) return std::nullopt;

    const GridIndex robot = grid.world_to_grid(state.pose);
    const std::vector<double> field = distance_field(grid, robot, inflation);
    auto cost_of = [&](GridIndex i) {
        return field[static_cast<std::size_t>(i.row) * grid.width() + i.col];
    };

    std::optional<GridIndex> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const FrontierCluster& cluster : clusters) {
        if (!grid.in_bounds(cluster.centroid)) continue;
        const double cost = cost_of(cluster.centroid);
        if (cost < best_cost) {
            best_cost = cost;
            best = cluster.centroid;
        }
    }
    if (best.has_value()) return best;

    for (const FrontierCluster& cluster : clusters) {
        for (const GridIndex& cell : cluster.cells) {
            const double cost = cost_of(cell);
            if (cost < best_cost) {
                best_cost = cost;
                best = cell;
            }
        }
    }
    return best;  // nullopt when nothing is reachable
}

// ---------------------------------------------------------------------------
// Run records

enum class TerminationReason { ScoreBelowTau, MaxTicks, NoCandidates };

inline std::string to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::ScoreBelowTau: return "score_below_tau";
        case TerminationReason::MaxTicks: return "max_ticks";
        case TerminationReason::NoCandidates: return "no_candidates";
    }
    return "?";
}

struct Event {
    int tick = 0;
    std::string kind;
    std::string detail;
};

struct TickMetrics {
    int tick = 0;
    double coverage = 0.0;
    double average_entropy = 0.0;
    double best_pose_score = 0.0;
};

struct RunResult {
    std::vector<RobotState> trajectory;
    std::vector<TickMetrics> per_tick;
    OccupancyGrid occupancy;
    SemanticMap semantic;
    ClassifierHead head;
    TerminationReason reason = TerminationReason::MaxTicks;
    double final_best_score = 0.0;
    std::vector<Event> events;
    double wall_time_seconds = 0.0;  // informational; never serialized into artifacts
};

// ---------------------------------------------------------------------------
// The exploration loop

inline RunResult run(const Environment& env, const ExplorationConfig& config) {
    validate(config);
    const auto t_start = std::chrono::steady_clock::now();

    Rng rng(config.seed);
    const PrototypeBank bank =
        synthesize_prototypes(env.num_classes(), config.feature_dim, config.seed);
    const ClassifierHead head = ground_truth_classifier(bank, config.temperature);
    const CameraModel camera = config.sensor.camera();
    const ScorePolicy policy =
        (config.method == Method::NoScoreUs || config.method == Method::NoScoreIs)
            ? ScorePolicy::CountUnseen
            : ScorePolicy::Semantic;

    OccupancyGrid grid(env.width(), env.height(), env.resolution());
    SemanticMap smap(env.width(), env.height(), config.feature_dim);
    RobotState state{env.start_pose(), 0};

    RunResult result{{}, {}, grid, smap, head, TerminationReason::MaxTicks, 0.0, {}, 0.0};
    double last_best_score = 0.0;

    auto log = [&](const std::string& kind, const std::string& detail = "") {
        result.events.push_back(Event{state.tick, kind, detail});
    };
    auto sense_here = [&]() {
        const RangeScan scan = sense_lidar(env, state.pose, config.sensor);
        update_occupancy(grid, state.pose, scan);
        log("occupancy_update");
        const std::vector<CameraObservation> frame =
            sense_camera(env, state.pose, config.sensor, bank, rng);
        for (const CameraObservation& obs : frame)
            fuse_observation(smap, obs.cell, obs.feature, head, config.ratio_threshold);
        log("semantic_update", std::to_string(frame.size()) + " cells");
    };
    auto record_tick = [&]() {
        result.trajectory.push_back(state);
        result.per_tick.push_back(TickMetrics{state.tick, coverage(grid, smap),
                                              average_entropy(grid, smap, head),
                                              last_best_score});
    };
    auto score_poses = [&](const std::vector<Pose>& poses) {
        std::vector<ScoredPose> scored(poses.size());
        parallel_for(poses.size(), [&](std::size_t i) {
            double s = 0.0;
            try {
                s = pose_score(poses[i], smap, grid, camera, policy);
            } catch (const Error&) {
                s = 0.0;  // off-map or occupied candidate offers nothing
            }
            scored[i] = ScoredPose{poses[i], s};
        });
        return scored;
    };
    auto out_of_ticks = [&]() { return state.tick >= config.max_ticks; };

    // One tick spent rotating in place to `theta`, sensing afterwards.
    auto rotate_and_sense = [&](double theta) {
        state.pose.theta = normalize_angle(theta);
        state.tick += 1;
        sense_here();
        record_tick();
    };
    // The frontier baseline navigates without viewpoint semantics, so it
    // never sweeps; the view-based methods sweep on arrival.
    const bool dwell_enabled = config.dwell && config.method != Method::Frontier;
    auto dwell_sweep = [&]() {
        if (!dwell_enabled) return;
        log("dwell");
        for (double theta : config.sampler.heading_set) {
            if (out_of_ticks()) return;
            rotate_and_sense(theta);
        }
    };

    // Initial sensing at the start pose.
    sense_here();
    record_tick();
    dwell_sweep();

    std::optional<TerminationReason> reason;
    int stalled_rounds = 0;
    while (!reason.has_value()) {
        if (out_of_ticks()) {
            reason = TerminationReason::MaxTicks;
            break;
        }

        // --- Candidate selection -----------------------------------------
        const GridIndex robot_cell = grid.world_to_grid(state.pose);
        std::optional<GridIndex> goal_cell;
        double goal_theta = state.pose.theta;

        log("sample_round", to_string(config.method));
        if (config.method == Method::Frontier) {
            const std::optional<GridIndex> target = frontier_step(grid, state, config.inflation);
            if (!target.has_value()) {
                reason = TerminationReason::NoCandidates;
                break;
            }
            goal_cell = target;
            double gx, gy;
            grid.grid_to_world(*target, gx, gy);
            goal_theta = bearing(state.pose.x, state.pose.y, gx, gy);
            last_best_score = 0.0;
        } else {
            ReachableSet reachable;
            try {
                reachable = reachable_set(grid, state.pose, config.inflation);
            } catch (const InvalidPose&) {
                reason = TerminationReason::NoCandidates;
                break;
            }

            std::optional<ScoredPose> best;
            const bool importance =
                config.method == Method::SegueIs || config.method == Method::NoScoreIs;
            try {
                if (importance) {
                    best = importance_sample(grid, reachable, config.sampler, rng, score_poses);
                } else {
                    const SampleBatch batch = uniform_sample(reachable, grid, config.sampler, rng);
                    if (batch.poses.empty()) throw EmptyCandidates("no accepted samples");
                    best = select_best(score_poses(batch.poses), &grid, robot_cell);
                }
            } catch (const EmptyCandidates&) {
                reason = TerminationReason::NoCandidates;
                break;
            }

            last_best_score = best->score;
            log("select", "score " + format_double(best->score));
            if (best->score < config.tau) {
                reason = TerminationReason::ScoreBelowTau;
                break;
            }
            goal_cell = grid.world_to_grid(best->pose);
            goal_theta = best->pose.theta;
        }

        // --- Navigation with sensing every tick ---------------------------
        Path path;
        try {
            path = plan(grid, robot_cell, *goal_cell, config.inflation);
            log("plan", std::to_string(path.waypoints.size()) + " waypoints");
        } catch (const Error&) {
            if (++stalled_rounds > 100) {
                reason = TerminationReason::NoCandidates;
                break;
            }
            continue;  // candidate became unplannable; resample
        }
        stalled_rounds = 0;

        bool arrived = true;
        while (grid.world_to_grid(state.pose) != *goal_cell) {
            if (out_of_ticks()) {
                reason = TerminationReason::MaxTicks;
                break;
            }
            try {
                const RobotState next = advance(state, path, grid, goal_theta);
                state = next;
            } catch (const PathBlocked&) {
                log("replan");
                try {
                    path = plan(grid, grid.world_to_grid(state.pose), *goal_cell,
                                config.inflation);
                    continue;
                } catch (const Error&) {
                    arrived = false;
                    break;  // goal lost; next sampling round
                }
            }
            sense_here();
            record_tick();
        }
        if (reason.has_value()) break;

        if (arrived) {
            if (dwell_enabled) {
                dwell_sweep();
            } else if (grid.world_to_grid(state.pose) == *goal_cell && path.waypoints.size() <= 1) {
                // Goal was the current cell: burn one tick so the loop always
                // makes progress.
                rotate_and_sense(goal_theta);
            }
        }
    }

    result.reason = *reason;
    result.final_best_score = last_best_score;
    log("terminate", to_string(*reason));
    result.occupancy = grid;
    result.semantic = smap;
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace segue
