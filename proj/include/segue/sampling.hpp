#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "segue/core.hpp"
#include "segue/occupancy.hpp"
#include "segue/semantics.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Reachability

/// Free cells 8-connected to the source, with cells within `inflation`
/// Chebyshev distance of any Occupied cell carved out. The source itself is
/// exempt from inflation so a robot hugging a wall can still plan out.
struct ReachableSet {
    GridIndex source;
    std::vector<GridIndex> cells;          // sorted row-major
    std::vector<std::uint8_t> membership;  // H x W mask

    bool contains(GridIndex i, int width, int height) const {
        if (i.row < 0 || i.row >= height || i.col < 0 || i.col >= width) return false;
        return membership[static_cast<std::size_t>(i.row) * width + i.col] != 0;
    }
};

/// Marks every cell within `inflation` Chebyshev distance of an Occupied cell.
inline std::vector<std::uint8_t> inflate_obstacles(const OccupancyGrid& grid, int inflation) {
    const int h = grid.height();
    const int w = grid.width();
    std::vector<std::uint8_t> inflated(static_cast<std::size_t>(h) * w, 0);
    if (inflation <= 0) {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (grid.at({r, c}) == CellState::Occupied)
                    inflated[static_cast<std::size_t>(r) * w + c] = 1;
        return inflated;
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (grid.at({r, c}) != CellState::Occupied) continue;
            const int r_lo = std::max(0, r - inflation);
            const int r_hi = std::min(h - 1, r + inflation);
            const int c_lo = std::max(0, c - inflation);
            const int c_hi = std::min(w - 1, c + inflation);
            for (int rr = r_lo; rr <= r_hi; ++rr)
                for (int cc = c_lo; cc <= c_hi; ++cc)
                    inflated[static_cast<std::size_t>(rr) * w + cc] = 1;
        }
    }
    return inflated;
}

inline ReachableSet reachable_set(const OccupancyGrid& grid, const Pose& from, int inflation) {
    const GridIndex source = grid.world_to_grid(from);
    if (grid.at(source) != CellState::Free)
        throw InvalidPose("reachable_set: start cell is not free");

    const int h = grid.height();
    const int w = grid.width();
    const std::vector<std::uint8_t> inflated = inflate_obstacles(grid, inflation);

    ReachableSet result;
    result.source = source;
    result.membership.assign(static_cast<std::size_t>(h) * w, 0);

    auto traversable = [&](GridIndex i) {
        return grid.at(i) == CellState::Free &&
               inflated[static_cast<std::size_t>(i.row) * w + i.col] == 0;
    };

    std::deque<GridIndex> frontier;
    frontier.push_back(source);
    result.membership[static_cast<std::size_t>(source.row) * w + source.col] = 1;
    while (!frontier.empty()) {
        const GridIndex cur = frontier.front();
        frontier.pop_front();
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const GridIndex next{cur.row + dr, cur.col + dc};
                if (next.row < 0 || next.row >= h || next.col < 0 || next.col >= w) continue;
                std::uint8_t& seen = result.membership[static_cast<std::size_t>(next.row) * w + next.col];
                if (seen || !traversable(next)) continue;
                seen = 1;
                frontier.push_back(next);
            }
        }
    }

    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (result.membership[static_cast<std::size_t>(r) * w + c]) result.cells.push_back({r, c});
    return result;
}

// ---------------------------------------------------------------------------
// Samplers

struct ScoredPose {
    Pose pose;
    double score = 0.0;
};

struct SamplerConfig {
    int n_samples = 200;
    int n_iterations = 2;       // importance sampling only
    int gmm_components = 5;
    int em_iters = 10;
    double covariance_floor = 0.0;  // squared meters; 0 means (2 * resolution)^2
    std::vector<double> heading_set = default_headings();
    int max_rejections = 0;  // 0 means 50 * n_samples

    static std::vector<double> default_headings() {
        std::vector<double> h;
        for (int k = 0; k < 8; ++k) h.push_back(normalize_angle(k * kPi / 4.0));
        return h;
    }

    int rejection_budget() const { return max_rejections > 0 ? max_rejections : 50 * n_samples; }
    double floor_for(double resolution) const {
        return covariance_floor > 0.0 ? covariance_floor : (2.0 * resolution) * (2.0 * resolution);
    }
};

struct SampleBatch {
    std::vector<Pose> poses;
    bool exhausted = false;  // rejection budget hit before n_samples accepted
};

/// Rejection-samples positions uniformly over the grid rectangle, keeping
/// those whose cell is reachable; headings are drawn uniformly from the
/// heading set. Stops at n_samples accepted or after the rejection budget,
/// returning the partial batch with `exhausted` set.
inline SampleBatch uniform_sample(const ReachableSet& reachable, const OccupancyGrid& grid,
                                  const SamplerConfig& config, Rng& rng) {
    SampleBatch batch;
    const double x_lo = grid.origin_x();
    const double y_lo = grid.origin_y();
    const double x_hi = x_lo + grid.width() * grid.resolution();
    const double y_hi = y_lo + grid.height() * grid.resolution();

    int draws = 0;
    const int budget = config.rejection_budget();
    while (static_cast<int>(batch.poses.size()) < config.n_samples && draws < budget) {
        ++draws;
        const double x = rng.uniform(x_lo, x_hi);
        const double y = rng.uniform(y_lo, y_hi);
        const int col = static_cast<int>(std::floor((x - x_lo) / grid.resolution()));
        const int row = static_cast<int>(std::floor((y - y_lo) / grid.resolution()));
        if (!reachable.contains({row, col}, grid.width(), grid.height())) continue;
        const double heading = config.heading_set[rng.uniform_index(config.heading_set.size())];
        batch.poses.push_back(Pose{x, y, heading});
    }
    batch.exhausted = static_cast<int>(batch.poses.size()) < config.n_samples;
    return batch;
}

// ---------------------------------------------------------------------------
// Weighted Gaussian mixture

struct GaussianComponent {
    double weight = 0.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
    // Symmetric 2x2 covariance.
    double cov_xx = 0.0;
    double cov_xy = 0.0;
    double cov_yy = 0.0;
};

struct GaussianMixture {
    std::vector<GaussianComponent> components;
};

namespace detail {

/// Clamps the eigenvalues of a symmetric 2x2 matrix to at least `floor`.
inline void clamp_covariance(GaussianComponent& g, double floor) {
    const double tr = g.cov_xx + g.cov_yy;
    const double det_part = std::sqrt(std::max(
        0.0, 0.25 * (g.cov_xx - g.cov_yy) * (g.cov_xx - g.cov_yy) + g.cov_xy * g.cov_xy));
    double l1 = 0.5 * tr + det_part;
    double l2 = 0.5 * tr - det_part;
    if (l1 >= floor && l2 >= floor) return;

    // Eigenvector for l1.
    double vx, vy;
    if (std::abs(g.cov_xy) > 1e-300) {
        vx = l1 - g.cov_yy;
        vy = g.cov_xy;
    } else if (g.cov_xx >= g.cov_yy) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    const double norm = std::hypot(vx, vy);
    vx /= norm;
    vy /= norm;

    l1 = std::max(l1, floor);
    l2 = std::max(l2, floor);
    // Reconstruct l1 * v v' + l2 * (I - v v').
    g.cov_xx = l2 + (l1 - l2) * vx * vx;
    g.cov_xy = (l1 - l2) * vx * vy;
    g.cov_yy = l2 + (l1 - l2) * vy * vy;
}

inline double gaussian_density(const GaussianComponent& g, double x, double y) {
    const double det = g.cov_xx * g.cov_yy - g.cov_xy * g.cov_xy;
    const double dx = x - g.mean_x;
    const double dy = y - g.mean_y;
    const double quad = (g.cov_yy * dx * dx - 2.0 * g.cov_xy * dx * dy + g.cov_xx * dy * dy) / det;
    return std::exp(-0.5 * quad) / (kTwoPi * std::sqrt(det));
}

}  // namespace detail

inline double mixture_density(const GaussianMixture& gmm, double x, double y) {
    double p = 0.0;
    for (const GaussianComponent& g : gmm.components)
        p += g.weight * detail::gaussian_density(g, x, y);
    return p;
}

/// Weighted log-likelihood of sample positions under the mixture, with the
/// sample scores as normalized weights.
inline double weighted_log_likelihood(const GaussianMixture& gmm,
                                      const std::vector<ScoredPose>& samples) {
    double total_score = 0.0;
    for (const ScoredPose& s : samples) total_score += s.score;
    double ll = 0.0;
    for (const ScoredPose& s : samples) {
        const double p = mixture_density(gmm, s.pose.x, s.pose.y);
        ll += (s.score / total_score) * std::log(std::max(p, 1e-300));
    }
    return ll;
}

/// Weighted EM fit over sample positions, where each sample's weight is its
/// score. Initialization is a k-means++-style seeding driven by the weights;
/// covariance eigenvalues are clamped to `floor` after every M step. Runs a
/// fixed number of EM iterations. Throws DegenerateFit when the total score
/// is (numerically) zero. `ll_trace`, when given, receives the weighted
/// log-likelihood after initialization and after each EM iteration.
inline GaussianMixture fit_weighted_gmm(const std::vector<ScoredPose>& samples, int k,
                                        int em_iters, double floor, Rng& rng,
                                        std::vector<double>* ll_trace = nullptr) {
    const std::size_t n = samples.size();
    if (k <= 0 || n < static_cast<std::size_t>(k))
        throw DegenerateFit("fit_weighted_gmm: fewer samples than components");

    double total_score = 0.0;
    for (const ScoredPose& s : samples) total_score += s.score;
    if (!(total_score > 1e-12)) throw DegenerateFit("fit_weighted_gmm: total score is zero");

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = samples[i].score / total_score;

    // k-means++-style seeding: first center by weight, later centers by
    // weight times squared distance to the nearest chosen center.
    std::vector<std::size_t> centers;
    {
        std::vector<double> pick = w;
        auto draw_from = [&](const std::vector<double>& mass) {
            double total = 0.0;
            for (double m : mass) total += m;
            if (!(total > 0.0)) return rng.uniform_index(n);
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                u -= mass[i];
                if (u <= 0.0) return i;
            }
            return n - 1;
        };
        centers.push_back(draw_from(pick));
        while (static_cast<int>(centers.size()) < k) {
            std::vector<double> mass(n);
            for (std::size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c : centers) {
                    const double dx = samples[i].pose.x - samples[c].pose.x;
                    const double dy = samples[i].pose.y - samples[c].pose.y;
                    best = std::min(best, dx * dx + dy * dy);
                }
                mass[i] = w[i] * best;
            }
            centers.push_back(draw_from(mass));
        }
    }

    GaussianMixture gmm;
    gmm.components.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        GaussianComponent& g = gmm.components[static_cast<std::size_t>(j)];
        g.weight = 1.0 / k;
        g.mean_x = samples[centers[static_cast<std::size_t>(j)]].pose.x;
        g.mean_y = samples[centers[static_cast<std::size_t>(j)]].pose.y;
        g.cov_xx = floor;
        g.cov_xy = 0.0;
        g.cov_yy = floor;
    }
    if (ll_trace) ll_trace->push_back(weighted_log_likelihood(gmm, samples));

    std::vector<double> resp(n * static_cast<std::size_t>(k));
    for (int iter = 0; iter < em_iters; ++iter) {
        // E step
        for (std::size_t i = 0; i < n; ++i) {
            double norm = 0.0;
            for (int j = 0; j < k; ++j) {
                const GaussianComponent& g = gmm.components[static_cast<std::size_t>(j)];
                const double p =
                    g.weight * detail::gaussian_density(g, samples[i].pose.x, samples[i].pose.y);
                resp[i * k + j] = p;
                norm += p;
            }
            if (norm <= 0.0) {
                for (int j = 0; j < k; ++j) resp[i * k + j] = 1.0 / k;
            } else {
                for (int j = 0; j < k; ++j) resp[i * k + j] /= norm;
            }
        }
        // M step
        for (int j = 0; j < k; ++j) {
            GaussianComponent& g = gmm.components[static_cast<std::size_t>(j)];
            double mass = 0.0, mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = w[i] * resp[i * k + j];
                mass += r;
                mx += r * samples[i].pose.x;
                my += r * samples[i].pose.y;
            }
            if (mass <= 1e-12) {
                // Starved component: keep its mean, reset to a floored sphere.
                g.weight = 1e-12;
                g.cov_xx = floor;
                g.cov_xy = 0.0;
                g.cov_yy = floor;
                continue;
            }
            g.weight = mass;
            g.mean_x = mx / mass;
            g.mean_y = my / mass;
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = w[i] * resp[i * k + j];
                const double dx = samples[i].pose.x - g.mean_x;
                const double dy = samples[i].pose.y - g.mean_y;
                sxx += r * dx * dx;
                sxy += r * dx * dy;
                syy += r * dy * dy;
            }
            g.cov_xx = sxx / mass;
            g.cov_xy = sxy / mass;
            g.cov_yy = syy / mass;
            detail::clamp_covariance(g, floor);
        }
        double weight_norm = 0.0;
        for (const GaussianComponent& g : gmm.components) weight_norm += g.weight;
        for (GaussianComponent& g : gmm.components) g.weight /= weight_norm;

        if (ll_trace) ll_trace->push_back(weighted_log_likelihood(gmm, samples));
    }
    return gmm;
}

/// Draws one position from the mixture.
inline void sample_from_mixture(const GaussianMixture& gmm, Rng& rng, double& x, double& y) {
    double u = rng.uniform();
    std::size_t pick = gmm.components.size() - 1;
    for (std::size_t j = 0; j < gmm.components.size(); ++j) {
        u -= gmm.components[j].weight;
        if (u <= 0.0) {
            pick = j;
            break;
        }
    }
    const GaussianComponent& g = gmm.components[pick];
    // Cholesky of the 2x2 covariance.
    const double l11 = std::sqrt(g.cov_xx);
    const double l21 = g.cov_xy / l11;
    const double l22 = std::sqrt(std::max(g.cov_yy - l21 * l21, 0.0));
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    x = g.mean_x + l11 * z1;
    y = g.mean_y + l21 * z1 + l22 * z2;
}

// ---------------------------------------------------------------------------
// Selection

/// Highest-scoring candidate. Ties break toward the lowest octile-distance
/// estimate to the robot cell (when given), then toward list order.
inline ScoredPose select_best(const std::vector<ScoredPose>& candidates,
                              const OccupancyGrid* grid = nullptr,
                              std::optional<GridIndex> robot_cell = std::nullopt) {
    if (candidates.empty()) throw EmptyCandidates("select_best: no candidates");

    auto distance_estimate = [&](const Pose& p) {
        if (!grid || !robot_cell.has_value()) return 0.0;
        GridIndex cell;
        try {
            cell = grid->world_to_grid(p);
        } catch (const OutOfBounds&) {
            return std::numeric_limits<double>::infinity();
        }
        const int dr = std::abs(cell.row - robot_cell->row);
        const int dc = std::abs(cell.col - robot_cell->col);
        const int lo = std::min(dr, dc);
        return lo * std::numbers::sqrt2 + (std::max(dr, dc) - lo);
    };

    std::size_t best = 0;
    double best_dist = distance_estimate(candidates[0].pose);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].score > candidates[best].score) {
            best = i;
            best_dist = distance_estimate(candidates[i].pose);
        } else if (candidates[i].score == candidates[best].score) {
            const double d = distance_estimate(candidates[i].pose);
            if (d < best_dist) {
                best = i;
                best_dist = d;
            }
        }
    }
    return candidates[best];
}

// ---------------------------------------------------------------------------
// Importance sampling (particle-filter optimization)

/// Per-iteration record kept for diagnostics and tests.
struct ImportanceTrace {
    struct Round {
        std::vector<ScoredPose> scored;
        std::optional<GaussianMixture> fitted;  // mixture the round was drawn from
    };
    std::vector<Round> rounds;
    std::optional<GaussianMixture> final_fit;
};

/// Iterative importance sampler: round 0 is uniform; each later round draws
/// from a score-weighted GMM fit of the previous round, rejecting
/// unreachable positions (uniform fallback once the budget runs out). After
/// the final round the best (component mean, heading) pair under the scorer
/// wins; a degenerate final fit falls back to the best scored sample.
template <typename ScoreFn>
inline ScoredPose importance_sample(const OccupancyGrid& grid, const ReachableSet& reachable,
                                    const SamplerConfig& config, Rng& rng, ScoreFn&& score_poses,
                                    ImportanceTrace* trace = nullptr) {
    if (reachable.cells.empty()) throw EmptyCandidates("importance_sample: nothing reachable");
    const double floor = config.floor_for(grid.resolution());

    auto uniform_round = [&]() {
        SampleBatch batch = uniform_sample(reachable, grid, config, rng);
        return batch.poses;
    };
    auto uniform_cell_pose = [&]() {
        const GridIndex cell = reachable.cells[rng.uniform_index(reachable.cells.size())];
        double cx, cy;
        grid.grid_to_world(cell, cx, cy);
        const double res = grid.resolution();
        const double x = cx + (rng.uniform() - 0.5) * res;
        const double y = cy + (rng.uniform() - 0.5) * res;
        const double heading = config.heading_set[rng.uniform_index(config.heading_set.size())];
        return Pose{x, y, heading};
    };

    std::vector<Pose> poses = uniform_round();
    if (poses.empty()) throw EmptyCandidates("importance_sample: sampling exhausted");
    std::vector<ScoredPose> scored = score_poses(poses);
    if (trace) trace->rounds.push_back({scored, std::nullopt});

    for (int iter = 1; iter < config.n_iterations; ++iter) {
        std::optional<GaussianMixture> gmm;
        try {
            gmm = fit_weighted_gmm(scored, config.gmm_components, config.em_iters, floor, rng);
        } catch (const DegenerateFit&) {
            gmm.reset();
        }

        poses.clear();
        if (gmm.has_value()) {
            int draws = 0;
            const int budget = config.rejection_budget();
            while (static_cast<int>(poses.size()) < config.n_samples && draws < budget) {
                ++draws;
                double x, y;
                sample_from_mixture(*gmm, rng, x, y);
                const int col = static_cast<int>(std::floor((x - grid.origin_x()) / grid.resolution()));
                const int row = static_cast<int>(std::floor((y - grid.origin_y()) / grid.resolution()));
                if (!reachable.contains({row, col}, grid.width(), grid.height())) continue;
                const double heading =
                    config.heading_set[rng.uniform_index(config.heading_set.size())];
                poses.push_back(Pose{x, y, heading});
            }
        }
        while (static_cast<int>(poses.size()) < config.n_samples) poses.push_back(uniform_cell_pose());

        scored = score_poses(poses);
        if (trace) trace->rounds.push_back({scored, gmm});
    }

    // Final fit over the last scored round; rank component means.
    std::optional<GaussianMixture> final_fit;
    try {
        final_fit = fit_weighted_gmm(scored, config.gmm_components, config.em_iters, floor, rng);
    } catch (const DegenerateFit&) {
        final_fit.reset();
    }
    if (trace) trace->final_fit = final_fit;

    if (final_fit.has_value()) {
        std::vector<Pose> mean_poses;
        for (const GaussianComponent& g : final_fit->components) {
            const int col = static_cast<int>(std::floor((g.mean_x - grid.origin_x()) / grid.resolution()));
            const int row = static_cast<int>(std::floor((g.mean_y - grid.origin_y()) / grid.resolution()));
            if (!reachable.contains({row, col}, grid.width(), grid.height())) continue;
            for (double heading : config.heading_set)
                mean_poses.push_back(Pose{g.mean_x, g.mean_y, heading});
        }
        if (!mean_poses.empty()) {
            const std::vector<ScoredPose> mean_scored = score_poses(mean_poses);
            return select_best(mean_scored, &grid, reachable.source);
        }
    }
    return select_best(scored, &grid, reachable.source);
}

}  // namespace segue
