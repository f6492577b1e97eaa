#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "segue/core.hpp"
#include "segue/occupancy.hpp"
#include "segue/semantics.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Ground-truth world

/// Ground-truth environment driving both sensors. The boundary ring is fully
/// obstacle, so the world is closed and every lidar beam terminates.
class Environment {
public:
    Environment(int width, int height, double resolution, int num_classes, Pose start)
        : width_(width), height_(height), resolution_(resolution), num_classes_(num_classes),
          start_(start),
          obstacle_(static_cast<std::size_t>(width) * height, 0),
          class_id_(static_cast<std::size_t>(width) * height, 0),
          ambiguity_(static_cast<std::size_t>(width) * height, 0.0),
          truth_(width, height, resolution) {
        if (width < 3 || height < 3) throw InvalidDims("Environment: world too small");
        if (resolution <= 0.0) throw InvalidDims("Environment: non-positive resolution");
        if (num_classes < 2) throw InvalidDims("Environment: need at least 2 classes");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    int num_classes() const { return num_classes_; }
    const Pose& start_pose() const { return start_; }

    bool in_bounds(GridIndex i) const { return truth_.in_bounds(i); }

    bool obstacle_at(GridIndex i) const { return obstacle_[truth_.index_of(i)] != 0; }
    int class_at(GridIndex i) const { return class_id_[truth_.index_of(i)]; }
    double ambiguity_at(GridIndex i) const { return ambiguity_[truth_.index_of(i)]; }

    void set_obstacle(GridIndex i, bool v) { obstacle_[truth_.index_of(i)] = v ? 1 : 0; }
    void set_class(GridIndex i, int c) {
        if (c < 0 || c >= num_classes_) throw InvalidDims("Environment: class id out of range");
        class_id_[truth_.index_of(i)] = c;
    }
    void set_ambiguity(GridIndex i, double a) {
        if (a < 0.0 || a > 1.0) throw InvalidDims("Environment: ambiguity outside [0, 1]");
        ambiguity_[truth_.index_of(i)] = a;
    }

    /// Rebuilds the cached occupancy view and checks the world invariants.
    /// Call once after authoring the cells.
    void finalize() {
        for (int r = 0; r < height_; ++r) {
            for (int c = 0; c < width_; ++c) {
                const GridIndex i{r, c};
                const bool border = r == 0 || r == height_ - 1 || c == 0 || c == width_ - 1;
                if (border && !obstacle_at(i))
                    throw InvalidDims("Environment: boundary ring must be fully obstacle");
                truth_.set(i, obstacle_at(i) ? CellState::Occupied : CellState::Free);
            }
        }
        const GridIndex start_cell = truth_.world_to_grid(start_);
        if (obstacle_at(start_cell)) throw InvalidPose("Environment: start pose inside obstacle");
    }

    /// Fully-known occupancy grid of the true obstacle mask.
    const OccupancyGrid& truth_grid() const { return truth_; }

private:
    int width_;
    int height_;
    double resolution_;
    int num_classes_;
    Pose start_;
    std::vector<std::uint8_t> obstacle_;
    std::vector<int> class_id_;
    std::vector<double> ambiguity_;
    OccupancyGrid truth_;
};

// ---------------------------------------------------------------------------
// Sensors

struct SensorSpec {
    double camera_fov = kPi / 2.0;
    double camera_range = 4.0;   // meters
    double lidar_range = 12.0;   // meters; must exceed camera_range
    int lidar_beams = 360;
    double noise_sigma0 = 0.05;  // feature noise at zero distance
    double noise_kappa = 0.3;    // feature noise growth per meter

    CameraModel camera() const { return CameraModel{camera_fov, camera_range}; }
};

inline void validate(const SensorSpec& spec) {
    if (spec.camera_fov <= 0.0 || spec.camera_fov > kTwoPi)
        throw ConfigError("SensorSpec: camera_fov outside (0, 2pi]");
    if (spec.camera_range <= 0.0 || spec.lidar_range <= 0.0 || spec.lidar_beams <= 0)
        throw ConfigError("SensorSpec: ranges and beam count must be positive");
    if (spec.lidar_range <= spec.camera_range)
        throw ConfigError("SensorSpec: lidar_range must exceed camera_range");
    if (spec.noise_sigma0 < 0.0 || spec.noise_kappa < 0.0)
        throw ConfigError("SensorSpec: negative noise parameters");
}

// ---------------------------------------------------------------------------
// Synthetic class prototypes

/// M unit-norm, mutually orthogonal feature prototypes in R^N.
struct PrototypeBank {
    std::vector<FeatureVector> prototypes;
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return prototypes.size(); }
    std::size_t feature_dim() const { return prototypes.empty() ? 0 : prototypes.front().size(); }
};

/// Seeded random unit vectors, Gram-Schmidt orthogonalized and renormalized.
inline PrototypeBank synthesize_prototypes(int num_classes, int feature_dim, std::uint64_t seed) {
    if (num_classes < 2 || feature_dim < num_classes)
        throw InvalidDims("synthesize_prototypes: need feature_dim >= num_classes >= 2");

    Rng rng(seed);
    PrototypeBank bank;
    bank.seed = seed;
    bank.prototypes.reserve(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        FeatureVector v(static_cast<std::size_t>(feature_dim));
        for (double& comp : v) comp = rng.normal();
        for (const FeatureVector& u : bank.prototypes) {
            double dot = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * u[j];
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * u[j];
        }
        double norm = 0.0;
        for (double comp : v) norm += comp * comp;
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw InvalidDims("synthesize_prototypes: degenerate draw");
        for (double& comp : v) comp /= norm;
        bank.prototypes.push_back(std::move(v));
    }
    return bank;
}

/// The scoring head for the synthetic world: prototype matrix as weights.
inline ClassifierHead ground_truth_classifier(const PrototypeBank& bank, double temperature) {
    ClassifierHead head;
    head.weights = bank.prototypes;
    head.temperature = temperature;
    return head;
}

// ---------------------------------------------------------------------------
// Range scanner

namespace detail {

/// Grid traversal along a ray from `p` with unit direction `d`. Returns the
/// entry and exit distances of the first obstacle cell within `max_range`,
/// or no value on a miss. Exact corner crossings step diagonally, so rays
/// slip through diagonal gaps rather than registering zero-length hits.
inline std::optional<std::pair<double, double>> first_obstacle_hit(
    const Environment& env, double px, double py, double dx, double dy, double max_range) {
    const double res = env.resolution();
    const OccupancyGrid& truth = env.truth_grid();
    GridIndex cell = truth.world_to_grid(px, py);

    const int step_c = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
    const int step_r = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    const double t_delta_c = step_c != 0 ? res / std::abs(dx) : inf;
    const double t_delta_r = step_r != 0 ? res / std::abs(dy) : inf;

    auto boundary_c = [&](int col) { return truth.origin_x() + col * res; };
    auto boundary_r = [&](int row) { return truth.origin_y() + row * res; };
    double t_max_c = step_c > 0   ? (boundary_c(cell.col + 1) - px) / dx
                     : step_c < 0 ? (boundary_c(cell.col) - px) / dx
                                  : inf;
    double t_max_r = step_r > 0   ? (boundary_r(cell.row + 1) - py) / dy
                     : step_r < 0 ? (boundary_r(cell.row) - py) / dy
                                  : inf;

    // Crossings closer than this are corner ties; sin/cos rounding keeps
    // exact diagonals from comparing equal.
    const double tie_tol = 1e-9 * res;
    while (true) {
        double entry;
        if (std::abs(t_max_c - t_max_r) <= tie_tol) {
            entry = t_max_c;
            t_max_c += t_delta_c;
            t_max_r += t_delta_r;
            cell.col += step_c;
            cell.row += step_r;
        } else if (t_max_c < t_max_r) {
            entry = t_max_c;
            t_max_c += t_delta_c;
            cell.col += step_c;
        } else {
            entry = t_max_r;
            t_max_r += t_delta_r;
            cell.row += step_r;
        }
        if (entry >= max_range) return std::nullopt;
        if (!truth.in_bounds(cell)) return std::nullopt;
        if (env.obstacle_at(cell)) {
            const double exit = std::min(t_max_c, t_max_r);
            if (exit - entry <= tie_tol) continue;  // corner graze, no solid hit
            return std::make_pair(entry, exit);
        }
    }
}

}  // namespace detail

/// Noise-free 360-degree range scan against the ground truth. Hit distances
/// point at the interior of the struck cell (entry plus half the chord), so
/// occupancy updates recover the cell exactly.
inline RangeScan sense_lidar(const Environment& env, const Pose& pose, const SensorSpec& spec) {
    GridIndex pose_cell;
    try {
        pose_cell = env.truth_grid().world_to_grid(pose);
    } catch (const OutOfBounds&) {
        throw InvalidPose("sense_lidar: pose outside world");
    }
    if (env.obstacle_at(pose_cell)) throw InvalidPose("sense_lidar: pose inside obstacle");

    RangeScan scan;
    scan.max_range = spec.lidar_range;
    scan.beams.reserve(static_cast<std::size_t>(spec.lidar_beams));
    for (int j = 0; j < spec.lidar_beams; ++j) {
        const double bearing = normalize_angle(kTwoPi * j / spec.lidar_beams);
        const double dx = std::cos(bearing);
        const double dy = std::sin(bearing);
        const auto hit = detail::first_obstacle_hit(env, pose.x, pose.y, dx, dy, spec.lidar_range);
        RangeScan::Beam beam;
        beam.bearing = bearing;
        if (hit.has_value()) {
            beam.distance = std::min(hit->first + 0.5 * (hit->second - hit->first),
                                     spec.lidar_range);
            beam.hit = true;
        } else {
            beam.distance = spec.lidar_range;
            beam.hit = false;
        }
        scan.beams.push_back(beam);
    }
    return scan;
}

/// One semantic camera frame: a feature observation for every ground-truth
/// visible cell in range and field of view.
struct CameraObservation {
    GridIndex cell;
    FeatureVector feature;
};

/// Per-cell feature = unit-normalized blend of the cell's class prototype
/// with the cyclically-next one (blend weight = the cell's ambiguity), plus
/// isotropic Gaussian noise with sigma = sigma0 + kappa * distance.
inline std::vector<CameraObservation> sense_camera(const Environment& env, const Pose& pose,
                                                   const SensorSpec& spec,
                                                   const PrototypeBank& bank, Rng& rng) {
    GridIndex pose_cell;
    try {
        pose_cell = env.truth_grid().world_to_grid(pose);
    } catch (const OutOfBounds&) {
        throw InvalidPose("sense_camera: pose outside world");
    }
    if (env.obstacle_at(pose_cell)) throw InvalidPose("sense_camera: pose inside obstacle");

    const ViewMask mask =
        visibility_mask(env.truth_grid(), pose, spec.camera_fov, spec.camera_range);
    const int m = static_cast<int>(bank.num_classes());
    const std::size_t n = bank.feature_dim();

    std::vector<CameraObservation> observations;
    observations.reserve(mask.visible.size());
    for (const GridIndex& cell : mask.visible) {
        const int k = env.class_at(cell);
        const int alt = (k + 1) % m;
        const double a = env.ambiguity_at(cell);

        FeatureVector f(n);
        double norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            f[j] = (1.0 - a) * bank.prototypes[static_cast<std::size_t>(k)][j] +
                   a * bank.prototypes[static_cast<std::size_t>(alt)][j];
            norm += f[j] * f[j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < n; ++j) f[j] /= norm;

        double cx, cy;
        env.truth_grid().grid_to_world(cell, cx, cy);
        const double dist = std::hypot(cx - pose.x, cy - pose.y);
        const double sigma = spec.noise_sigma0 + spec.noise_kappa * dist;
        for (std::size_t j = 0; j < n; ++j) f[j] += sigma * rng.normal();

        observations.push_back(CameraObservation{cell, std::move(f)});
    }
    return observations;
}

}  // namespace segue
