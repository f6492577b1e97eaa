#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "segue/core.hpp"
#include "segue/occupancy.hpp"

namespace segue {

using FeatureVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Classifier head

/// Linear softmax head over M classes: classify(x) = softmax(W x / T).
struct ClassifierHead {
    std::vector<std::vector<double>> weights;  // M rows of N components
    double temperature = 1.0;

    std::size_t num_classes() const { return weights.size(); }
    std::size_t feature_dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

/// Shannon entropy in nats, with 0*ln(0) = 0. The distribution must be
/// non-negative and sum to 1 within 1e-6.
inline double shannon_entropy(const std::vector<double>& dist) {
    double sum = 0.0;
    for (double p : dist) {
        if (p < 0.0) throw InvalidDistribution("shannon_entropy: negative component");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw InvalidDistribution("shannon_entropy: components do not sum to 1");
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

inline std::vector<double> classify(const ClassifierHead& head, const FeatureVector& x) {
    if (x.size() != head.feature_dim())
        throw DimensionMismatch("classify: feature dimension does not match head");
    const std::size_t m = head.num_classes();
    std::vector<double> logits(m);
    for (std::size_t k = 0; k < m; ++k) {
        double dot = 0.0;
        const std::vector<double>& row = head.weights[k];
        for (std::size_t j = 0; j < x.size(); ++j) dot += row[j] * x[j];
        logits[k] = dot / head.temperature;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double norm = 0.0;
    for (double& l : logits) {
        l = std::exp(l - peak);
        norm += l;
    }
    for (double& l : logits) l /= norm;
    return logits;
}

/// Entropy of `dist` normalized by the maximum entropy ln(M), clamped to
/// [0, 1]. Exactly-uniform distributions score exactly 1.
inline double normalized_entropy(const std::vector<double>& dist) {
    const std::size_t m = dist.size();
    if (m < 2) throw InvalidDistribution("normalized_entropy: need at least 2 classes");
    const auto [lo, hi] = std::minmax_element(dist.begin(), dist.end());
    if (*lo == *hi) return 1.0;
    const double s = shannon_entropy(dist) / std::log(static_cast<double>(m));
    return std::clamp(s, 0.0, 1.0);
}

/// Feature quality score in [0, 1]: prediction entropy of the classified
/// feature, normalized by the maximum entropy.
inline double feature_score(const FeatureVector& x, const ClassifierHead& head) {
    return normalized_entropy(classify(head, x));
}

// ---------------------------------------------------------------------------
// Semantic map

struct SemanticCell {
    std::optional<FeatureVector> feature;
    int obs_count = 0;
    double score = 1.0;  // featureless cells are maximally uncertain
    std::optional<double> prev_score;
    bool converged = false;
};

class SemanticMap {
public:
    SemanticMap(int width, int height, int feature_dim)
        : width_(width), height_(height), feature_dim_(feature_dim),
          cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        if (width <= 0 || height <= 0 || feature_dim <= 0)
            throw InvalidDims("SemanticMap: non-positive dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int feature_dim() const { return feature_dim_; }

    bool in_bounds(GridIndex i) const {
        return i.row >= 0 && i.row < height_ && i.col >= 0 && i.col < width_;
    }

    const SemanticCell& at(GridIndex i) const { return cells_[index_of(i)]; }
    SemanticCell& at(GridIndex i) { return cells_[index_of(i)]; }

    const std::vector<SemanticCell>& cells() const { return cells_; }

private:
    std::size_t index_of(GridIndex i) const {
        if (!in_bounds(i)) throw OutOfBounds("SemanticMap: index outside grid");
        return static_cast<std::size_t>(i.row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(i.col);
    }

    int width_;
    int height_;
    int feature_dim_;
    std::vector<SemanticCell> cells_;
};

/// Ratio convergence test on a cell whose score was just refreshed: with
/// s0 = previous score and s1 = new score, the cell converges when
/// s0 / max(s1, 1e-9) < ratio_threshold. Convergence is sticky.
inline void update_convergence(SemanticCell& cell, double ratio_threshold) {
    if (cell.converged || !cell.prev_score.has_value()) return;
    const double ratio = *cell.prev_score / std::max(cell.score, 1e-9);
    if (ratio < ratio_threshold) cell.converged = true;
}

/// Folds one observation into a cell: the stored feature becomes the running
/// mean over observations, the score is refreshed, and the convergence test
/// runs once a previous score exists. Converged cells still fuse.
inline void fuse_observation(SemanticMap& map, GridIndex cell_index, const FeatureVector& x,
                             const ClassifierHead& head, double ratio_threshold) {
    if (!map.in_bounds(cell_index)) throw OutOfBounds("fuse_observation: cell outside map");
    if (static_cast<int>(x.size()) != map.feature_dim())
        throw DimensionMismatch("fuse_observation: feature dimension does not match map");

    SemanticCell& cell = map.at(cell_index);
    if (!cell.feature.has_value()) {
        cell.feature = x;
        cell.obs_count = 1;
        cell.score = feature_score(x, head);
        return;
    }

    FeatureVector& f = *cell.feature;
    const double n = static_cast<double>(cell.obs_count);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = (n * f[j] + x[j]) / (n + 1.0);
    cell.obs_count += 1;
    cell.prev_score = cell.score;
    cell.score = feature_score(f, head);
    update_convergence(cell, ratio_threshold);
}

// ---------------------------------------------------------------------------
// Pose scoring

/// Per-cell scoring rule used when ranking views.
enum class ScorePolicy {
    Semantic,     // cell score, converged cells excluded
    CountUnseen,  // 1 for featureless cells, 0 otherwise, no exclusion
};

struct CameraModel {
    double fov = kPi / 2.0;
    double range = 4.0;
};

/// Mean score of the non-excluded cells visible from the pose. Featureless
/// cells contribute 1 under the semantic policy; a pose whose contributing
/// set is empty scores 0. Throws InvalidPose when the pose cell is Occupied.
inline double pose_score(const Pose& pose, const SemanticMap& map, const OccupancyGrid& grid,
                         const CameraModel& camera, ScorePolicy policy = ScorePolicy::Semantic) {
    const GridIndex pose_cell = grid.world_to_grid(pose);
    if (grid.at(pose_cell) == CellState::Occupied)
        throw InvalidPose("pose_score: pose cell is occupied");

    const ViewMask mask = visibility_mask(grid, pose, camera.fov, camera.range);
    double total = 0.0;
    std::size_t contributing = 0;
    for (const GridIndex& idx : mask.visible) {
        const SemanticCell& cell = map.at(idx);
        if (policy == ScorePolicy::Semantic) {
            if (cell.converged) continue;
            total += cell.feature.has_value() ? cell.score : 1.0;
        } else {
            total += cell.feature.has_value() ? 0.0 : 1.0;
        }
        ++contributing;
    }
    if (contributing == 0) return 0.0;
    return total / static_cast<double>(contributing);
}

}  // namespace segue
