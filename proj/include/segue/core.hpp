#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace segue {

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfBounds : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct InvalidDistribution : Error {
    using Error::Error;
};
struct InvalidPose : Error {
    using Error::Error;
};
struct InvalidDims : Error {
    using Error::Error;
};
struct InvalidEndpoint : Error {
    using Error::Error;
};
struct NoPath : Error {
    using Error::Error;
};
struct PathBlocked : Error {
    using Error::Error;
};
struct EmptyCandidates : Error {
    using Error::Error;
};
struct DegenerateFit : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Basic geometry

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Value of a base-36 digit character, or -1 when `ch` is not one.
inline int class_digit(char ch) {
    if (ch >= '0' && ch <= '9') return ch - '0';
    if (ch >= 'a' && ch <= 'z') return ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'Z') return ch - 'A' + 10;
    return -1;
}

/// Wraps an angle into [-pi, pi).
inline double normalize_angle(double theta) {
    double t = std::fmod(theta + kPi, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t - kPi;
}

/// Integer cell coordinate (row, col), row-major ordering.
struct GridIndex {
    int row = 0;
    int col = 0;

    friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

/// Planar pose: position in meters, heading in [-pi, pi).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

inline Pose make_pose(double x, double y, double theta) {
    return Pose{x, y, normalize_angle(theta)};
}

/// Bearing of the vector a -> b, in [-pi, pi).
inline double bearing(double ax, double ay, double bx, double by) {
    return normalize_angle(std::atan2(by - ay, bx - ax));
}

// ---------------------------------------------------------------------------
// Seeded random generator
//
// All stochastic operations draw through this wrapper so a fixed seed yields
// one reproducible stream. The uniform/normal transforms are written out
// instead of using std::*_distribution, whose output is not pinned by the
// standard.

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        // Rejection-free modulo bias is negligible for our n << 2^64; keep it
        // simple and deterministic.
        return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    /// Standard normal via Box-Muller. Consumes two uniforms per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace segue
