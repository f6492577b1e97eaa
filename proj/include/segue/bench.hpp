#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "segue/env_io.hpp"
#include "segue/explore.hpp"
#include "segue/map_export.hpp"
#include "segue/metrics.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Sweep description
//
// JSON schema:
//   environments   array of environment file paths
//   seeds          array of integers
//   runs           array of {method, samples?, iterations?} cells
//   tau, ratio_threshold, max_ticks, inflation, dwell, feature_dim,
//   temperature   optional overrides applied to every run

struct SweepCell {
    std::string method;
    int samples = 0;     // 0 keeps the default
    int iterations = 0;  // 0 keeps the default
};

struct SweepSpec {
    std::vector<std::string> environments;
    std::vector<std::uint64_t> seeds;
    std::vector<SweepCell> cells;
    ExplorationConfig base;
};

inline SweepSpec sweep_from_json(const nlohmann::json& doc) {
    SweepSpec spec;
    try {
        for (const auto& env : doc.at("environments")) spec.environments.push_back(env.get<std::string>());
        for (const auto& seed : doc.at("seeds")) spec.seeds.push_back(seed.get<std::uint64_t>());
        for (const auto& cell : doc.at("runs")) {
            SweepCell c;
            c.method = cell.at("method").get<std::string>();
            c.samples = cell.value("samples", 0);
            c.iterations = cell.value("iterations", 0);
            spec.cells.push_back(c);
        }
        spec.base.tau = doc.value("tau", spec.base.tau);
        spec.base.ratio_threshold = doc.value("ratio_threshold", spec.base.ratio_threshold);
        spec.base.max_ticks = doc.value("max_ticks", spec.base.max_ticks);
        spec.base.inflation = doc.value("inflation", spec.base.inflation);
        spec.base.dwell = doc.value("dwell", spec.base.dwell);
        spec.base.feature_dim = doc.value("feature_dim", spec.base.feature_dim);
        spec.base.temperature = doc.value("temperature", spec.base.temperature);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sweep: malformed document: ") + e.what());
    }
    if (spec.environments.empty() || spec.seeds.empty() || spec.cells.empty())
        throw ConfigError("sweep: environments, seeds and runs must be non-empty");
    return spec;
}

/// Loads a sweep description; relative environment paths resolve against the
/// sweep file's directory.
inline SweepSpec load_sweep(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("sweep: invalid JSON in " + path.string() + ": " + e.what());
    }
    SweepSpec spec = sweep_from_json(doc);
    const std::filesystem::path base = path.parent_path();
    for (std::string& env_path : spec.environments) {
        const std::filesystem::path p(env_path);
        if (p.is_relative()) env_path = (base / p).string();
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Runner

struct BenchmarkResult {
    std::vector<MetricsRow> rows;
    nlohmann::json summary;
};

inline std::string env_display_name(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

/// Runs every (cell x environment x seed) combination with the environment's
/// fixed start pose. Failures become rows flagged `failed` instead of
/// aborting the sweep. The summary aggregates per-cell means and extremes
/// over seeds.
inline BenchmarkResult run_benchmark(const SweepSpec& spec) {
    BenchmarkResult result;

    struct Aggregate {
        std::vector<double> coverages;
        std::vector<double> entropies;
    };
    std::map<std::string, Aggregate> aggregates;

    for (const std::string& env_path : spec.environments) {
        const Environment env = load_environment(env_path);
        const std::string env_name = env_display_name(env_path);
        for (const SweepCell& cell : spec.cells) {
            for (const std::uint64_t seed : spec.seeds) {
                ExplorationConfig config = spec.base;
                config.method = method_from_string(cell.method);
                config.seed = seed;
                if (cell.samples > 0) config.sampler.n_samples = cell.samples;
                if (cell.iterations > 0) config.sampler.n_iterations = cell.iterations;

                MetricsRow row;
                row.method = cell.method;
                row.env_name = env_name;
                row.seed = seed;
                row.samples = config.sampler.n_samples;
                row.iterations = config.sampler.n_iterations;
                try {
                    const RunResult run_result = run(env, config);
                    row.coverage = coverage(run_result.occupancy, run_result.semantic);
                    row.average_entropy =
                        average_entropy(run_result.occupancy, run_result.semantic, run_result.head);
                    row.ticks = run_result.trajectory.empty()
                                    ? 0
                                    : run_result.trajectory.back().tick;
                    row.wall_time = run_result.wall_time_seconds;
                } catch (const std::exception& e) {
                    row.status = "failed";
                    (void)e;
                }
                result.rows.push_back(row);

                const std::string key = cell.method + "/" + env_name + "/s" +
                                        std::to_string(row.samples) + "/i" +
                                        std::to_string(row.iterations);
                if (row.status == "ok") {
                    aggregates[key].coverages.push_back(row.coverage);
                    aggregates[key].entropies.push_back(row.average_entropy);
                }
            }
        }
    }

    result.summary = nlohmann::json::object();
    for (const auto& [key, agg] : aggregates) {
        auto stats = [](const std::vector<double>& xs) {
            double lo = xs.front(), hi = xs.front(), sum = 0.0;
            for (double x : xs) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                sum += x;
            }
            return nlohmann::json{{"mean", sum / static_cast<double>(xs.size())},
                                  {"min", lo},
                                  {"max", hi},
                                  {"n", xs.size()}};
        };
        if (!agg.coverages.empty()) {
            result.summary[key] = {{"coverage", stats(agg.coverages)},
                                   {"average_entropy", stats(agg.entropies)}};
        }
    }
    return result;
}

inline void write_benchmark(const BenchmarkResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    detail::write_file(out_dir / "benchmark.csv", to_csv(result.rows));
    detail::write_file(out_dir / "summary.json", result.summary.dump(2) + "\n");
}

}  // namespace segue
