// Command-line front end: explore a world, run benchmark sweeps, or re-render
// the images of a finished run.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "segue/segue.hpp"

namespace {

namespace fs = std::filesystem;

std::string per_tick_csv(const segue::RunResult& result) {
    std::string out = "tick,coverage,average_entropy,best_pose_score\n";
    for (const segue::TickMetrics& row : result.per_tick) {
        out += std::to_string(row.tick) + ',' + segue::format_double(row.coverage) + ',' +
               segue::format_double(row.average_entropy) + ',' +
               segue::format_double(row.best_pose_score) + '\n';
    }
    return out;
}

std::string events_log(const segue::RunResult& result) {
    std::string out;
    for (const segue::Event& event : result.events) {
        out += std::to_string(event.tick) + ' ' + event.kind;
        if (!event.detail.empty()) out += ' ' + event.detail;
        out += '\n';
    }
    return out;
}

int run_explore(const std::string& env_path, const segue::ExplorationConfig& config,
                const fs::path& out_dir) {
    const segue::Environment env = segue::load_environment(env_path);
    const segue::RunResult result = segue::run(env, config);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const segue::MapState state = segue::map_state_of(result);
    segue::write_images(state, out_dir);
    segue::write_state(state, out_dir / "state.json");
    segue::detail::write_file(out_dir / "metrics.csv", per_tick_csv(result));
    segue::detail::write_file(out_dir / "events.log", events_log(result));

    nlohmann::json summary;
    summary["method"] = segue::to_string(config.method);
    summary["env"] = segue::env_display_name(env_path);
    summary["seed"] = config.seed;
    summary["termination_reason"] = segue::to_string(result.reason);
    summary["final_best_score"] = result.final_best_score;
    summary["ticks"] = result.trajectory.empty() ? 0 : result.trajectory.back().tick;
    summary["coverage"] = segue::coverage(result.occupancy, result.semantic);
    summary["average_entropy"] =
        segue::average_entropy(result.occupancy, result.semantic, result.head);
    summary["wall_time_seconds"] = result.wall_time_seconds;
    segue::detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");

    std::cout << "terminated: " << segue::to_string(result.reason)
              << "  coverage: " << summary["coverage"].get<double>()
              << "  average_entropy: " << summary["average_entropy"].get<double>() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic-guided grid-world exploration"};
    app.require_subcommand(1);

    // explore
    auto* explore = app.add_subcommand("explore", "Run one exploration and export maps");
    std::string env_path;
    std::string method = "segue_us";
    std::string out_dir = "out";
    segue::ExplorationConfig config;
    int samples = 0;
    int iterations = 0;
    explore->add_option("--env", env_path, "Environment JSON file")->required();
    explore->add_option("--method", method,
                        "segue_us | segue_is | noscore_us | noscore_is | frontier");
    explore->add_option("--seed", config.seed, "Random seed");
    explore->add_option("--samples", samples, "Samples per round");
    explore->add_option("--iterations", iterations, "Importance-sampling iterations");
    explore->add_option("--tau", config.tau, "Termination threshold");
    explore->add_option("--ratio-threshold", config.ratio_threshold, "Convergence ratio");
    explore->add_option("--max-ticks", config.max_ticks, "Tick budget");
    explore->add_option("--inflation", config.inflation, "Obstacle inflation in cells");
    explore->add_option("--feature-dim", config.feature_dim, "Feature dimension");
    explore->add_option("--temperature", config.temperature, "Classifier temperature");
    explore->add_flag("--no-dwell", [&](std::int64_t) { config.dwell = false; },
                      "Skip the heading sweep on arrival");
    explore->add_option("--out", out_dir, "Output directory");

    // bench
    auto* bench = app.add_subcommand("bench", "Run a benchmark sweep");
    std::string sweep_path;
    std::string bench_out = "bench_out";
    bench->add_option("--spec", sweep_path, "Sweep JSON file")->required();
    bench->add_option("--out", bench_out, "Output directory");

    // render
    auto* render = app.add_subcommand("render", "Re-render images from a result directory");
    std::string result_dir;
    render->add_option("--result", result_dir, "Directory containing state.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (explore->parsed()) {
            config.method = segue::method_from_string(method);
            if (samples > 0) config.sampler.n_samples = samples;
            if (iterations > 0) config.sampler.n_iterations = iterations;
            return run_explore(env_path, config, out_dir);
        }
        if (bench->parsed()) {
            const segue::SweepSpec spec = segue::load_sweep(sweep_path);
            const segue::BenchmarkResult result = segue::run_benchmark(spec);
            segue::write_benchmark(result, bench_out);
            std::size_t failed = 0;
            for (const segue::MetricsRow& row : result.rows)
                if (row.status != "ok") ++failed;
            std::cout << result.rows.size() << " runs, " << failed << " failed\n";
            return 0;
        }
        if (render->parsed()) {
            const fs::path dir = result_dir;
            const segue::MapState state = segue::load_state(dir / "state.json");
            segue::write_images(state, dir);
            std::cout << "rendered " << dir.string() << "\n";
            return 0;
        }
    } catch (const segue::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const segue::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const segue::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
