#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "segue/core.hpp"
#include "segue/explore.hpp"
#include "segue/metrics.hpp"

namespace segue {

// ---------------------------------------------------------------------------
// Renderable snapshot of a finished run

struct MapState {
    int width = 0;
    int height = 0;
    double resolution = 0.0;
    int classes = 0;
    std::vector<CellState> occupancy;  // row-major
    std::vector<int> argmax;           // row-major; -1 for featureless cells
    std::vector<GridIndex> trajectory;
};

inline MapState map_state_of(const RunResult& result) {
    MapState state;
    state.width = result.occupancy.width();
    state.height = result.occupancy.height();
    state.resolution = result.occupancy.resolution();
    state.classes = static_cast<int>(result.head.num_classes());
    state.occupancy = result.occupancy.cells();
    state.argmax.assign(state.occupancy.size(), -1);
    for (int r = 0; r < state.height; ++r) {
        for (int c = 0; c < state.width; ++c) {
            const SemanticCell& cell = result.semantic.at({r, c});
            if (!cell.feature.has_value()) continue;
            const std::vector<double> dist = classify(result.head, *cell.feature);
            const auto peak = std::max_element(dist.begin(), dist.end());
            state.argmax[static_cast<std::size_t>(r) * state.width + c] =
                static_cast<int>(peak - dist.begin());
        }
    }
    for (const RobotState& s : result.trajectory)
        state.trajectory.push_back(result.occupancy.world_to_grid(s.pose));
    return state;
}

// ---------------------------------------------------------------------------
// Image writers (binary PGM / PPM, row 0 first)

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

inline unsigned char occupancy_shade(CellState s) {
    switch (s) {
        case CellState::Free: return 255;
        case CellState::Occupied: return 0;
        case CellState::Unknown: break;
    }
    return 128;
}

// 16-entry palette for argmax classes; class ids wrap modulo 16.
inline const std::array<std::array<unsigned char, 3>, 16>& class_palette() {
    static const std::array<std::array<unsigned char, 3>, 16> palette = {{
        {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
        {245, 130, 48},  {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
        {210, 245, 60},  {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
        {170, 110, 40},  {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
    }};
    return palette;
}

}  // namespace detail

inline std::string occupancy_pgm_bytes(const MapState& state) {
    std::string out = "P5\n" + std::to_string(state.width) + " " + std::to_string(state.height) +
                      "\n255\n";
    out.reserve(out.size() + state.occupancy.size());
    for (CellState s : state.occupancy)
        out.push_back(static_cast<char>(detail::occupancy_shade(s)));
    return out;
}

inline std::string semantic_ppm_bytes(const MapState& state) {
    std::string out = "P6\n" + std::to_string(state.width) + " " + std::to_string(state.height) +
                      "\n255\n";
    out.reserve(out.size() + state.argmax.size() * 3);
    for (int cls : state.argmax) {
        if (cls < 0) {
            out.push_back(static_cast<char>(32));
            out.push_back(static_cast<char>(32));
            out.push_back(static_cast<char>(32));
        } else {
            const auto& rgb = detail::class_palette()[static_cast<std::size_t>(cls % 16)];
            out.push_back(static_cast<char>(rgb[0]));
            out.push_back(static_cast<char>(rgb[1]));
            out.push_back(static_cast<char>(rgb[2]));
        }
    }
    return out;
}

inline std::string trajectory_ppm_bytes(const MapState& state) {
    std::string out = "P6\n" + std::to_string(state.width) + " " + std::to_string(state.height) +
                      "\n255\n";
    std::vector<std::array<unsigned char, 3>> pixels(state.occupancy.size());
    for (std::size_t i = 0; i < state.occupancy.size(); ++i) {
        const unsigned char shade = detail::occupancy_shade(state.occupancy[i]);
        pixels[i] = {shade, shade, shade};
    }
    for (const GridIndex& cell : state.trajectory)
        pixels[static_cast<std::size_t>(cell.row) * state.width + cell.col] = {200, 30, 30};
    if (!state.trajectory.empty()) {
        const GridIndex& first = state.trajectory.front();
        const GridIndex& last = state.trajectory.back();
        pixels[static_cast<std::size_t>(first.row) * state.width + first.col] = {40, 180, 60};
        pixels[static_cast<std::size_t>(last.row) * state.width + last.col] = {40, 80, 220};
    }
    for (const auto& rgb : pixels) {
        out.push_back(static_cast<char>(rgb[0]));
        out.push_back(static_cast<char>(rgb[1]));
        out.push_back(static_cast<char>(rgb[2]));
    }
    return out;
}

/// Writes occupancy.pgm, semantic.ppm and trajectory.ppm into `out_dir`.
inline void write_images(const MapState& state, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    detail::write_file(out_dir / "occupancy.pgm", occupancy_pgm_bytes(state));
    detail::write_file(out_dir / "semantic.ppm", semantic_ppm_bytes(state));
    detail::write_file(out_dir / "trajectory.ppm", trajectory_ppm_bytes(state));
}

/// Renders a finished run into the three map images.
inline void export_maps(const RunResult& result, const std::filesystem::path& out_dir) {
    write_images(map_state_of(result), out_dir);
}

// ---------------------------------------------------------------------------
// State round-trip so `render` can re-draw without re-running

inline nlohmann::json state_to_json(const MapState& state) {
    nlohmann::json doc;
    doc["width"] = state.width;
    doc["height"] = state.height;
    doc["resolution"] = state.resolution;
    doc["classes"] = state.classes;

    std::vector<std::string> occ_rows;
    std::vector<std::string> class_rows;
    for (int r = 0; r < state.height; ++r) {
        std::string occ, cls;
        for (int c = 0; c < state.width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * state.width + c;
            switch (state.occupancy[i]) {
                case CellState::Unknown: occ.push_back('U'); break;
                case CellState::Free: occ.push_back('F'); break;
                case CellState::Occupied: occ.push_back('O'); break;
            }
            const int id = state.argmax[i];
            cls.push_back(id < 0 ? '.' : (id < 10 ? static_cast<char>('0' + id)
                                                  : static_cast<char>('a' + id - 10)));
        }
        occ_rows.push_back(occ);
        class_rows.push_back(cls);
    }
    doc["occupancy"] = occ_rows;
    doc["argmax"] = class_rows;

    nlohmann::json traj = nlohmann::json::array();
    for (const GridIndex& cell : state.trajectory) traj.push_back({cell.row, cell.col});
    doc["trajectory"] = traj;
    return doc;
}

inline MapState state_from_json(const nlohmann::json& doc) {
    MapState state;
    try {
        state.width = doc.at("width").get<int>();
        state.height = doc.at("height").get<int>();
        state.resolution = doc.at("resolution").get<double>();
        state.classes = doc.at("classes").get<int>();
        const auto& occ_rows = doc.at("occupancy");
        const auto& class_rows = doc.at("argmax");
        state.occupancy.resize(static_cast<std::size_t>(state.width) * state.height);
        state.argmax.resize(state.occupancy.size());
        for (int r = 0; r < state.height; ++r) {
            const std::string occ = occ_rows.at(static_cast<std::size_t>(r)).get<std::string>();
            const std::string cls = class_rows.at(static_cast<std::size_t>(r)).get<std::string>();
            for (int c = 0; c < state.width; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * state.width + c;
                switch (occ.at(static_cast<std::size_t>(c))) {
                    case 'U': state.occupancy[i] = CellState::Unknown; break;
                    case 'F': state.occupancy[i] = CellState::Free; break;
                    case 'O': state.occupancy[i] = CellState::Occupied; break;
                    default: throw ConfigError("state: bad occupancy character");
                }
                state.argmax[i] = class_digit(cls.at(static_cast<std::size_t>(c)));
            }
        }
        for (const auto& entry : doc.at("trajectory"))
            state.trajectory.push_back(GridIndex{entry.at(0).get<int>(), entry.at(1).get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("state: malformed document: ") + e.what());
    }
    return state;
}

inline void write_state(const MapState& state, const std::filesystem::path& path) {
    detail::write_file(path, state_to_json(state).dump(2) + "\n");
}

inline MapState load_state(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open state file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("state: invalid JSON in " + path.string() + ": " + e.what());
    }
    return state_from_json(doc);
}

}  // namespace segue
