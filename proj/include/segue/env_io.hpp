#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "segue/core.hpp"
#include "segue/sim.hpp"

namespace segue {

// Environment file schema (JSON):
//   width, height     cell counts
//   resolution        meters per cell
//   classes           number of semantic classes (default 16)
//   obstacle_class    class id painted on obstacle cells (default 0)
//   start             [x, y, theta]
//   rows              height strings of width chars; '#' = obstacle,
//                     otherwise a base-36 class digit; rows[0] is row 0
//   ambiguity         optional sparse [[row, col, value], ...]

inline Environment environment_from_json(const nlohmann::json& doc) {
    try {
        const int width = doc.at("width").get<int>();
        const int height = doc.at("height").get<int>();
        const double resolution = doc.at("resolution").get<double>();
        const int classes = doc.value("classes", 16);
        const int obstacle_class = doc.value("obstacle_class", 0);
        const auto& start = doc.at("start");
        Environment env(width, height, resolution, classes,
                        make_pose(start.at(0).get<double>(), start.at(1).get<double>(),
                                  start.at(2).get<double>()));

        const auto& rows = doc.at("rows");
        if (static_cast<int>(rows.size()) != height)
            throw ConfigError("environment: row count does not match height");
        for (int r = 0; r < height; ++r) {
            const std::string line = rows.at(static_cast<std::size_t>(r)).get<std::string>();
            if (static_cast<int>(line.size()) != width)
                throw ConfigError("environment: row length does not match width");
            for (int c = 0; c < width; ++c) {
                const GridIndex cell{r, c};
                const char ch = line[static_cast<std::size_t>(c)];
                if (ch == '#') {
                    env.set_obstacle(cell, true);
                    env.set_class(cell, obstacle_class);
                } else {
                    const int id = class_digit(ch);
                    if (id < 0 || id >= classes)
                        throw ConfigError(std::string("environment: bad cell character '") + ch +
                                          "'");
                    env.set_class(cell, id);
                }
            }
        }
        if (doc.contains("ambiguity")) {
            for (const auto& entry : doc.at("ambiguity")) {
                env.set_ambiguity(GridIndex{entry.at(0).get<int>(), entry.at(1).get<int>()},
                                  entry.at(2).get<double>());
            }
        }
        env.finalize();
        return env;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("environment: malformed document: ") + e.what());
    }
}

inline Environment load_environment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open environment file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("environment: invalid JSON in " + path.string() + ": " + e.what());
    }
    return environment_from_json(doc);
}

}  // namespace segue
