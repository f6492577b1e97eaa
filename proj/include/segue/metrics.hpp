#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "segue/core.hpp"
#include "segue/occupancy.hpp"
#include "segue/semantics.hpp"

namespace segue {

/// Shortest round-trip decimal form of a double; all emitted files use this
/// so identical runs serialize to identical bytes.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{}) throw IoError("parse_double: bad number '" + s + "'");
    return v;
}

/// Fraction of observed (Free or Occupied) cells that carry a semantic
/// feature; 0 when nothing has been observed.
inline double coverage(const OccupancyGrid& occupancy, const SemanticMap& semantic) {
    if (occupancy.width() != semantic.width() || occupancy.height() != semantic.height())
        throw DimensionMismatch("coverage: grid dimensions differ");
    std::size_t observed = 0;
    std::size_t featured = 0;
    for (int r = 0; r < occupancy.height(); ++r) {
        for (int c = 0; c < occupancy.width(); ++c) {
            const GridIndex i{r, c};
            if (occupancy.at(i) == CellState::Unknown) continue;
            ++observed;
            if (semantic.at(i).feature.has_value()) ++featured;
        }
    }
    if (observed == 0) return 0.0;
    return static_cast<double>(featured) / static_cast<double>(observed);
}

/// Mean prediction entropy (nats) over observed cells; observed cells with
/// no feature are charged the maximum entropy ln(M). Unknown cells are
/// excluded entirely.
inline double average_entropy(const OccupancyGrid& occupancy, const SemanticMap& semantic,
                              const ClassifierHead& head) {
    if (occupancy.width() != semantic.width() || occupancy.height() != semantic.height())
        throw DimensionMismatch("average_entropy: grid dimensions differ");
    const double max_entropy = std::log(static_cast<double>(head.num_classes()));
    double total = 0.0;
    std::size_t observed = 0;
    for (int r = 0; r < occupancy.height(); ++r) {
        for (int c = 0; c < occupancy.width(); ++c) {
            const GridIndex i{r, c};
            if (occupancy.at(i) == CellState::Unknown) continue;
            ++observed;
            const SemanticCell& cell = semantic.at(i);
            total += cell.feature.has_value() ? shannon_entropy(classify(head, *cell.feature))
                                              : max_entropy;
        }
    }
    if (observed == 0) return 0.0;
    return total / static_cast<double>(observed);
}

// ---------------------------------------------------------------------------
// Benchmark rows

struct MetricsRow {
    std::string method;
    std::string env_name;
    std::uint64_t seed = 0;
    int samples = 0;
    int iterations = 0;
    double coverage = 0.0;
    double average_entropy = 0.0;
    int ticks = 0;
    double wall_time = 0.0;  // seconds
    std::string status = "ok";
};

inline std::string metrics_csv_header() {
    return "method,env,seed,samples,iterations,coverage,average_entropy,ticks,wall_time,status";
}

inline std::string to_csv_line(const MetricsRow& row) {
    std::ostringstream out;
    out << row.method << ',' << row.env_name << ',' << row.seed << ',' << row.samples << ','
        << row.iterations << ',' << format_double(row.coverage) << ','
        << format_double(row.average_entropy) << ',' << row.ticks << ','
        << format_double(row.wall_time) << ',' << row.status;
    return out.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

inline MetricsRow parse_csv_line(const std::string& line) {
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 10) throw IoError("parse_csv_line: expected 10 fields");
    MetricsRow row;
    row.method = f[0];
    row.env_name = f[1];
    row.seed = static_cast<std::uint64_t>(std::stoull(f[2]));
    row.samples = std::stoi(f[3]);
    row.iterations = std::stoi(f[4]);
    row.coverage = parse_double(f[5]);
    row.average_entropy = parse_double(f[6]);
    row.ticks = std::stoi(f[7]);
    row.wall_time = parse_double(f[8]);
    row.status = f[9];
    return row;
}

inline std::string to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = metrics_csv_header() + "\n";
    for (const MetricsRow& row : rows) out += to_csv_line(row) + "\n";
    return out;
}

inline std::vector<MetricsRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<MetricsRow> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line != metrics_csv_header()) throw IoError("parse_csv: unexpected header");
            continue;
        }
        rows.push_back(parse_csv_line(line));
    }
    return rows;
}

}  // namespace segue
