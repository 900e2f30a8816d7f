#pragma once

// CSV tables with a '#'-prefixed metadata block.

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "outbreak/errors.hpp"
#include "outbreak/experiments.hpp"

namespace outbreak {

inline constexpr const char* kToolName = "outbreak_lab";
inline constexpr const char* kToolVersion = "1.0.0";

/// Metadata lines as `# key: value`, then the header row, then data. NaN
/// cells are written empty.
inline void write_csv(std::ostream& os, const Table& t) {
    os << "# tool: " << kToolName << " " << kToolVersion << "\n";
    if (!t.name.empty()) os << "# table: " << t.name << "\n";
    for (const auto& [k, v] : t.metadata) os << "# " << k << ": " << v << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            if (!std::isnan(row[c])) os << fmt(row[c]);
        }
        os << "\n";
    }
}

inline void write_csv_file(const std::string& path, const Table& t) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot open output file '" + path + "'");
    write_csv(f, t);
    if (!f) throw config_error("failed writing output file '" + path + "'");
}

} // namespace outbreak
