#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "matconc/mc.hpp"
#include "matconc/sym_matrix.hpp"

namespace matconc::cli {

/// Assembled experiment output: a JSON summary plus named CSV tables.
/// CSV bodies are formatted with a fixed %.17g rule so reruns of the same
/// config produce byte-identical files.
struct Report {
    nlohmann::json summary;
    std::vector<std::pair<std::string, std::string>> tables;  // filename -> body
    bool all_pass = false;
};

namespace csv {

inline std::string row(const std::vector<double>& values) {
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line += ",";
        line += io::format_value(values[i]);
    }
    line += "\n";
    return line;
}

/// Tail curve table with the contract header
/// "t,empirical,stderr,bound_raw,bound_clamped"; missing bound columns are
/// emitted as empty fields.
inline std::string tail_table(const mc::TailCurve& curve) {
    std::string body = "t,empirical,stderr,bound_raw,bound_clamped\n";
    for (std::size_t i = 0; i < curve.t_grid.size(); ++i) {
        body += io::format_value(curve.t_grid[i]);
        body += ",";
        body += io::format_value(curve.empirical[i]);
        body += ",";
        body += io::format_value(curve.std_err[i]);
        body += ",";
        if (i < curve.bound_raw.size()) body += io::format_value(curve.bound_raw[i]);
        body += ",";
        if (i < curve.bound_clamped.size()) body += io::format_value(curve.bound_clamped[i]);
        body += "\n";
    }
    return body;
}

/// Generic table from a header and numeric rows.
inline std::string table(const std::string& header,
                         const std::vector<std::vector<double>>& rows) {
    std::string body = header + "\n";
    for (const auto& r : rows) body += row(r);
    return body;
}

}  // namespace csv

inline void write_report(const Report& report, const std::string& out_dir) {
    if (report.summary.is_null()) throw std::invalid_argument("write_report: empty report");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + out_dir);

    {
        std::ofstream os(fs::path(out_dir) / "summary.json");
        if (!os) throw std::runtime_error("cannot write summary.json under " + out_dir);
        os << report.summary.dump(2) << "\n";
    }
    for (const auto& [name, body] : report.tables) {
        std::ofstream os(fs::path(out_dir) / name);
        if (!os) throw std::runtime_error("cannot write " + name + " under " + out_dir);
        os << body;
    }
}

}  // namespace matconc::cli
