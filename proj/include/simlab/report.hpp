#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "simlab/csv.hpp"

namespace simlab {

// One verdict. Self-contained: names the statistic, the target it was held
// against, and the tolerance actually used, so the report line can be
// recomputed from the emitted CSVs.
struct StatLine {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;        // 0 for deterministic checks
    double target = 0.0;    // reference value, bound, or window midpoint
    double tol = 0.0;       // numeric tolerance actually applied
    std::string tol_kind;   // abs | rel | se-mult | window | le | p-min
    bool pass = false;
    std::string note;       // human context, e.g. the window endpoints
};

// One machine-readable output table; lands in data/ or plotdata/.
struct CsvTable {
    std::string name;  // file stem, no extension
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct ReplicationReport {
    std::string experiment;
    std::vector<StatLine> stats;
    std::vector<CsvTable> data;      // full tables
    std::vector<CsvTable> plotdata;  // two-column series for external plotting
    double runtime_seconds = 0.0;
    std::uint64_t base_seed = 0;
    std::size_t replications = 0;
    std::vector<std::string> seed_log;  // one "label,stream" row per RNG stream used
    std::string failure;                // nonempty marks an aborted run

    bool all_pass() const {
        if (!failure.empty()) return false;
        for (const auto& s : stats)
            if (!s.pass) return false;
        return true;
    }
};

namespace detail {

inline std::string format_stat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace detail

/*
 * Writes <dir>/report.txt, <dir>/data/<table>.csv (plus verdicts.csv and
 * seeds.csv), <dir>/plotdata/<table>.csv. The file set is a pure function of
 * the report contents; only report.txt carries the runtime, so the CSVs are
 * byte-identical across reruns with the same config and seed.
 */
inline void emit_report(const ReplicationReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "data", ec);
    if (ec) throw std::runtime_error("emit_report: cannot create " + dir + "/data: " + ec.message());
    fs::create_directories(fs::path(dir) / "plotdata", ec);
    if (ec) throw std::runtime_error("emit_report: cannot create " + dir + "/plotdata: " + ec.message());

    const std::string txt_path = (fs::path(dir) / "report.txt").string();
    std::ofstream txt(txt_path, std::ios::binary);
    if (!txt) throw std::runtime_error("emit_report: cannot open " + txt_path);

    txt << "experiment: " << report.experiment << '\n';
    txt << "base_seed: " << report.base_seed << '\n';
    txt << "replications: " << report.replications << '\n';
    txt << "runtime_seconds: " << detail::format_stat(report.runtime_seconds) << '\n';
    txt << "verdicts: " << report.stats.size() << '\n';
    txt << '\n';
    for (const auto& s : report.stats) {
        txt << (s.pass ? "PASS" : "FAIL") << "  " << s.name
            << "  estimate=" << detail::format_stat(s.estimate);
        if (s.se != 0.0) txt << "  se=" << detail::format_stat(s.se);
        txt << "  target=" << detail::format_stat(s.target)
            << "  tol=" << detail::format_stat(s.tol) << " (" << s.tol_kind << ")";
        if (!s.note.empty()) txt << "  [" << s.note << "]";
        txt << '\n';
    }
    if (!report.failure.empty()) txt << "\n!! FAILED: " << report.failure << '\n';
    txt << '\n'
        << "overall: " << (report.all_pass() ? "PASS" : "FAIL") << '\n'
        << "seed provenance: data/seeds.csv (one stream identifier per replication)\n";

    {
        CsvWriter w((fs::path(dir) / "data" / "verdicts.csv").string(),
                    {"name", "estimate", "se", "target", "tol", "tol_kind", "pass"});
        for (const auto& s : report.stats)
            w.write_row_strings({s.name, format_fixed(s.estimate), format_fixed(s.se),
                                 format_fixed(s.target), format_fixed(s.tol), s.tol_kind,
                                 s.pass ? "1" : "0"});
    }
    {
        CsvWriter w((fs::path(dir) / "data" / "seeds.csv").string(), {"rep", "stream"});
        for (const auto& row : report.seed_log) w.write_row_strings({row});
    }
    for (const auto& t : report.data) {
        CsvWriter w((fs::path(dir) / "data" / (t.name + ".csv")).string(), t.header);
        for (const auto& row : t.rows) w.write_row(row);
    }
    for (const auto& t : report.plotdata) {
        CsvWriter w((fs::path(dir) / "plotdata" / (t.name + ".csv")).string(), t.header);
        for (const auto& row : t.rows) w.write_row(row);
    }
}

}  // namespace simlab
