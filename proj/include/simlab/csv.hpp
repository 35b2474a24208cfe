#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace simlab {

// All emitted CSVs share one number format: fixed-point, 12 fractional
// digits, '.' separator, no exponent. Fixed format keeps files byte-stable
// across runs and trivially diffable.
inline std::string format_fixed(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12f", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
        write_row_strings(header);
    }

    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void write_row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_fixed(cells[i]);
        }
        out_ << '\n';
    }

    // mixed rows: leading integer key then numeric cells
    void write_row(long key, const std::vector<double>& cells) {
        out_ << key;
        for (double c : cells) out_ << ',' << format_fixed(c);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace simlab
