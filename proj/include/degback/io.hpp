#pragma once

// CSV and JSON output. Doubles are written in scientific notation with 17
// significant digits so that every value round-trips.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "degback/errors.hpp"

namespace degback {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

using CsvCell = std::variant<long long, double, std::string>;

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<CsvCell> row) {
        if (row.size() != header_.size()) {
            throw std::invalid_argument("CsvWriter: row has " + std::to_string(row.size()) + " cells, header has " +
                                        std::to_string(header_.size()));
        }
        rows_.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& row : rows_) {
            std::vector<std::string> cells;
            cells.reserve(row.size());
            for (const auto& cell : row) {
                if (const auto* i = std::get_if<long long>(&cell)) {
                    cells.push_back(std::to_string(*i));
                } else if (const auto* d = std::get_if<double>(&cell)) {
                    cells.push_back(format_double(*d));
                } else {
                    cells.push_back(std::get<std::string>(cell));
                }
            }
            append_line(out, cells);
        }
        return out;
    }

    std::size_t rows() const { return rows_.size(); }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<CsvCell>> rows_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_csv(const std::filesystem::path& path, const CsvWriter& csv) { write_text_file(path, csv.str()); }

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

/// Finite doubles as numbers, non-finite ones as strings ("inf", "nan"),
/// since JSON has no literal for them.
inline nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace degback
