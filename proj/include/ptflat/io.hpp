#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ptflat {

/// 17 significant digits, '.' separator, locale independent.
std::string format_real(double value);

enum class OutputFormat { csv, json };

/// A result table. Empty optionals are undefined values (empty CSV field,
/// JSON null). `config` is echoed in the header; `notes` follow the rows.
struct Table {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;
    std::vector<std::string> notes;
};

/// CSV: one header line "# col,col,... | key=value ...", rows, then one
/// "# note" line per note.
void write_csv(std::ostream& os, const Table& table);
void write_json(std::ostream& os, const Table& table);
void write_table(std::ostream& os, const Table& table, OutputFormat format);

/// Parses the rows of write_csv output back into numbers (comments skipped).
std::vector<std::vector<std::optional<double>>> read_csv_rows(const std::string& text);

} // namespace ptflat
