#include "ptflat/io.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "ptflat/error.hpp"

namespace ptflat {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_csv(std::ostream& os, const Table& table) {
    std::string header = "# ";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) header += ',';
        header += table.columns[i];
    }
    header += " | command=" + table.command;
    for (const auto& [key, value] : table.config) header += ' ' + key + '=' + value;
    os << header << '\n';
    for (const auto& row : table.rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ',';
            if (row[i]) line += format_real(*row[i]);
        }
        os << line << '\n';
    }
    for (const auto& note : table.notes) os << "# " << note << '\n';
}

void write_json(std::ostream& os, const Table& table) {
    nlohmann::ordered_json doc;
    doc["command"] = table.command;
    doc["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : table.config) doc["config"][key] = value;
    doc["columns"] = table.columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        auto cells = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            if (cell) {
                cells.push_back(*cell);
            } else {
                cells.push_back(nullptr);
            }
        }
        rows.push_back(std::move(cells));
    }
    doc["rows"] = std::move(rows);
    doc["notes"] = table.notes;
    os << doc.dump(1) << '\n';
}

void write_table(std::ostream& os, const Table& table, OutputFormat format) {
    if (format == OutputFormat::json) {
        write_json(os, table);
    } else {
        write_csv(os, table);
    }
}

std::vector<std::vector<std::optional<double>>> read_csv_rows(const std::string& text) {
    std::vector<std::vector<std::optional<double>>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::optional<double>> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const auto field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (field.empty()) {
                row.emplace_back();
            } else {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
                if (ec != std::errc() || ptr != field.data() + field.size()) {
                    throw InvalidArgument("malformed CSV field '" + field + "'");
                }
                row.emplace_back(v);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace ptflat
