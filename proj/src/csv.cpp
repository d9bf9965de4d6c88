#include "pcbf/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcbf/error.hpp"

namespace pcbf {

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_real(const std::string& text) {
    if (text == "nan" || text.empty()) return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput, "not a number: '" + text + "'");
    }
    if (used != text.size()) throw Error(ErrorCode::InvalidInput, "not a number: '" + text + "'");
    return v;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error(ErrorCode::MissingColumns, "missing column '" + name + "'");
}

void CsvTable::require(const std::vector<std::string>& names) const {
    std::string missing;
    for (const auto& n : names) {
        bool found = false;
        for (const auto& h : header) found = found || h == n;
        if (!found) missing += (missing.empty() ? "" : ", ") + n;
    }
    if (!missing.empty()) throw Error(ErrorCode::MissingColumns, "missing columns: " + missing);
}

double CsvTable::real(std::size_t row, const std::string& name) const { return parse_real(text(row, name)); }

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
    const auto c = column(name);
    if (c >= rows.at(row).size()) throw Error(ErrorCode::MissingColumns, "short row " + std::to_string(row));
    return rows[row][c];
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumns, "empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.rows.push_back(split(line));
    }
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
    return parse_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
        out << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
    write_csv(out, table);
}

} // namespace pcbf
