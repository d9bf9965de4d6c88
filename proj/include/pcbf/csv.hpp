#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcbf {

/// %.17g, which round-trips every finite double; "nan"/"inf"/"-inf" otherwise.
std::string format_real(double value);
double parse_real(const std::string& text);

/// Plain comma-separated table. No quoting: fields never contain commas.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws MissingColumns when absent.
    std::size_t column(const std::string& name) const;
    void require(const std::vector<std::string>& names) const;
    double real(std::size_t row, const std::string& name) const;
    const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in);
void write_csv(const std::string& path, const CsvTable& table);
void write_csv(std::ostream& out, const CsvTable& table);

} // namespace pcbf
