#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ibstress {

// Shortest round-trip decimal form of a double (via std::to_chars). Every
// number the toolkit writes goes through this, so outputs are byte-stable.
std::string format_double(double value);

std::string format_int(long long value);

// Minimal RFC-4180-ish writer. Fields containing separators get quoted.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    void row(const std::vector<std::string>& fields);
    void row(std::initializer_list<std::string> fields);
    void close();

private:
    std::ofstream out_;
    std::string path_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // excludes header
    std::vector<std::size_t> line_numbers;       // 1-based source line per row

    int column(const std::string& name) const;  // -1 if absent
};

// Reads a CSV with a header row. Throws IoError with the offending line
// number on malformed input or ragged rows.
CsvTable read_csv(const std::string& path);

double parse_double_field(const std::string& field, const std::string& path,
                          std::size_t line, const std::string& column);

}  // namespace ibstress
