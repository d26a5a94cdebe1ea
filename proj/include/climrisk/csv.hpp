#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace climrisk::csv {

// A parsed CSV file: mandatory header row, then data rows. Fields may be
// double-quoted; embedded quotes are doubled.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based physical line number of each data row, for diagnostics.
    std::vector<std::size_t> line_numbers;

    // Throws MissingColumn when absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view origin = "<memory>");

// Empty (after trimming) means "missing"; anything else must be a full
// decimal number or a NumericParse error naming `where` is raised.
std::optional<double> parse_optional_number(std::string_view field, std::string_view where);
double parse_number(std::string_view field, std::string_view where);

// Shortest representation that round-trips exactly.
std::string format_number(double value);

class Writer {
public:
    explicit Writer(std::vector<std::string> header);

    Writer& cell(std::string_view text);
    Writer& cell(double value);
    Writer& cell(long long value);
    void end_row();

    const std::string& str() const noexcept { return buffer_; }

private:
    void separator();
    std::string buffer_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
};

// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace climrisk::csv
