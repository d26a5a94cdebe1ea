#include "climrisk/csv.hpp"

#include "climrisk/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace climrisk::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

}  // namespace

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    throw Error(ErrorKind::MissingColumn, "column '" + std::string(name) + "' not found");
}

Table parse(std::string_view text, std::string_view origin) {
    Table table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool have_header = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool record_has_content = false;

    auto finish_record = [&] {
        record.push_back(std::string(trim(field)));
        field.clear();
        bool blank = record.size() == 1 && record.front().empty() && !record_has_content;
        if (!blank) {
            if (!have_header) {
                table.header = std::move(record);
                have_header = true;
            } else {
                if (record.size() != table.header.size()) {
                    throw Error(ErrorKind::NumericParse,
                                std::string(origin) + " line " + std::to_string(record_line) +
                                    ": expected " + std::to_string(table.header.size()) +
                                    " fields, found " + std::to_string(record.size()));
                }
                table.rows.push_back(std::move(record));
                table.line_numbers.push_back(record_line);
            }
        }
        record.clear();
        record_has_content = false;
    };

    // Skip a UTF-8 byte order mark.
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                record_has_content = true;
                break;
            case ',':
                record.push_back(std::string(trim(field)));
                field.clear();
                record_has_content = true;
                break;
            case '\n':
                finish_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
        }
    }
    if (!field.empty() || !record.empty() || record_has_content) finish_record();
    if (!have_header)
        throw Error(ErrorKind::MissingColumn, std::string(origin) + ": missing header row");
    return table;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Table read(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

std::optional<double> parse_optional_number(std::string_view field, std::string_view where) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    return parse_number(field, where);
}

double parse_number(std::string_view field, std::string_view where) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw Error(ErrorKind::NumericParse,
                    std::string(where) + ": cannot parse '" + std::string(field) + "' as a number");
    }
    return value;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

Writer::Writer(std::vector<std::string> header) : columns_(header.size()) {
    for (const auto& h : header) cell(h);
    end_row();
}

void Writer::separator() {
    if (in_row_ > 0) buffer_.push_back(',');
    ++in_row_;
}

Writer& Writer::cell(std::string_view text) {
    separator();
    if (needs_quotes(text)) {
        buffer_.push_back('"');
        for (char c : text) {
            if (c == '"') buffer_.push_back('"');
            buffer_.push_back(c);
        }
        buffer_.push_back('"');
    } else {
        buffer_.append(text);
    }
    return *this;
}

Writer& Writer::cell(double value) {
    separator();
    buffer_.append(format_number(value));
    return *this;
}

Writer& Writer::cell(long long value) {
    separator();
    buffer_.append(std::to_string(value));
    return *this;
}

void Writer::end_row() {
    if (in_row_ != columns_)
        throw Error(ErrorKind::InvalidInputs, "csv row has " + std::to_string(in_row_) +
                                                  " cells, header has " + std::to_string(columns_));
    buffer_.push_back('\n');
    in_row_ = 0;
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace climrisk::csv
