#include "vpgd/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "vpgd/errors.hpp"

namespace vpgd {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

}  // namespace

std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) {
            return columns.at(c);
        }
    }
    throw ParseError("missing column '" + name + "'", 1);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    if (table.columns.size() != table.header.size()) {
        throw ShapeError("csv: header and column counts differ");
    }
    const std::size_t rows = table.n_rows();
    for (const auto& c : table.columns) {
        if (c.size() != rows) {
            throw ShapeError("csv: ragged columns");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    std::string line;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        line += (c ? "," : "") + table.header[c];
    }
    out << line << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        line.clear();
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) line += ',';
            line += format_number(table.columns[c][r]);
        }
        out << line << '\n';
    }
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split(line);
        if (t.header.empty()) {
            t.header = cells;
            t.columns.assign(cells.size(), {});
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError("expected " + std::to_string(t.header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const char* first = cells[c].data();
            const char* last = first + cells[c].size();
            if (!cells[c].empty() && *first == '+') ++first;
            const auto r = std::from_chars(first, last, v);
            if (cells[c].empty() || r.ec != std::errc{} || r.ptr != last) {
                throw ParseError("not a number: '" + cells[c] + "'", line_no);
            }
            t.columns[c].push_back(v);
        }
    }
    if (t.header.empty()) {
        throw ParseError("empty file", line_no + 1);
    }
    if (t.n_rows() == 0) {
        throw ParseError("no data rows", line_no + 1);
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace vpgd
