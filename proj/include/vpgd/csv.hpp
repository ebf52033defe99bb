#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vpgd {

/// Header row plus numeric columns of equal length.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t n_rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    /// Column by header name; throws ParseError(line 1) when absent.
    const std::vector<double>& column(const std::string& name) const;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Writes shortest round-trip decimal representations, so equal values give identical bytes.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Parses a header row and numeric data rows. Throws ParseError with the 1-based line number
/// on ragged rows, non-numeric cells or a missing data section; ConfigError when unreadable.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

}  // namespace vpgd
