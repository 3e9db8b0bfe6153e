#pragma once

#include <string>
#include <vector>

namespace memfit {

/// In-memory CSV contents: a header row plus data rows of raw strings.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or -1.
    int column_index(const std::string& name) const;
};

/// Reads a UTF-8 CSV file with a header row. Comma delimiter; fields may be
/// double-quoted with "" escapes and embedded commas or newlines. CRLF and
/// LF line endings both accepted. Throws IoError if the file cannot be read.
CsvTable read_csv_file(const std::string& path);

CsvTable parse_csv(const std::string& content);

/// Quotes a field if it contains a delimiter, quote, or newline.
std::string csv_escape(const std::string& field);

std::string csv_join(const std::vector<std::string>& fields);

} // namespace memfit
