#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace refshape {

/// Header row plus numeric rows; values are written with 9 significant
/// digits, comma-separated, '.' decimal point, LF endings.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a header column; throws if absent.
    std::size_t column(const std::string& name) const;

    std::string to_string() const;
};

void write_csv(const std::filesystem::path& file, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& file);

}  // namespace refshape
