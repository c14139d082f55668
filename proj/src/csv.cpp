#include "refshape/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace refshape {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::invalid_argument("CsvTable: no column named '" + name + "'");
}

std::string CsvTable::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    char buf[48];
    for (const std::vector<double>& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof(buf), "%.9g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::filesystem::path& file, const CsvTable& table) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_csv: cannot open " + file.string());
    }
    out << table.to_string();
    if (!out) {
        throw std::runtime_error("write_csv: failed writing " + file.string());
    }
}

CsvTable read_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_csv: cannot open " + file.string());
    }
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string field;
        if (line_no == 1) {
            while (std::getline(fields, field, ',')) table.header.push_back(field);
            continue;
        }
        std::vector<double> row;
        while (std::getline(fields, field, ',')) {
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw std::runtime_error("read_csv: " + file.string() + " line " +
                                         std::to_string(line_no) + ": bad number '" + field +
                                         "'");
            }
        }
        if (row.size() != table.header.size()) {
            throw std::runtime_error("read_csv: " + file.string() + " line " +
                                     std::to_string(line_no) + ": expected " +
                                     std::to_string(table.header.size()) + " fields");
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) {
        throw std::runtime_error("read_csv: " + file.string() + " is empty");
    }
    return table;
}

}  // namespace refshape
