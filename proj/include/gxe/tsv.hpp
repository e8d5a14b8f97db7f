#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gxe {

// Shortest round-trip decimal representation of a double. "NA" for NaN.
std::string format_double(double v);

// Parses a double; "NA" yields NaN. Throws DataError on garbage.
double parse_double(const std::string& s);

std::vector<std::string> split_fields(const std::string& line);

// Tab-separated table with one header row. Lines starting with '#' before
// the header are kept as metadata comments.
struct TsvTable {
    std::vector<std::string> comments;  // without the leading "# "
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static TsvTable read(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;

    std::size_t column_index(const std::string& name) const;  // throws DataError
};

// Atomic-ish file write: writes to <path>.tmp then renames.
void write_file(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace gxe
