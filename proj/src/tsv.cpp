#include "gxe/tsv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gxe/error.hpp"

namespace gxe {

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw DataError("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
    if (s == "NA" || s == "nan" || s == "NaN") return std::nan("");
    if (s == "-inf") return -INFINITY;
    if (s == "inf" || s == "+inf") return INFINITY;
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw DataError("cannot parse number: '" + s + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

TsvTable TsvTable::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    TsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header && line[0] == '#') {
            std::size_t skip = 1;
            if (line.size() > 1 && line[1] == ' ') skip = 2;
            t.comments.push_back(line.substr(skip));
            continue;
        }
        if (!have_header) {
            t.header = split_fields(line);
            have_header = true;
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != t.header.size())
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected " + std::to_string(t.header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw DataError(path.string() + ": missing header row");
    return t;
}

void TsvTable::write(const std::filesystem::path& path) const {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "\t" : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "\t" : "") << row[i];
        out << '\n';
    }
    write_file(path, out.str());
}

std::size_t TsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("missing column '" + name + "'");
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write file: " + path.string());
        out << contents;
        if (!out) throw DataError("write failed: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gxe
