#pragma once

#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace commentlab {

using json = nlohmann::json;

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + path);
    return out;
}

inline std::string read_file(const std::string& path) {
    auto in = open_input(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Calls `fn(object, line_number)` for every non-blank line of a JSON Lines file.
inline void for_each_jsonl(const std::string& path, const std::function<void(const json&, std::size_t)>& fn) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json value;
        try {
            value = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        try {
            fn(value, lineno);
        } catch (const json::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

/// Tab-separated rows; blank lines and lines starting with '#' are skipped.
inline std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace commentlab
