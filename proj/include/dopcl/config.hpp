#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dopcl/errors.hpp"

namespace dopcl {

// Flat key-value configuration text: one `key = value` pair per line,
// `#` starts a comment, blank lines ignored. Values keep everything after
// the first '=' (trimmed). Duplicate keys are rejected.
class Config {
public:
    Config() = default;

    static Config from_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw parse_error(origin + ": expected 'key = value'", line_no, 1);
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw parse_error(origin + ": empty key", line_no, 1);
            if (cfg.entries_.count(key))
                throw parse_error(origin + ": duplicate key '" + key + "'", line_no, 1);
            cfg.entries_[key] = Entry{value, line_no};
        }
        return cfg;
    }

    static Config load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str(), path.string());
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string str(const std::string& key) const { return require(key).value; }

    std::string str_or(const std::string& key, const std::string& fallback) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    double number(const std::string& key) const {
        const Entry& e = require(key);
        return parse_double(e.value, key, e.line);
    }

    double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::int64_t integer(const std::string& key) const {
        const Entry& e = require(key);
        std::int64_t value = 0;
        const char* begin = e.value.data();
        const char* end = begin + e.value.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end)
            throw parse_error(origin_ + ": expected an integer for '" + key + "', got '" +
                                  e.value + "'",
                              e.line, 1);
        return value;
    }

    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Entry& e = require(key);
        if (e.value == "true" || e.value == "1" || e.value == "on") return true;
        if (e.value == "false" || e.value == "0" || e.value == "off") return false;
        throw parse_error(origin_ + ": expected true/false for '" + key + "'", e.line, 1);
    }

    std::vector<double> number_list(const std::string& key) const {
        const Entry& e = require(key);
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(parse_double(trim(cell), key, e.line));
        if (out.empty())
            throw parse_error(origin_ + ": empty list for '" + key + "'", e.line, 1);
        return out;
    }

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [key, entry] : entries_)
            if (key.rfind(prefix, 0) == 0) out.push_back(key);
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return "";
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    const Entry& require(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end())
            throw std::runtime_error(origin_ + ": missing required key '" + key + "'");
        return it->second;
    }

    double parse_double(const std::string& text, const std::string& key, std::size_t line) const {
        double value = 0.0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end)
            throw parse_error(origin_ + ": expected a number for '" + key + "', got '" + text + "'",
                              line, 1);
        return value;
    }

    std::map<std::string, Entry> entries_;
    std::string origin_ = "<empty>";
};

}  // namespace dopcl
