#pragma once

// Line-oriented key/value text format shared by manifests, phantom specs,
// pipeline configs and reports.
//
//   # comment
//   key = value
//   key = value          (repeated keys are kept in order)
//   ---                  (optional: everything after is the body)
//   body line
//
// Keys and values are trimmed. Body lines are trimmed and blank ones are
// skipped; comments are only recognized in the header.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "chestseg/grid.hpp"

namespace chestseg {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
    text = detail::trim(text);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error(context + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

inline std::int64_t parse_int(std::string_view text, const std::string& context) {
    text = detail::trim(text);
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error(context + ": expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

class KeyValueDoc {
public:
    std::string source = "<memory>";
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<std::string> body;

    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        entries.emplace_back(key, std::move(value));
    }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
    void add(const std::string& key, std::string value) {
        entries.emplace_back(key, std::move(value));
    }

    bool has(const std::string& key) const { return get(key).has_value(); }

    /// Last value for `key`, if any.
    std::optional<std::string> get(const std::string& key) const {
        std::optional<std::string> out;
        for (const auto& [k, v] : entries) {
            if (k == key) out = v;
        }
        return out;
    }

    std::vector<std::string> get_all(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries) {
            if (k == key) out.push_back(v);
        }
        return out;
    }

    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v) throw Error(source + ": missing required key '" + key + "'");
        return *v;
    }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? parse_double(*v, source + ": key '" + key + "'") : fallback;
    }
    double require_double(const std::string& key) const {
        return parse_double(require(key), source + ": key '" + key + "'");
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto v = get(key);
        return v ? parse_int(*v, source + ": key '" + key + "'") : fallback;
    }
    std::int64_t require_int(const std::string& key) const {
        return parse_int(require(key), source + ": key '" + key + "'");
    }
};

inline KeyValueDoc parse_key_values(std::string_view text, std::string source = "<memory>") {
    KeyValueDoc doc;
    doc.source = std::move(source);
    bool in_body = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const auto line = detail::trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        if (in_body) {
            doc.body.emplace_back(line);
            continue;
        }
        if (line.front() == '#') continue;
        if (line == "---") {
            in_body = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(doc.source + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + std::string(line) + "'");
        }
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) {
            throw Error(doc.source + ":" + std::to_string(line_no) + ": empty key");
        }
        doc.entries.emplace_back(std::string(key), std::string(detail::trim(line.substr(eq + 1))));
    }
    return doc;
}

inline std::string to_string(const KeyValueDoc& doc) {
    std::ostringstream out;
    for (const auto& [k, v] : doc.entries) out << k << " = " << v << '\n';
    if (!doc.body.empty()) {
        out << "---\n";
        for (const auto& line : doc.body) out << line << '\n';
    }
    return out.str();
}

inline KeyValueDoc read_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str(), path.string());
}

inline void write_key_value_file(const std::filesystem::path& path, const KeyValueDoc& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << to_string(doc);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace chestseg
