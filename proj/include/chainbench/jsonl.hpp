#pragma once

#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace chainbench {

using Json = nlohmann::json;

struct JsonlError : std::runtime_error {
    JsonlError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

// Calls row_fn for every non-blank line. A malformed line goes to err_fn when
// given (so callers can count and skip), otherwise throws.
inline void for_each_jsonl(
    const std::string& path,
    const std::function<void(const Json&, std::size_t)>& row_fn,
    const std::function<void(std::size_t, const std::string&)>& err_fn = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char c : line)
            if (c != ' ' && c != '\t') { blank = false; break; }
        if (blank) continue;
        Json row = Json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            if (err_fn) err_fn(lineno, "invalid JSON");
            else throw JsonlError(path, lineno, "invalid JSON");
            continue;
        }
        row_fn(row, lineno);
    }
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path, bool append = false)
        : out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
        if (!out_) throw std::runtime_error("cannot write file: " + path);
    }

    void write(const Json& row) {
        out_ << row.dump() << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

}  // namespace chainbench
