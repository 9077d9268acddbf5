#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace s2c::io {

using Json = nlohmann::json;

// shortest decimal that round-trips to the same double
std::string fmt(double v);

// Comma-separated table kept in memory until written.
class Csv {
public:
    explicit Csv(std::vector<std::string> columns);
    Csv& row(const std::vector<double>& values);
    // mixed row; numbers already formatted by the caller
    Csv& row_text(const std::vector<std::string>& cells);
    std::size_t rows() const { return rows_; }
    const std::string& text() const { return text_; }

private:
    std::size_t width_;
    std::size_t rows_ = 0;
    std::string text_;
};

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);
// hash of the canonical (key-sorted, compact) serialization
std::string json_hash(const Json& j);

// Creates the directory if needed and checks that a file can be created in it.
void ensure_writable_dir(const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
// pretty-printed with a trailing newline
void write_json(const std::filesystem::path& path, const Json& j);

// The critical constant with the settings that produced it.
struct Fixture {
    double T = 0.0;
    std::string method;
    double tolerance = 0.0;
    double t_max = 30.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double separatrix_T = 0.0;
    double q_max = 100.0;

    Json settings() const;  // {method, tolerance, t_max, q_max}
    std::string settings_hash() const { return json_hash(settings()); }
    Json to_json() const;
    // hash of the full serialized fixture; embedded in reports
    std::string hash() const { return json_hash(to_json()); }
};

// Throws io_error on unreadable files, missing fields, or a settings hash that
// does not match the stored settings.
Fixture read_fixture(const std::filesystem::path& path);
void write_fixture(const std::filesystem::path& path, const Fixture& f);

}  // namespace s2c::io
