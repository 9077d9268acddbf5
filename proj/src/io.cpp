#include "s2cubic/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "s2cubic/errors.hpp"

namespace s2c::io {

namespace fs = std::filesystem;

std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

Csv::Csv(std::vector<std::string> columns) : width_(columns.size())
{
    if (columns.empty()) throw Error(Errc::invalid_argument, "csv needs at least one column");
    for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
    text_ += '\n';
}

Csv& Csv::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt(v));
    return row_text(cells);
}

Csv& Csv::row_text(const std::vector<std::string>& cells)
{
    if (cells.size() != width_) throw Error(Errc::invalid_argument, "csv row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
    ++rows_;
    return *this;
}

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xf];
    return s;
}

std::string json_hash(const Json& j) { return hex64(fnv1a(j.dump())); }

void ensure_writable_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(Errc::io_error, "cannot create output directory " + dir.string());
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw Error(Errc::io_error, "output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw Error(Errc::io_error, "write failed for " + path.string());
}

std::string read_text(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json Fixture::settings() const
{
    return Json{{"method", method}, {"tolerance", tolerance}, {"t_max", t_max}, {"q_max", q_max}};
}

Json Fixture::to_json() const
{
    return Json{{"T", T},
                {"method", method},
                {"tolerance", tolerance},
                {"t_max", t_max},
                {"q_max", q_max},
                {"bracket_lo", bracket_lo},
                {"bracket_hi", bracket_hi},
                {"separatrix_T", separatrix_T},
                {"settings_hash", settings_hash()}};
}

Fixture read_fixture(const fs::path& path)
{
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw Error(Errc::io_error, "fixture " + path.string() + " is not valid JSON: " + e.what());
    }
    Fixture f;
    try {
        f.T = j.at("T").get<double>();
        f.method = j.at("method").get<std::string>();
        f.tolerance = j.at("tolerance").get<double>();
        f.t_max = j.at("t_max").get<double>();
        f.q_max = j.at("q_max").get<double>();
        f.bracket_lo = j.at("bracket_lo").get<double>();
        f.bracket_hi = j.at("bracket_hi").get<double>();
        f.separatrix_T = j.at("separatrix_T").get<double>();
        const auto stored = j.at("settings_hash").get<std::string>();
        if (stored != f.settings_hash())
            throw Error(Errc::io_error, "fixture settings hash mismatch in " + path.string() + ": stored " + stored +
                                            ", computed " + f.settings_hash());
    } catch (const Json::exception& e) {
        throw Error(Errc::io_error, "fixture " + path.string() + " is missing fields: " + e.what());
    }
    if (!(f.T > 0.0) || !(f.tolerance > 0.0)) throw Error(Errc::io_error, "fixture " + path.string() + " has invalid values");
    return f;
}

void write_fixture(const fs::path& path, const Fixture& f) { write_json(path, f.to_json()); }

}  // namespace s2c::io
