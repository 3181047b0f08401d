#include "pmt/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

#include "pmt/errors.hpp"

namespace pmt::io {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'S', 'G'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (static_cast<std::uint16_t>(p[1]) << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
    return v;
}

} // namespace

void write_grid(const std::string& path, const Extents& dims, const std::vector<double>& values) {
    if (dims.empty()) throw contract_error("grid file: empty dims");
    const std::int64_t n = flat_size(dims);
    if (n != static_cast<std::int64_t>(values.size()))
        throw contract_error("grid file: payload size does not match dims");

    std::string buf;
    buf.reserve(8 + 8 * dims.size() + 8 * values.size());
    buf.append(kMagic, 4);
    put_u16(buf, kVersion);
    put_u16(buf, static_cast<std::uint16_t>(dims.size()));
    for (const auto d : dims) {
        if (d <= 0) throw contract_error("grid file: dims must be positive");
        put_u64(buf, static_cast<std::uint64_t>(d));
    }
    for (const double v : values) put_u64(buf, std::bit_cast<std::uint64_t>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw io_error("short write: " + path);
}

Grid read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failed: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

    if (buf.size() < 8 || std::memcmp(p, kMagic, 4) != 0)
        throw io_error("not a grid file: " + path);
    const std::uint16_t version = get_u16(p + 4);
    if (version != kVersion) throw io_error("unsupported grid file version: " + path);
    const std::uint16_t ndim = get_u16(p + 6);
    if (ndim == 0 || buf.size() < 8 + 8 * static_cast<std::size_t>(ndim))
        throw io_error("truncated grid file header: " + path);

    Grid g;
    std::size_t off = 8;
    std::int64_t n = 1;
    for (std::uint16_t j = 0; j < ndim; ++j, off += 8) {
        const std::uint64_t d = get_u64(p + off);
        if (d == 0 || d > (1ull << 40)) throw io_error("corrupt dims in grid file: " + path);
        g.dims.push_back(static_cast<std::int64_t>(d));
        n *= static_cast<std::int64_t>(d);
    }
    if (buf.size() != off + 8 * static_cast<std::size_t>(n))
        throw io_error("grid file payload length mismatch: " + path);
    g.values.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i, off += 8)
        g.values[static_cast<std::size_t>(i)] = std::bit_cast<double>(get_u64(p + off));
    return g;
}

void write_mask_grid(const std::string& path, const DomainMask& mask) {
    std::vector<double> values(mask.occupancy.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = mask.occupancy[i] ? 1.0 : 0.0;
    write_grid(path, mask.dims, values);
}

DomainMask read_mask_grid(const std::string& path) {
    const Grid g = read_grid(path);
    std::vector<std::uint8_t> occ(g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (g.values[i] == 0.0)
            occ[i] = 0;
        else if (g.values[i] == 1.0)
            occ[i] = 1;
        else
            throw contract_error("mask grid must contain exactly 0.0 / 1.0: " + path);
    }
    return DomainMask::from_occupancy(g.dims, std::move(occ));
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw io_error("short write: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw io_error("invalid JSON: " + path);
    return doc;
}

namespace {
void append_double(std::string& line, double v) {
    char tmp[64];
    const auto res = std::to_chars(tmp, tmp + sizeof(tmp), v);
    line.append(tmp, res.ptr);
}
} // namespace

void write_curve_csv(const std::string& path, const ExperimentCurve& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    std::string line;
    for (std::size_t c = 0; c < curve.columns.size(); ++c) {
        if (c) line.push_back(',');
        line += curve.columns[c];
    }
    out << line << '\n';
    for (const auto& row : curve.rows) {
        line.clear();
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line.push_back(',');
            append_double(line, row[c]);
        }
        out << line << '\n';
    }
    if (!out) throw io_error("short write: " + path);
}

namespace {

bool is_nonneg_integer(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

} // namespace

nlohmann::json validate_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw contract_error("config: document must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "command") {
            if (!value.is_string()) throw contract_error("config: command must be a string");
        } else if (key == "N" || key == "d" || key == "T" || key == "M" || key == "K") {
            if (!is_nonneg_integer(value) || value.get<std::int64_t>() <= 0)
                throw contract_error("config: " + key + " must be a positive integer");
        } else if (key == "seed") {
            if (!is_nonneg_integer(value)) throw contract_error("config: seed must be a nonnegative integer");
        } else if (key == "R" || key == "W") {
            if (!value.is_number()) throw contract_error("config: " + key + " must be a number");
        } else if (key == "radii") {
            if (!value.is_array() || value.empty())
                throw contract_error("config: radii must be a nonempty array");
            for (const auto& r : value)
                if (!r.is_number()) throw contract_error("config: radii entries must be numbers");
        } else if (key == "freq_dims") {
            if (!value.is_array() || value.empty())
                throw contract_error("config: freq_dims must be a nonempty array");
            for (const auto& f : value)
                if (!is_nonneg_integer(f) || f.get<std::int64_t>() <= 0)
                    throw contract_error("config: freq_dims entries must be positive integers");
        } else if (key == "paths") {
            if (!value.is_object()) throw contract_error("config: paths must be an object");
            for (const auto& [pk, pv] : value.items())
                if (!pv.is_string())
                    throw contract_error("config: paths." + pk + " must be a string");
        } else {
            throw contract_error("config: unknown key '" + key + "'");
        }
    }
    if (doc.contains("W") && doc.contains("K"))
        throw contract_error("config: W and K are mutually exclusive");
    if (doc.contains("R") && doc.contains("radii"))
        throw contract_error("config: R and radii are mutually exclusive");
    return doc;
}

nlohmann::json load_config(const std::string& path) { return validate_config(read_json_file(path)); }

} // namespace pmt::io
