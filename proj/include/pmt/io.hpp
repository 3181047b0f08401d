#pragma once
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "pmt/experiments.hpp"
#include "pmt/grid.hpp"

namespace pmt::io {

// Binary grid container. Layout, all little-endian regardless of host:
//   magic "MTSG" | u16 version=1 | u16 ndim | ndim x u64 dims | row-major f64
struct Grid {
    Extents dims;
    std::vector<double> values;
};

void write_grid(const std::string& path, const Extents& dims, const std::vector<double>& values);
Grid read_grid(const std::string& path);

// masks serialize with exact 0.0 / 1.0 payloads
void write_mask_grid(const std::string& path, const DomainMask& mask);
DomainMask read_mask_grid(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

// '.' decimal point, ',' separator, one header row; floats shortest-round-trip
void write_curve_csv(const std::string& path, const ExperimentCurve& curve);

// Strict run-configuration schema: top-level keys limited to
//   command, N, d, R, radii, W, K, T, M, seed, freq_dims, paths
// with W|K and R|radii mutually exclusive; unknown keys rejected before any
// compute. Returns the validated document.
nlohmann::json validate_config(const nlohmann::json& doc);
nlohmann::json load_config(const std::string& path);

} // namespace pmt::io
