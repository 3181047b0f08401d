#pragma once
#include <nlohmann/json.hpp>

#include <vector>

#include "pmt/grid.hpp"

namespace pmt {

// Samples of a 1-periodic function on the shifted DFT lattice
// xi_j = k_j/freq_dims_j - 1/2, row-major in k. Extents must be even so the
// lattice contains the self-conjugate frequencies exactly.
struct SpectralGrid {
    Extents freq_dims;
    std::vector<double> values;
    nlohmann::json meta;

    double xi(int axis, std::int64_t k) const {
        return static_cast<double>(k) / static_cast<double>(freq_dims[static_cast<std::size_t>(axis)]) - 0.5;
    }
    std::int64_t size() const { return flat_size(freq_dims); }
};

struct FieldSample {
    Extents dims;
    std::vector<double> values;
};

void check_freq_dims(const Extents& freq_dims, const Extents& min_dims);

// layout moves between raw DFT order and the shifted lattice above
void fftshift(const std::vector<double>& raw, const Extents& dims, std::vector<double>& shifted);
void ifftshift(const std::vector<double>& shifted, const Extents& dims, std::vector<double>& raw);

} // namespace pmt
