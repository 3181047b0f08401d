#include "pmt/spectral.hpp"

#include <string>

#include "pmt/errors.hpp"

namespace pmt {

void check_freq_dims(const Extents& freq_dims, const Extents& min_dims) {
    if (freq_dims.size() != min_dims.size())
        throw contract_error("freq_dims: dimensionality mismatch");
    for (std::size_t j = 0; j < freq_dims.size(); ++j) {
        if (freq_dims[j] < min_dims[j])
            throw contract_error("freq_dims: must be >= domain extents per axis");
        if (freq_dims[j] % 2 != 0)
            throw contract_error("freq_dims: extents must be even (shifted lattice), got " +
                                 std::to_string(freq_dims[j]));
    }
}

namespace {

// shifted index t <-> raw index (t + n/2) mod n, applied per axis
void shift_copy(const std::vector<double>& src, const Extents& dims, std::vector<double>& dst,
                bool to_shifted) {
    const int d = static_cast<int>(dims.size());
    const std::int64_t total = flat_size(dims);
    dst.resize(static_cast<std::size_t>(total));

    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * dims[static_cast<std::size_t>(j + 1)];

    std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < total; ++flat) {
        std::int64_t other = 0;
        for (int j = 0; j < d; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const std::int64_t n = dims[ju];
            const std::int64_t m = (c[ju] + n / 2) % n;
            other += m * stride[ju];
        }
        // raw index "other" pairs with shifted index "flat" in both directions
        // because n is even, so the mapping is an involution
        if (to_shifted)
            dst[static_cast<std::size_t>(flat)] = src[static_cast<std::size_t>(other)];
        else
            dst[static_cast<std::size_t>(other)] = src[static_cast<std::size_t>(flat)];
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            if (++c[ju] < dims[ju]) break;
            c[ju] = 0;
        }
    }
}

} // namespace

void fftshift(const std::vector<double>& raw, const Extents& dims, std::vector<double>& shifted) {
    shift_copy(raw, dims, shifted, true);
}

void ifftshift(const std::vector<double>& shifted, const Extents& dims, std::vector<double>& raw) {
    shift_copy(shifted, dims, raw, false);
}

} // namespace pmt
