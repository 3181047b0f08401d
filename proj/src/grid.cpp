#include "pmt/grid.hpp"
#include "pmt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmt {

std::int64_t flat_size(const Extents& dims) {
    std::int64_t p = 1;
    for (auto n : dims) p *= n;
    return p;
}

DomainMask DomainMask::from_occupancy(Extents dims, std::vector<std::uint8_t> occ) {
    if (dims.empty()) throw contract_error("mask: dims must be nonempty");
    for (auto n : dims)
        if (n <= 0) throw contract_error("mask: extents must be positive");
    if (static_cast<std::int64_t>(occ.size()) != flat_size(dims))
        throw contract_error("mask: occupancy size does not match dims");

    DomainMask m;
    m.dims = std::move(dims);
    m.occupancy = std::move(occ);
    for (std::int64_t i = 0; i < m.total(); ++i)
        if (m.occupancy[static_cast<std::size_t>(i)]) m.sites.push_back(i);
    m.n_omega = static_cast<std::int64_t>(m.sites.size());
    if (m.n_omega == 0) throw domain_error("mask: empty domain");
    m.n_boundary = digital_perimeter(m);
    return m;
}

std::int64_t digital_perimeter(const DomainMask& mask) {
    if (mask.occupancy.empty()) throw domain_error("digital_perimeter: empty mask");
    const int d = mask.d();
    const std::int64_t total = mask.total();

    // row-major strides
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * mask.dims[static_cast<std::size_t>(j + 1)];

    std::int64_t perim = 0;
    std::vector<std::int64_t> coord(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < total; ++flat) {
        const int cur = mask.occupancy[static_cast<std::size_t>(flat)] ? 1 : 0;
        for (int j = 0; j < d; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            // transition into this cell from its predecessor along axis j
            const int prev = coord[ju] > 0
                                 ? (mask.occupancy[static_cast<std::size_t>(flat - stride[ju])] ? 1 : 0)
                                 : 0;
            perim += std::abs(cur - prev);
            // falling edge at the far border
            if (coord[ju] == mask.dims[ju] - 1) perim += cur;
        }
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            if (++coord[ju] < mask.dims[ju]) break;
            coord[ju] = 0;
        }
    }
    return perim;
}

namespace {

DomainMask disk_like(std::int64_t N, double R, bool inside) {
    if (N < 2) throw contract_error("disk mask: N must be >= 2");
    if (R < 0) throw contract_error("disk mask: R must be >= 0");
    const double c = static_cast<double>(N) / 2.0;
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(N * N), 0);
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < N; ++i)
        for (std::int64_t j = 0; j < N; ++j) {
            const double dist = std::hypot(static_cast<double>(i) - c, static_cast<double>(j) - c);
            const bool in = inside ? (dist < R) : (dist > R);
            if (in) {
                occ[static_cast<std::size_t>(i * N + j)] = 1;
                ++count;
            }
        }
    if (count == 0)
        throw domain_error(inside ? "disk_mask: empty (R too small)"
                                  : "disk_complement_mask: empty (R covers the grid)");
    return DomainMask::from_occupancy({N, N}, std::move(occ));
}

} // namespace

DomainMask disk_mask(std::int64_t N, double R) { return disk_like(N, R, true); }

DomainMask disk_complement_mask(std::int64_t N, double R) { return disk_like(N, R, false); }

CornerSubgrids corner_subgrids_mask(std::int64_t N, double R) {
    if (N < 2) throw contract_error("corner_subgrids_mask: N must be >= 2");
    const double tau = static_cast<double>(N) / 2.0 - R / std::sqrt(2.0);
    if (!(tau > 1.0)) throw domain_error("corner_subgrids_mask: corners empty (N/2 - R/sqrt(2) <= 1)");

    std::vector<std::uint8_t> occ(static_cast<std::size_t>(N * N), 0);
    // per corner a in {0,1}^2: bounding box of {q : |q - N*a|_1 < tau}
    std::vector<std::int64_t> lo0(4, std::numeric_limits<std::int64_t>::max()), lo1 = lo0;
    std::vector<std::int64_t> hi0(4, -1), hi1(4, -1);
    for (std::int64_t i = 0; i < N; ++i)
        for (std::int64_t j = 0; j < N; ++j)
            for (int a = 0; a < 4; ++a) {
                const std::int64_t ai = (a & 1) ? N : 0;
                const std::int64_t aj = (a & 2) ? N : 0;
                const double l1 = static_cast<double>(std::abs(i - ai) + std::abs(j - aj));
                if (l1 < tau) {
                    occ[static_cast<std::size_t>(i * N + j)] = 1;
                    lo0[static_cast<std::size_t>(a)] = std::min(lo0[static_cast<std::size_t>(a)], i);
                    hi0[static_cast<std::size_t>(a)] = std::max(hi0[static_cast<std::size_t>(a)], i);
                    lo1[static_cast<std::size_t>(a)] = std::min(lo1[static_cast<std::size_t>(a)], j);
                    hi1[static_cast<std::size_t>(a)] = std::max(hi1[static_cast<std::size_t>(a)], j);
                }
            }

    CornerSubgrids out;
    out.mask = DomainMask::from_occupancy({N, N}, std::move(occ));
    for (int a = 0; a < 4; ++a) {
        const auto au = static_cast<std::size_t>(a);
        if (hi0[au] < 0) throw domain_error("corner_subgrids_mask: corner " + std::to_string(a) + " empty");
        Rect r;
        r.offset = {lo0[au], lo1[au]};
        r.dims = {hi0[au] - lo0[au] + 1, hi1[au] - lo1[au] + 1};
        out.rects.push_back(std::move(r));
    }
    return out;
}

} // namespace pmt
