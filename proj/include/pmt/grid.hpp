#pragma once
#include <cstdint>
#include <vector>

namespace pmt {

using Extents = std::vector<std::int64_t>;

std::int64_t flat_size(const Extents& dims);

// Occupancy mask over the box grid {0..N_1-1} x ... x {0..N_d-1}, row-major.
// n_omega / n_boundary are cached at construction; sites lists the flat indices
// of occupied cells in ascending order, which is the canonical site order used
// by every operator and taper in this library.
struct DomainMask {
    Extents dims;
    std::vector<std::uint8_t> occupancy;
    std::int64_t n_omega = 0;
    std::int64_t n_boundary = 0;
    std::vector<std::int64_t> sites;

    static DomainMask from_occupancy(Extents dims, std::vector<std::uint8_t> occ);

    int d() const { return static_cast<int>(dims.size()); }
    std::int64_t total() const { return flat_size(dims); }
    bool at(std::int64_t flat) const { return occupancy[static_cast<std::size_t>(flat)] != 0; }
};

// recount of the cached value; sum over axes of occupancy transitions, with the
// mask extended by zero outside the grid so border cells count
std::int64_t digital_perimeter(const DomainMask& mask);

// 2-D families used throughout: strict inequalities, center (N/2, N/2)
DomainMask disk_mask(std::int64_t N, double R);
DomainMask disk_complement_mask(std::int64_t N, double R);

struct Rect {
    Extents offset;
    Extents dims;
};

// Union of the four corner triangles {q : |q - N*a|_1 < N/2 - R/sqrt(2)},
// a in {0,1}^2, plus the bounding square of each triangle (the rectangles a
// tensor-taper estimator runs on; they stay inside the disk complement).
struct CornerSubgrids {
    DomainMask mask;
    std::vector<Rect> rects;
};

CornerSubgrids corner_subgrids_mask(std::int64_t N, double R);

} // namespace pmt
