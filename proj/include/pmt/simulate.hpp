#pragma once
#include <cstdint>

#include "pmt/grid.hpp"
#include "pmt/spectral.hpp"

namespace pmt {

// Target spectral density for the synthesizer: flat, the smooth compactly
// supported test density (triple self-convolution of a disk indicator), or an
// arbitrary nonnegative lattice.
struct DensitySpec {
    enum class Kind { constant, triple_disk, grid };

    Kind kind = Kind::constant;
    double sigma2 = 1.0;
    SpectralGrid grid;

    static DensitySpec constant(double sigma2);
    static DensitySpec triple_disk();
    static DensitySpec custom(SpectralGrid grid);

    SpectralGrid materialize(const Extents& dims) const;
};

// (1_{|xi|<1/8} * 1_{|xi|<1/8} * 1_{|xi|<1/8}) on the shifted lattice, cyclic
// convolutions with cell-volume weights so values approximate the continuous
// convolution; support radius 3/8
SpectralGrid triple_disk_density(const Extents& freq_dims);

// Circulant synthesis: Hermitian-symmetric complex Gaussian spectrum scaled by
// sqrt(S), inverse DFT. Normalized so the expected full-grid periodogram equals
// S at every bin. Bit-reproducible per seed.
FieldSample sample_field(const DensitySpec& density, const Extents& dims, std::uint64_t seed);
FieldSample sample_field(const SpectralGrid& density, std::uint64_t seed);

// Deterministic smooth blob mixture, hard-supported in the disk of radius
// 0.35*N about the grid center; blob amplitude/width assignment permuted by
// seed; energy normalized so unit-power noise outweighs it 12:1.
FieldSample synthetic_projection(const Extents& dims, std::uint64_t seed);

} // namespace pmt
