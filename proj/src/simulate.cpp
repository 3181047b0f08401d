#include "pmt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "pmt/errors.hpp"
#include "pmt/fft.hpp"
#include "pmt/rng.hpp"

namespace pmt {

DensitySpec DensitySpec::constant(double sigma2) {
    if (!(sigma2 >= 0.0)) throw contract_error("density: sigma2 must be >= 0");
    DensitySpec s;
    s.kind = Kind::constant;
    s.sigma2 = sigma2;
    return s;
}

DensitySpec DensitySpec::triple_disk() {
    DensitySpec s;
    s.kind = Kind::triple_disk;
    return s;
}

DensitySpec DensitySpec::custom(SpectralGrid grid) {
    DensitySpec s;
    s.kind = Kind::grid;
    s.grid = std::move(grid);
    return s;
}

SpectralGrid DensitySpec::materialize(const Extents& dims) const {
    switch (kind) {
        case Kind::constant: {
            SpectralGrid g;
            g.freq_dims = dims;
            g.values.assign(static_cast<std::size_t>(flat_size(dims)), sigma2);
            g.meta = {{"density", "constant"}, {"sigma2", sigma2}};
            return g;
        }
        case Kind::triple_disk:
            return triple_disk_density(dims);
        default:
            if (grid.freq_dims != dims)
                throw contract_error("density: lattice does not match requested dims");
            return grid;
    }
}

SpectralGrid triple_disk_density(const Extents& freq_dims) {
    check_freq_dims(freq_dims, Extents(freq_dims.size(), 2));
    for (auto n : freq_dims)
        if (n < 64) throw contract_error("triple_disk_density: need >= 64 bins per axis");
    const int d = static_cast<int>(freq_dims.size());
    const std::int64_t fsize = flat_size(freq_dims);

    // disk indicator sampled on the shifted lattice, stored raw for the DFT
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fsize));
    {
        std::vector<double> ind(static_cast<std::size_t>(fsize), 0.0);
        std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
        for (std::int64_t flat = 0; flat < fsize; ++flat) {
            double r2 = 0.0;
            for (int j = 0; j < d; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                const double xi = static_cast<double>(c[ju]) / static_cast<double>(freq_dims[ju]) - 0.5;
                r2 += xi * xi;
            }
            ind[static_cast<std::size_t>(flat)] = (r2 < 1.0 / 64.0) ? 1.0 : 0.0;
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++c[ju] < freq_dims[ju]) break;
                c[ju] = 0;
            }
        }
        std::vector<double> raw;
        ifftshift(ind, freq_dims, raw);
        for (std::int64_t i = 0; i < fsize; ++i) buf[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)];
    }

    fft::forward(buf.data(), freq_dims);
    for (auto& z : buf) z = z * z * z;
    fft::inverse(buf.data(), freq_dims);

    // one 1/fsize for the inverse DFT, cellvol^2 = 1/fsize^2 for the two
    // Riemann-sum convolution layers
    const double scale = 1.0 / (static_cast<double>(fsize) * static_cast<double>(fsize) *
                                static_cast<double>(fsize));
    std::vector<double> raw(static_cast<std::size_t>(fsize));
    double max_imag = 0.0, max_real = 0.0;
    for (std::int64_t i = 0; i < fsize; ++i) {
        const auto z = buf[static_cast<std::size_t>(i)];
        max_imag = std::max(max_imag, std::abs(z.imag()));
        max_real = std::max(max_real, std::abs(z.real()));
        double v = z.real() * scale;
        if (v < 0.0) {
            if (v < -1e-12) throw numeric_error("triple_disk_density: negative value beyond rounding");
            v = 0.0;
        }
        raw[static_cast<std::size_t>(i)] = v;
    }
    if (max_imag > 1e-10 * std::max(1.0, max_real))
        throw numeric_error("triple_disk_density: imaginary residue too large");

    SpectralGrid out;
    out.freq_dims = freq_dims;
    fftshift(raw, freq_dims, out.values);
    out.meta = {{"density", "triple_disk"}, {"disk_radius", 0.125}};
    return out;
}

FieldSample sample_field(const DensitySpec& density, const Extents& dims, std::uint64_t seed) {
    return sample_field(density.materialize(dims), seed);
}

FieldSample sample_field(const SpectralGrid& density, std::uint64_t seed) {
    const Extents& dims = density.freq_dims;
    check_freq_dims(dims, Extents(dims.size(), 2));
    const int d = static_cast<int>(dims.size());
    const std::int64_t fsize = flat_size(dims);

    std::vector<double> S_raw;
    ifftshift(density.values, dims, S_raw);
    for (auto& s : S_raw) {
        if (s < 0.0) {
            if (s < -1e-12) throw contract_error("sample_field: density has negative values");
            s = 0.0;
        }
    }

    // strides for the mirror index -f mod n
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * dims[static_cast<std::size_t>(j + 1)];

    // Hermitian-symmetric unit-variance spectrum: paired bins get a complex
    // normal split across the pair, self-conjugate bins a real normal. Bins are
    // visited in a fixed flat order so the stream is reproducible.
    std::vector<std::complex<double>> A(static_cast<std::size_t>(fsize));
    Rng rng(seed);
    const double inv_sqrt2 = 0.70710678118654752440084436210485;
    std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < fsize; ++flat) {
        std::int64_t mirror = 0;
        for (int j = 0; j < d; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const std::int64_t m = (dims[ju] - c[ju]) % dims[ju];
            mirror += m * stride[ju];
        }
        if (flat < mirror) {
            const double z1 = rng.next_normal();
            const double z2 = rng.next_normal();
            A[static_cast<std::size_t>(flat)] = std::complex<double>(z1 * inv_sqrt2, z2 * inv_sqrt2);
            A[static_cast<std::size_t>(mirror)] = std::conj(A[static_cast<std::size_t>(flat)]);
        } else if (flat == mirror) {
            A[static_cast<std::size_t>(flat)] = rng.next_normal();
        }
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            if (++c[ju] < dims[ju]) break;
            c[ju] = 0;
        }
    }

    // X = IDFT( sqrt(fsize * S) .* A ); expected periodogram = S exactly
    const double fs = static_cast<double>(fsize);
    for (std::int64_t f = 0; f < fsize; ++f)
        A[static_cast<std::size_t>(f)] *= std::sqrt(fs * S_raw[static_cast<std::size_t>(f)]);
    fft::inverse(A.data(), dims);

    FieldSample out;
    out.dims = dims;
    out.values.resize(static_cast<std::size_t>(fsize));
    double max_imag = 0.0, max_real = 0.0;
    for (std::int64_t i = 0; i < fsize; ++i) {
        const auto z = A[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(i)] = z.real() / fs;
        max_imag = std::max(max_imag, std::abs(z.imag()));
        max_real = std::max(max_real, std::abs(z.real()));
    }
    if (max_imag > 1e-8 * std::max(1.0, max_real))
        throw numeric_error("sample_field: Hermitian symmetry violated (imaginary residue)");
    return out;
}

FieldSample synthetic_projection(const Extents& dims, std::uint64_t seed) {
    if (dims.size() != 2) throw contract_error("synthetic_projection: 2-D grids only");
    const std::int64_t N0 = dims[0], N1 = dims[1];
    const double scale_n = static_cast<double>(std::min(N0, N1));
    const double c0 = static_cast<double>(N0) / 2.0;
    const double c1 = static_cast<double>(N1) / 2.0;
    const double support = 0.35 * scale_n;

    constexpr int kBlobs = 12;
    const double amp[kBlobs] = {1.0, 0.8, 0.6, 1.2, 0.9, 1.1, 1.0, 0.8, 0.6, 1.2, 0.9, 1.1};
    const double wid[kBlobs] = {3.0, 4.5, 6.0, 7.5, 3.0, 4.5, 6.0, 7.5, 3.0, 4.5, 6.0, 7.5};

    // seed permutes which (amplitude, width) pair sits on which spiral arm
    int perm[kBlobs];
    std::iota(perm, perm + kBlobs, 0);
    Rng prng(Rng::derive(seed, 1));
    for (int i = kBlobs - 1; i > 0; --i) {
        const int j = static_cast<int>(prng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }

    // golden-angle spiral of centers inside the support disk
    double cx[kBlobs], cy[kBlobs], ca[kBlobs], cw[kBlobs];
    const double golden = 2.39996322972865332;
    for (int i = 0; i < kBlobs; ++i) {
        const double r = (38.0 / 128.0) * scale_n * std::sqrt((i + 0.5) / kBlobs);
        cx[i] = c0 + r * std::cos(golden * i);
        cy[i] = c1 + r * std::sin(golden * i);
        ca[i] = amp[perm[i]];
        cw[i] = wid[perm[i]] * scale_n / 128.0;
    }

    FieldSample out;
    out.dims = dims;
    out.values.assign(static_cast<std::size_t>(N0 * N1), 0.0);
    double energy = 0.0;
    for (std::int64_t i = 0; i < N0; ++i)
        for (std::int64_t j = 0; j < N1; ++j) {
            const double dx = static_cast<double>(i) - c0;
            const double dy = static_cast<double>(j) - c1;
            const double rr = dx * dx + dy * dy;
            if (rr >= support * support) continue;
            const double bump = 1.0 - rr / (support * support);
            double v = 0.0;
            for (int b = 0; b < kBlobs; ++b) {
                const double bx = static_cast<double>(i) - cx[b];
                const double by = static_cast<double>(j) - cy[b];
                v += ca[b] * std::exp(-(bx * bx + by * by) / (2.0 * cw[b] * cw[b]));
            }
            v *= bump * bump;
            out.values[static_cast<std::size_t>(i * N1 + j)] = v;
            energy += v * v;
        }

    // unit-power noise on the same grid carries 12x this energy
    const double target = static_cast<double>(N0 * N1) / 12.0;
    const double gain = std::sqrt(target / energy);
    for (auto& v : out.values) v *= gain;
    return out;
}

} // namespace pmt
