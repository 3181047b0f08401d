#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "pmt/errors.hpp"
#include "pmt/estimator.hpp"
#include "pmt/grid.hpp"
#include "pmt/rng.hpp"
#include "pmt/simulate.hpp"
#include "pmt/spectral.hpp"
#include "pmt/tapers.hpp"

using namespace pmt;

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

// continuous triple convolution at the origin: integrate the lens area of two
// radius-r disks at separation t against the disk measure 2*pi*t dt
double triple_disk_dc_oracle(double r) {
    auto lens = [r](double t) {
        if (t >= 2.0 * r) return 0.0;
        return 2.0 * r * r * std::acos(t / (2.0 * r)) - (t / 2.0) * std::sqrt(4.0 * r * r - t * t);
    };
    const int n = 4096;
    const double h = r / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = h * static_cast<double>(i);
        const double f = lens(t) * 2.0 * kPi * t;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f;
    }
    return acc * h / 3.0;
}

DomainMask full_mask(Extents dims) {
    return DomainMask::from_occupancy(dims, std::vector<std::uint8_t>(static_cast<std::size_t>(flat_size(dims)), 1));
}

} // namespace

TEST_SUITE("simulate") {

TEST_CASE("triple-disk density is supported near the origin") {
    const std::int64_t n = 128;
    auto S = triple_disk_density({n, n});
    const double cell = 1.0 / static_cast<double>(n);
    double peak = 0.0;
    for (double v : S.values) peak = std::max(peak, v);
    for (std::int64_t a = 0; a < n; ++a)
        for (std::int64_t b = 0; b < n; ++b) {
            const double xa = S.xi(0, a), xb = S.xi(1, b);
            if (std::hypot(xa, xb) > 3.0 / 8.0 + cell)
                CHECK(std::abs(S.values[static_cast<std::size_t>(a * n + b)]) <= 1e-12 * peak);
        }
}

TEST_CASE("triple-disk density matches the quadrature oracle at zero") {
    const std::int64_t n = 256;
    auto S = triple_disk_density({n, n});
    const double got = S.values[static_cast<std::size_t>((n / 2) * n + n / 2)];
    const double want = triple_disk_dc_oracle(0.125);
    CHECK(std::abs(got - want) / want <= 0.01);
}

TEST_CASE("triple-disk density is radially symmetric") {
    const std::int64_t n = 128;
    auto S = triple_disk_density({n, n});
    auto at = [&](std::int64_t a, std::int64_t b) {
        return S.values[static_cast<std::size_t>((n / 2 + a) * n + n / 2 + b)];
    };
    const double peak = at(0, 0);
    // the dihedral symmetry group of the lattice is exact
    for (auto [a, b] : std::vector<std::pair<std::int64_t, std::int64_t>>{{3, 7}, {10, 2}, {14, 5}}) {
        const double v = at(a, b);
        for (auto [c, d] : std::vector<std::pair<std::int64_t, std::int64_t>>{
                 {b, a}, {-a, b}, {a, -b}, {-b, -a}}) {
            CHECK(std::abs(at(c, d) - v) <= 1e-12 * peak);
        }
    }
    // equal radii off the symmetry orbit agree up to discretization
    CHECK(std::abs(at(5, 0) - at(3, 4)) <= 0.02 * peak);
    CHECK(std::abs(at(10, 0) - at(6, 8)) <= 0.02 * peak);
}

TEST_CASE("flat density reproduces its variance") {
    const double sigma2 = 2.3;
    auto f = sample_field(DensitySpec::constant(sigma2), {256, 256}, 71);
    double s1 = 0, s2 = 0;
    for (double v : f.values) {
        s1 += v;
        s2 += v * v;
    }
    const auto n = static_cast<double>(f.values.size());
    const double var = s2 / n - (s1 / n) * (s1 / n);
    CHECK(std::abs(var - sigma2) / sigma2 <= 0.03);
}

TEST_CASE("sampled autocovariance matches the density transform") {
    const std::int64_t n = 64;
    const std::int64_t fs = n * n;
    auto S = triple_disk_density({n, n});
    // truth: inverse transform of the raw-order density over the same lattice
    std::vector<double> raw;
    ifftshift(S.values, {n, n}, raw);
    const int M = 64;
    std::vector<double> mean(static_cast<std::size_t>(fs), 0.0), m2(static_cast<std::size_t>(fs), 0.0);
    for (int rseed = 0; rseed < M; ++rseed) {
        auto f = sample_field(S, Rng::derive(501, static_cast<std::uint64_t>(rseed)));
        // circular empirical autocovariance over the full grid
        std::vector<double> rhat(static_cast<std::size_t>(fs), 0.0);
        for (std::int64_t qi = 0; qi < n; ++qi)
            for (std::int64_t qj = 0; qj < n; ++qj) {
                double acc = 0.0;
                for (std::int64_t pi = 0; pi < n; ++pi) {
                    const std::int64_t ti = (pi + qi) % n;
                    const double* row = f.values.data() + pi * n;
                    const double* trow = f.values.data() + ti * n;
                    for (std::int64_t pj = 0; pj < n; ++pj)
                        acc += row[pj] * trow[(pj + qj) % n];
                }
                rhat[static_cast<std::size_t>(qi * n + qj)] = acc / static_cast<double>(fs);
            }
        for (std::size_t i = 0; i < rhat.size(); ++i) {
            mean[i] += rhat[i] / M;
            m2[i] += rhat[i] * rhat[i] / M;
        }
    }
    for (std::int64_t qi = 0; qi < n; ++qi)
        for (std::int64_t qj = 0; qj < n; ++qj) {
            double truth = 0.0;
            for (std::int64_t bi = 0; bi < n; ++bi)
                for (std::int64_t bj = 0; bj < n; ++bj)
                    truth += raw[static_cast<std::size_t>(bi * n + bj)] *
                             std::cos(2.0 * kPi *
                                      (static_cast<double>(bi * qi) / n + static_cast<double>(bj * qj) / n));
            truth /= static_cast<double>(fs);
            const auto i = static_cast<std::size_t>(qi * n + qj);
            const double var = m2[i] - mean[i] * mean[i];
            const double se = std::sqrt(std::max(var, 1e-30) / M);
            CHECK(std::abs(mean[i] - truth) <= 5.0 * se + 1e-12);
        }
}

TEST_CASE("averaged multitaper estimates track the smoothed density") {
    const std::int64_t n = 64;
    auto S = triple_disk_density({n, n});
    auto full = full_mask({n, n});
    auto bw = make_bandwidth_from_K(128, full);
    auto tp = proxy_tapers(full, bw, 2, 52);
    auto rho = accumulated_spectral_window(tp, {n, n});
    // expected estimate: cyclic lattice convolution of S with the window
    std::vector<double> sraw, rhoraw;
    ifftshift(S.values, {n, n}, sraw);
    ifftshift(rho.values, {n, n}, rhoraw);
    const std::int64_t fs = n * n;
    std::vector<double> expect_raw(static_cast<std::size_t>(fs), 0.0);
    for (std::int64_t ai = 0; ai < n; ++ai)
        for (std::int64_t aj = 0; aj < n; ++aj) {
            double acc = 0.0;
            for (std::int64_t bi = 0; bi < n; ++bi) {
                const std::int64_t di = (ai - bi + n) % n;
                for (std::int64_t bj = 0; bj < n; ++bj)
                    acc += sraw[static_cast<std::size_t>(bi * n + bj)] *
                           rhoraw[static_cast<std::size_t>(di * n + (aj - bj + n) % n)];
            }
            expect_raw[static_cast<std::size_t>(ai * n + aj)] = acc / static_cast<double>(fs);
        }
    std::vector<double> expect;
    fftshift(expect_raw, {n, n}, expect);

    const int M = 64;
    std::vector<double> mean(static_cast<std::size_t>(fs), 0.0);
    for (int r = 0; r < M; ++r) {
        auto f = sample_field(S, Rng::derive(53, static_cast<std::uint64_t>(r)));
        auto est = multitaper_estimate(f, tp, {n, n});
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += est.values[i] / M;
    }
    double peak = 0.0;
    for (double v : expect) peak = std::max(peak, v);
    for (std::size_t i = 0; i < mean.size(); ++i)
        if (expect[i] >= 0.1 * peak) CHECK(std::abs(mean[i] - expect[i]) / expect[i] <= 0.05);
}

TEST_CASE("projection images vanish outside the center disk") {
    const std::int64_t N = 128;
    auto p = synthetic_projection({N, N}, 9);
    const double r0 = 0.35 * static_cast<double>(N);
    for (std::int64_t i = 0; i < N; ++i)
        for (std::int64_t j = 0; j < N; ++j) {
            const double d = std::hypot(static_cast<double>(i) - 64.0, static_cast<double>(j) - 64.0);
            if (d >= r0) CHECK(p.values[static_cast<std::size_t>(i * N + j)] == 0.0);
        }
}

TEST_CASE("projection energy sits well under the unit noise floor") {
    const std::int64_t N = 128;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto p = synthetic_projection({N, N}, seed);
        double energy = 0.0;
        for (double v : p.values) energy += v * v;
        // unit-variance noise carries energy N^2 in expectation
        CHECK(energy <= static_cast<double>(N * N) / 10.0);
        CHECK(energy > 0.0);
    }
}

TEST_CASE("sampling is deterministic in the seed") {
    auto S = DensitySpec::triple_disk();
    auto a = sample_field(S, {64, 64}, 1001);
    auto b = sample_field(S, {64, 64}, 1001);
    auto c = sample_field(S, {64, 64}, 1002);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    auto p1 = synthetic_projection({64, 64}, 7);
    auto p2 = synthetic_projection({64, 64}, 7);
    CHECK(p1.values == p2.values);
}

TEST_CASE("samples are Gaussian to fourth order") {
    double s1 = 0, s2 = 0, s4 = 0;
    std::int64_t n = 0;
    for (std::uint64_t seed : {61u, 62u}) {
        auto f = sample_field(DensitySpec::constant(1.0), {256, 256}, seed);
        for (double v : f.values) {
            s1 += v;
            s2 += v * v;
            s4 += v * v * v * v;
        }
        n += static_cast<std::int64_t>(f.values.size());
    }
    const double mean = s1 / static_cast<double>(n);
    const double var = s2 / static_cast<double>(n) - mean * mean;
    const double kurt = (s4 / static_cast<double>(n)) / (var * var);
    CHECK(kurt >= 2.8);
    CHECK(kurt <= 3.2);
}

TEST_CASE("average periodogram converges to the density") {
    const std::int64_t n = 64;
    auto S = triple_disk_density({n, n});
    auto full = full_mask({n, n});
    const int M = 128;
    std::vector<double> mean(static_cast<std::size_t>(n * n), 0.0), m2 = mean;
    for (int r = 0; r < M; ++r) {
        auto f = sample_field(S, Rng::derive(81, static_cast<std::uint64_t>(r)));
        auto est = mper_estimate(f, full, {n, n});
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += est.values[i] / M;
            m2[i] += est.values[i] * est.values[i] / M;
        }
    }
    double peak = 0.0;
    for (double v : S.values) peak = std::max(peak, v);
    double rel_sum = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (S.values[i] < 0.1 * peak) continue;
        const double se = std::sqrt(std::max(m2[i] - mean[i] * mean[i], 1e-30) / M);
        CHECK(std::abs(mean[i] - S.values[i]) <= 5.0 * se);
        rel_sum += std::abs(mean[i] - S.values[i]) / S.values[i];
        ++count;
    }
    // aggregate deviation at the 128-image budget
    CHECK(rel_sum / static_cast<double>(count) <= 0.10);
}

TEST_CASE("negative densities are rejected") {
    SpectralGrid S;
    S.freq_dims = {8, 8};
    S.values.assign(64, 1.0);
    S.values[5] = -0.25;
    CHECK_THROWS_AS(sample_field(S, 3), contract_error);
}

} // TEST_SUITE
