#pragma once
#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "pmt/concentration.hpp"
#include "pmt/grid.hpp"
#include "pmt/spectral.hpp"

namespace pmt {

enum class TaperKind { proxy, slepian1d, tensor, custom };

std::string taper_kind_name(TaperKind k);

// K orthonormal unit vectors supported on the mask, columns in canonical site
// order. lambdas are the concentration values: sorted nonincreasing for exact
// kinds, per-column Rayleigh quotients (unsorted) for proxies.
struct TaperSet {
    DomainMask mask;
    Eigen::MatrixXd vectors;
    TaperKind kind = TaperKind::custom;
    std::vector<double> lambdas;
    double W = 0.0;
    int T = 0;
    std::uint64_t seed = 0;

    std::int64_t K() const { return vectors.cols(); }
};

// Block power iteration: L0 ~ iid N(0,1), then T rounds of L <- Q(T L).
// The K-variant derives W from K = ceil(n_omega W^d); the BandwidthSpec variant
// runs at a caller-chosen W (K taken from the spec).
TaperSet proxy_tapers(const DomainMask& mask, std::int64_t K, int T, std::uint64_t seed);
TaperSet proxy_tapers(const DomainMask& mask, const BandwidthSpec& bw, int T, std::uint64_t seed);

// 1-D Slepian sequences through the commuting tridiagonal, ordered by
// concentration; lambdas are Rayleigh quotients against the interval operator.
TaperSet slepian_1d(std::int64_t N, double W, std::int64_t K);

// Products of per-axis 1-D Slepians on a rectangle, ranked by the product of
// per-axis concentrations; ties broken lexicographically in the index tuple.
TaperSet tensor_tapers(const Extents& rect_dims, double W, std::int64_t K);

// rho(xi) = K^{-1} sum_k |M_k(xi)|^2 on the shifted lattice; integrates to 1
SpectralGrid accumulated_spectral_window(const TaperSet& tapers, const Extents& freq_dims);

// Riemann L1 distance between rho and the flat band target W^{-d} 1_box,
// the box sampled half-open at cell centers
double spectral_window_l1_error(const TaperSet& tapers, const BandwidthSpec& bw,
                                const Extents& freq_dims);

TaperSet rotate_tapers(const TaperSet& tapers, const Eigen::MatrixXd& ortho);

// thin QR with nonnegative R diagonal; flags rank collapses
Eigen::MatrixXd orthonormalize_columns(Eigen::MatrixXd A);

} // namespace pmt
