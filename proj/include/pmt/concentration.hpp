#pragma once
#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "pmt/grid.hpp"

namespace pmt {

// K and W tied together by K = ceil(n_omega * W^d), W = (K/n_omega)^(1/d).
struct BandwidthSpec {
    std::int64_t K = 0;
    double W = 0.0;
    std::int64_t n_omega = 0;
    int d = 0;
};

BandwidthSpec make_bandwidth_from_K(std::int64_t K, const DomainMask& mask);
BandwidthSpec make_bandwidth_from_W(double W, const DomainMask& mask);

// separable band-limiting kernel h[q] = prod_j sin(pi*W*q_j)/(pi*q_j), h[0] = W^d
double sinc_kernel_value(double W, const Extents& lag);

// Restrict-bandlimit-restrict operator. The apply embeds a vector on the mask
// into the padded grid (>= 2N-1 per axis, rounded to a 5-smooth size), convolves
// with h by FFT, and reads back the masked sites, so the Toeplitz action is exact.
class ConcentrationOperator {
public:
    ConcentrationOperator(const DomainMask& mask, const BandwidthSpec& bw);

    void apply(const double* in, double* out) const;
    Eigen::MatrixXd apply_block(const Eigen::MatrixXd& block) const;

    const DomainMask& mask() const { return *mask_; }
    const BandwidthSpec& bandwidth() const { return bw_; }

private:
    const DomainMask* mask_;
    BandwidthSpec bw_;
    Extents pad_;
    std::vector<std::int64_t> site_pad_index_; // flat index of each site in the padded grid
    std::vector<double> kernel_hat_;           // real spectrum of the wrapped kernel
    mutable std::vector<std::complex<double>> work_;
};

// contract-level block apply: vectors in the canonical site order of the mask
std::vector<std::vector<double>> apply_concentration(const DomainMask& mask, const BandwidthSpec& bw,
                                                     const std::vector<std::vector<double>>& block);

// exact dense materialization, n_omega x n_omega; throws resource-error above the cap
Eigen::MatrixXd dense_operator(const DomainMask& mask, const BandwidthSpec& bw,
                               std::int64_t cap = 20000);

struct TraceDiagnostics {
    double trace_T;  // = W^d * n_omega, closed form
    double trace_T2; // sum of squared entries, via FFT correlation of the mask with h^2
    double defect;   // trace_T - trace_T2 = sum lambda_k (1 - lambda_k) >= 0
};

TraceDiagnostics trace_diagnostics(const DomainMask& mask, const BandwidthSpec& bw);

} // namespace pmt
