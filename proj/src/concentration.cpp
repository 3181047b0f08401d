#include "pmt/concentration.hpp"

#include <cmath>
#include <string>

#include "pmt/errors.hpp"
#include "pmt/fft.hpp"

namespace pmt {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

void check_bandwidth_value(double W) {
    if (!(W > 0.0) || W > 0.5)
        throw domain_error("bandwidth: W must lie in (0, 1/2], got " + std::to_string(W));
}

// 1-D kernel slice r[t] = sin(pi W t)/(pi t), r[0] = W
double kernel_1d(double W, std::int64_t t) {
    if (t == 0) return W;
    const double x = kPi * static_cast<double>(t);
    return std::sin(W * x) / x;
}

} // namespace

BandwidthSpec make_bandwidth_from_K(std::int64_t K, const DomainMask& mask) {
    if (K < 1 || K > mask.n_omega)
        throw domain_error("bandwidth: K must be in [1, n_omega]");
    BandwidthSpec bw;
    bw.d = mask.d();
    bw.n_omega = mask.n_omega;
    bw.K = K;
    bw.W = std::pow(static_cast<double>(K) / static_cast<double>(mask.n_omega),
                    1.0 / static_cast<double>(bw.d));
    check_bandwidth_value(bw.W);
    return bw;
}

BandwidthSpec make_bandwidth_from_W(double W, const DomainMask& mask) {
    check_bandwidth_value(W);
    BandwidthSpec bw;
    bw.d = mask.d();
    bw.n_omega = mask.n_omega;
    bw.W = W;
    bw.K = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(mask.n_omega) * std::pow(W, bw.d) - 1e-12));
    if (bw.K < 1) bw.K = 1;
    return bw;
}

double sinc_kernel_value(double W, const Extents& lag) {
    double v = 1.0;
    for (auto t : lag) v *= kernel_1d(W, t);
    return v;
}

ConcentrationOperator::ConcentrationOperator(const DomainMask& mask, const BandwidthSpec& bw)
    : mask_(&mask), bw_(bw) {
    check_bandwidth_value(bw.W);
    if (bw.n_omega != mask.n_omega || bw.d != mask.d())
        throw contract_error("concentration: bandwidth spec built for a different mask");

    const int d = mask.d();
    for (int j = 0; j < d; ++j)
        pad_.push_back(fft::next_fast_size(2 * mask.dims[static_cast<std::size_t>(j)] - 1));
    const std::int64_t psize = flat_size(pad_);

    // wrapped separable kernel, then its DFT; evenness makes the spectrum real
    std::vector<std::vector<double>> slices;
    for (int j = 0; j < d; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        std::vector<double> r(static_cast<std::size_t>(pad_[ju]), 0.0);
        for (std::int64_t p = 0; p < pad_[ju]; ++p) {
            const std::int64_t t = (p <= pad_[ju] / 2) ? p : p - pad_[ju];
            if (std::abs(t) < mask.dims[ju]) r[static_cast<std::size_t>(p)] = kernel_1d(bw.W, t);
        }
        slices.push_back(std::move(r));
    }

    std::vector<std::complex<double>> h(static_cast<std::size_t>(psize));
    {
        std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
        for (std::int64_t flat = 0; flat < psize; ++flat) {
            double v = 1.0;
            for (int j = 0; j < d; ++j)
                v *= slices[static_cast<std::size_t>(j)][static_cast<std::size_t>(c[static_cast<std::size_t>(j)])];
            h[static_cast<std::size_t>(flat)] = v;
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++c[ju] < pad_[ju]) break;
                c[ju] = 0;
            }
        }
    }
    fft::forward(h.data(), pad_);
    kernel_hat_.resize(static_cast<std::size_t>(psize));
    for (std::int64_t i = 0; i < psize; ++i)
        kernel_hat_[static_cast<std::size_t>(i)] = h[static_cast<std::size_t>(i)].real();

    // map each masked site to its padded flat index
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * pad_[static_cast<std::size_t>(j + 1)];
    site_pad_index_.reserve(mask.sites.size());
    for (auto flat : mask.sites) {
        std::int64_t rem = flat, padded = 0;
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            padded += (rem % mask.dims[ju]) * stride[ju];
            rem /= mask.dims[ju];
        }
        site_pad_index_.push_back(padded);
    }

    work_.resize(static_cast<std::size_t>(psize));
}

void ConcentrationOperator::apply(const double* in, double* out) const {
    const std::int64_t psize = flat_size(pad_);
    std::fill(work_.begin(), work_.end(), std::complex<double>(0.0, 0.0));
    const std::size_t n = site_pad_index_.size();
    for (std::size_t i = 0; i < n; ++i)
        work_[static_cast<std::size_t>(site_pad_index_[i])] = in[i];
    fft::forward(work_.data(), pad_);
    for (std::int64_t i = 0; i < psize; ++i)
        work_[static_cast<std::size_t>(i)] *= kernel_hat_[static_cast<std::size_t>(i)];
    fft::inverse(work_.data(), pad_);
    const double scale = 1.0 / static_cast<double>(psize);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = work_[static_cast<std::size_t>(site_pad_index_[i])].real() * scale;
}

Eigen::MatrixXd ConcentrationOperator::apply_block(const Eigen::MatrixXd& block) const {
    if (block.rows() != mask_->n_omega)
        throw contract_error("concentration apply: vectors must have length n_omega");
    Eigen::MatrixXd out(block.rows(), block.cols());
    for (Eigen::Index k = 0; k < block.cols(); ++k)
        apply(block.col(k).data(), out.col(k).data());
    return out;
}

std::vector<std::vector<double>> apply_concentration(const DomainMask& mask, const BandwidthSpec& bw,
                                                     const std::vector<std::vector<double>>& block) {
    for (const auto& v : block)
        if (static_cast<std::int64_t>(v.size()) != mask.n_omega)
            throw contract_error("apply_concentration: vector length != n_omega");
    ConcentrationOperator op(mask, bw);
    std::vector<std::vector<double>> out;
    out.reserve(block.size());
    for (const auto& v : block) {
        std::vector<double> w(v.size());
        op.apply(v.data(), w.data());
        out.push_back(std::move(w));
    }
    return out;
}

Eigen::MatrixXd dense_operator(const DomainMask& mask, const BandwidthSpec& bw, std::int64_t cap) {
    check_bandwidth_value(bw.W);
    const std::int64_t n = mask.n_omega;
    if (n > cap)
        throw resource_error("dense_operator: n_omega = " + std::to_string(n) +
                             " exceeds cap " + std::to_string(cap));
    const int d = mask.d();

    // site coordinates once
    std::vector<Extents> coords(static_cast<std::size_t>(n), Extents(static_cast<std::size_t>(d)));
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t rem = mask.sites[static_cast<std::size_t>(i)];
        for (int j = d - 1; j >= 0; --j) {
            coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                rem % mask.dims[static_cast<std::size_t>(j)];
            rem /= mask.dims[static_cast<std::size_t>(j)];
        }
    }

    Eigen::MatrixXd T(n, n);
    Extents lag(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i; j < n; ++j) {
            for (int a = 0; a < d; ++a)
                lag[static_cast<std::size_t>(a)] = coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
                                                   coords[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
            const double v = sinc_kernel_value(bw.W, lag);
            T(i, j) = v;
            T(j, i) = v;
        }
    }
    return T;
}

TraceDiagnostics trace_diagnostics(const DomainMask& mask, const BandwidthSpec& bw) {
    check_bandwidth_value(bw.W);
    const int d = mask.d();
    const double Wd = std::pow(bw.W, d);

    TraceDiagnostics out{};
    out.trace_T = Wd * static_cast<double>(mask.n_omega);

    // trace T^2 = sum_{q,q' in Omega} h[q-q']^2, evaluated as an FFT correlation
    // of the occupancy with the squared kernel
    Extents pad;
    for (int j = 0; j < d; ++j)
        pad.push_back(fft::next_fast_size(2 * mask.dims[static_cast<std::size_t>(j)] - 1));
    const std::int64_t psize = flat_size(pad);

    std::vector<std::complex<double>> ind(static_cast<std::size_t>(psize), 0.0);
    std::vector<std::complex<double>> h2(static_cast<std::size_t>(psize), 0.0);
    {
        std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
        for (int j = d - 2; j >= 0; --j)
            stride[static_cast<std::size_t>(j)] =
                stride[static_cast<std::size_t>(j + 1)] * pad[static_cast<std::size_t>(j + 1)];
        for (auto flat : mask.sites) {
            std::int64_t rem = flat, padded = 0;
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                padded += (rem % mask.dims[ju]) * stride[ju];
                rem /= mask.dims[ju];
            }
            ind[static_cast<std::size_t>(padded)] = 1.0;
        }

        std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
        Extents lag(static_cast<std::size_t>(d));
        for (std::int64_t flat = 0; flat < psize; ++flat) {
            bool inrange = true;
            for (int j = 0; j < d; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                const std::int64_t t = (c[ju] <= pad[ju] / 2) ? c[ju] : c[ju] - pad[ju];
                lag[ju] = t;
                if (std::abs(t) >= mask.dims[ju]) inrange = false;
            }
            if (inrange) {
                const double v = sinc_kernel_value(bw.W, lag);
                h2[static_cast<std::size_t>(flat)] = v * v;
            }
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++c[ju] < pad[ju]) break;
                c[ju] = 0;
            }
        }
    }

    fft::forward(ind.data(), pad);
    fft::forward(h2.data(), pad);
    for (std::int64_t i = 0; i < psize; ++i)
        ind[static_cast<std::size_t>(i)] *= h2[static_cast<std::size_t>(i)];
    fft::inverse(ind.data(), pad);

    // (1_Omega conv h^2) summed over Omega; h^2 is even so convolution = correlation
    double acc = 0.0;
    {
        std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
        for (int j = d - 2; j >= 0; --j)
            stride[static_cast<std::size_t>(j)] =
                stride[static_cast<std::size_t>(j + 1)] * pad[static_cast<std::size_t>(j + 1)];
        for (auto flat : mask.sites) {
            std::int64_t rem = flat, padded = 0;
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                padded += (rem % mask.dims[ju]) * stride[ju];
                rem /= mask.dims[ju];
            }
            acc += ind[static_cast<std::size_t>(padded)].real();
        }
    }
    out.trace_T2 = acc / static_cast<double>(psize);
    out.defect = out.trace_T - out.trace_T2;
    return out;
}

} // namespace pmt
