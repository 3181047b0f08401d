#include "pmt/tapers.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "pmt/errors.hpp"
#include "pmt/fft.hpp"
#include "pmt/rng.hpp"

namespace pmt {

std::string taper_kind_name(TaperKind k) {
    switch (k) {
        case TaperKind::proxy: return "proxy";
        case TaperKind::slepian1d: return "slepian1d";
        case TaperKind::tensor: return "tensor";
        default: return "custom";
    }
}

Eigen::MatrixXd orthonormalize_columns(Eigen::MatrixXd A) {
    const auto m = static_cast<lapack_int>(A.rows());
    const auto n = static_cast<lapack_int>(A.cols());
    if (m < n) throw contract_error("orthonormalize: need rows >= cols");

    std::vector<double> tau(static_cast<std::size_t>(n));
    lapack_int info = LAPACKE_dgeqrf(LAPACK_COL_MAJOR, m, n, A.data(), m, tau.data());
    if (info != 0) throw numeric_error("QR factorization failed (dgeqrf info != 0)");

    // rank check on R's diagonal before the reflectors get expanded
    double rmax = 0.0;
    for (lapack_int k = 0; k < n; ++k) rmax = std::max(rmax, std::abs(A(k, k)));
    std::vector<int> flip(static_cast<std::size_t>(n), 0);
    for (lapack_int k = 0; k < n; ++k) {
        if (std::abs(A(k, k)) <= rmax * 1e-13)
            throw numeric_error("rank collapse in block power QR; rerun with a different seed");
        flip[static_cast<std::size_t>(k)] = A(k, k) < 0.0;
    }

    info = LAPACKE_dorgqr(LAPACK_COL_MAJOR, m, n, n, A.data(), m, tau.data());
    if (info != 0) throw numeric_error("QR orthonormalization failed (dorgqr info != 0)");

    // fix signs so R's diagonal is nonnegative
    for (lapack_int k = 0; k < n; ++k)
        if (flip[static_cast<std::size_t>(k)]) A.col(k) = -A.col(k);
    return A;
}

namespace {

std::vector<double> rayleigh_per_column(const ConcentrationOperator& op, const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd TQ = op.apply_block(Q);
    std::vector<double> lam(static_cast<std::size_t>(Q.cols()));
    for (Eigen::Index k = 0; k < Q.cols(); ++k)
        lam[static_cast<std::size_t>(k)] = Q.col(k).dot(TQ.col(k));
    return lam;
}

TaperSet proxy_tapers_impl(const DomainMask& mask, const BandwidthSpec& bw, int T,
                           std::uint64_t seed) {
    if (bw.K < 1 || bw.K > mask.n_omega)
        throw domain_error("proxy_tapers: need 1 <= K <= n_omega");
    if (T < 1) throw contract_error("proxy_tapers: need T >= 1");

    ConcentrationOperator op(mask, bw);

    Eigen::MatrixXd L(mask.n_omega, bw.K);
    Rng rng(seed);
    for (Eigen::Index k = 0; k < L.cols(); ++k)
        for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, k) = rng.next_normal();

    for (int t = 0; t < T; ++t) L = orthonormalize_columns(op.apply_block(L));

    TaperSet out;
    out.mask = mask;
    out.vectors = std::move(L);
    out.kind = TaperKind::proxy;
    out.lambdas = rayleigh_per_column(op, out.vectors);
    out.W = bw.W;
    out.T = T;
    out.seed = seed;
    return out;
}

} // namespace

TaperSet proxy_tapers(const DomainMask& mask, std::int64_t K, int T, std::uint64_t seed) {
    return proxy_tapers_impl(mask, make_bandwidth_from_K(K, mask), T, seed);
}

TaperSet proxy_tapers(const DomainMask& mask, const BandwidthSpec& bw, int T, std::uint64_t seed) {
    return proxy_tapers_impl(mask, bw, T, seed);
}

TaperSet slepian_1d(std::int64_t N, double W, std::int64_t K) {
    if (K < 1 || K > N) throw domain_error("slepian_1d: need 1 <= K <= N");
    if (!(W > 0.0) || W > 0.5) throw domain_error("slepian_1d: W must be in (0, 1/2]");

    // Commuting tridiagonal: diag ((N-1)/2 - n)^2 cos(pi W), off n(N-n)/2.
    // The classical recurrence is stated for the kernel sin(2 pi w t)/(pi t);
    // our band is [-W/2, W/2], i.e. w = W/2, hence cos(pi W).
    Eigen::VectorXd diag(N), off(N - 1);
    const double c = std::cos(3.141592653589793238462643383279503 * W);
    for (std::int64_t n = 0; n < N; ++n) {
        const double t = (static_cast<double>(N - 1) / 2.0 - static_cast<double>(n));
        diag(n) = t * t * c;
    }
    for (std::int64_t n = 1; n < N; ++n)
        off(n - 1) = static_cast<double>(n) * static_cast<double>(N - n) / 2.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw numeric_error("slepian_1d: tridiagonal eigensolver failed");

    // order by true concentration: Rayleigh quotients against the interval operator
    DomainMask interval = DomainMask::from_occupancy(
        {N}, std::vector<std::uint8_t>(static_cast<std::size_t>(N), 1));
    BandwidthSpec bw;
    bw.d = 1;
    bw.n_omega = N;
    bw.W = W;
    bw.K = static_cast<std::int64_t>(std::ceil(static_cast<double>(N) * W - 1e-12));
    ConcentrationOperator op(interval, bw);

    Eigen::MatrixXd vecs = solver.eigenvectors();
    std::vector<double> lam(static_cast<std::size_t>(N));
    {
        Eigen::MatrixXd Tv = op.apply_block(vecs);
        for (std::int64_t k = 0; k < N; ++k)
            lam[static_cast<std::size_t>(k)] = vecs.col(k).dot(Tv.col(k));
    }
    std::vector<std::int64_t> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return lam[static_cast<std::size_t>(a)] > lam[static_cast<std::size_t>(b)];
    });

    TaperSet out;
    out.mask = std::move(interval);
    out.vectors.resize(N, K);
    out.lambdas.resize(static_cast<std::size_t>(K));
    for (std::int64_t k = 0; k < K; ++k) {
        Eigen::VectorXd v = vecs.col(order[static_cast<std::size_t>(k)]);
        v.normalize();
        // sign: largest-magnitude entry positive
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        out.vectors.col(k) = v;
        out.lambdas[static_cast<std::size_t>(k)] = lam[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    }
    out.kind = TaperKind::slepian1d;
    out.W = W;
    return out;
}

TaperSet tensor_tapers(const Extents& rect_dims, double W, std::int64_t K) {
    const int d = static_cast<int>(rect_dims.size());
    if (d < 1) throw contract_error("tensor_tapers: empty extents");
    const std::int64_t total = flat_size(rect_dims);
    if (K < 1 || K > total) throw domain_error("tensor_tapers: need 1 <= K <= prod(dims)");

    // full per-axis Slepian banks
    std::vector<TaperSet> axes;
    for (int j = 0; j < d; ++j) {
        const std::int64_t Nj = rect_dims[static_cast<std::size_t>(j)];
        axes.push_back(slepian_1d(Nj, W, Nj));
    }

    // rank index tuples by product of per-axis lambdas, ties lexicographic
    struct Cand {
        std::vector<std::int64_t> idx;
        double lam;
    };
    std::vector<Cand> cands;
    {
        std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
        for (std::int64_t flat = 0; flat < total; ++flat) {
            double lam = 1.0;
            for (int j = 0; j < d; ++j)
                lam *= axes[static_cast<std::size_t>(j)].lambdas[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
            cands.push_back({idx, lam});
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++idx[ju] < rect_dims[ju]) break;
                idx[ju] = 0;
            }
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.lam != b.lam) return a.lam > b.lam;
        return a.idx < b.idx;
    });

    TaperSet out;
    out.mask = DomainMask::from_occupancy(
        rect_dims, std::vector<std::uint8_t>(static_cast<std::size_t>(total), 1));
    out.vectors.resize(total, K);
    out.lambdas.resize(static_cast<std::size_t>(K));
    std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
    for (std::int64_t k = 0; k < K; ++k) {
        const auto& cand = cands[static_cast<std::size_t>(k)];
        std::fill(c.begin(), c.end(), 0);
        for (std::int64_t flat = 0; flat < total; ++flat) {
            double v = 1.0;
            for (int j = 0; j < d; ++j)
                v *= axes[static_cast<std::size_t>(j)].vectors(
                    c[static_cast<std::size_t>(j)], cand.idx[static_cast<std::size_t>(j)]);
            out.vectors(flat, k) = v;
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++c[ju] < rect_dims[ju]) break;
                c[ju] = 0;
            }
        }
        out.lambdas[static_cast<std::size_t>(k)] = cand.lam;
    }
    out.kind = TaperKind::tensor;
    out.W = W;
    return out;
}

SpectralGrid accumulated_spectral_window(const TaperSet& tapers, const Extents& freq_dims) {
    check_freq_dims(freq_dims, tapers.mask.dims);
    const std::int64_t fsize = flat_size(freq_dims);
    const int d = static_cast<int>(freq_dims.size());

    // site coordinates -> flat index inside the frequency buffer
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * freq_dims[static_cast<std::size_t>(j + 1)];
    std::vector<std::int64_t> site_idx;
    site_idx.reserve(tapers.mask.sites.size());
    for (auto flat : tapers.mask.sites) {
        std::int64_t rem = flat, padded = 0;
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            padded += (rem % tapers.mask.dims[ju]) * stride[ju];
            rem /= tapers.mask.dims[ju];
        }
        site_idx.push_back(padded);
    }

    std::vector<double> acc(static_cast<std::size_t>(fsize), 0.0);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fsize));
    const std::int64_t K = tapers.K();
    for (std::int64_t k = 0; k < K; ++k) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t i = 0; i < site_idx.size(); ++i)
            buf[static_cast<std::size_t>(site_idx[i])] = tapers.vectors(static_cast<Eigen::Index>(i), k);
        fft::forward(buf.data(), freq_dims);
        for (std::int64_t f = 0; f < fsize; ++f)
            acc[static_cast<std::size_t>(f)] += std::norm(buf[static_cast<std::size_t>(f)]);
    }
    const double scale = 1.0 / static_cast<double>(K);
    for (auto& v : acc) v *= scale;

    SpectralGrid out;
    out.freq_dims = freq_dims;
    fftshift(acc, freq_dims, out.values);
    out.meta = {{"kind", "accumulated_spectral_window"},
                {"K", K},
                {"W", tapers.W},
                {"taper_kind", taper_kind_name(tapers.kind)}};
    return out;
}

double spectral_window_l1_error(const TaperSet& tapers, const BandwidthSpec& bw,
                                const Extents& freq_dims) {
    SpectralGrid rho = accumulated_spectral_window(tapers, freq_dims);
    const int d = static_cast<int>(freq_dims.size());
    const double half = bw.W / 2.0;
    const double boxval = std::pow(bw.W, -d);
    const std::int64_t fsize = rho.size();

    double cell = 1.0;
    for (auto n : freq_dims) cell /= static_cast<double>(n);

    double err = 0.0;
    std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < fsize; ++flat) {
        bool inbox = true;
        for (int j = 0; j < d; ++j) {
            const double xi = rho.xi(j, c[static_cast<std::size_t>(j)]);
            if (xi < -half || xi >= half) {
                inbox = false;
                break;
            }
        }
        const double target = inbox ? boxval : 0.0;
        err += std::abs(rho.values[static_cast<std::size_t>(flat)] - target);
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            if (++c[ju] < freq_dims[ju]) break;
            c[ju] = 0;
        }
    }
    return err * cell;
}

TaperSet rotate_tapers(const TaperSet& tapers, const Eigen::MatrixXd& ortho) {
    const std::int64_t K = tapers.K();
    if (ortho.rows() != K || ortho.cols() != K)
        throw contract_error("rotate_tapers: rotation must be K x K");
    const double dev = (ortho.transpose() * ortho - Eigen::MatrixXd::Identity(K, K)).norm();
    if (dev > 1e-10)
        throw contract_error("rotate_tapers: matrix is not orthogonal (deviation " +
                             std::to_string(dev) + ")");

    TaperSet out;
    out.mask = tapers.mask;
    out.vectors = tapers.vectors * ortho;
    out.kind = TaperKind::custom;
    out.W = tapers.W;
    out.T = tapers.T;
    out.seed = tapers.seed;
    return out;
}

} // namespace pmt
