#include "pmt/estimator.hpp"

#include <cmath>
#include <complex>

#include "pmt/errors.hpp"
#include "pmt/fft.hpp"

namespace pmt {

namespace {

// flat index of each grid site inside the (possibly larger) frequency buffer
std::vector<std::int64_t> embed_indices(const Extents& grid_dims, const std::vector<std::int64_t>& sites,
                                        const Extents& freq_dims) {
    const int d = static_cast<int>(freq_dims.size());
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * freq_dims[static_cast<std::size_t>(j + 1)];
    std::vector<std::int64_t> out;
    out.reserve(sites.size());
    for (auto flat : sites) {
        std::int64_t rem = flat, idx = 0;
        for (int j = d - 1; j >= 0; --j) {
            const auto ju = static_cast<std::size_t>(j);
            idx += (rem % grid_dims[ju]) * stride[ju];
            rem /= grid_dims[ju];
        }
        out.push_back(idx);
    }
    return out;
}

// adds |DFT(embedded weights * field)|^2 into acc (raw layout)
void accumulate_periodogram(const std::vector<double>& field_values,
                            const std::vector<std::int64_t>& field_sites,
                            const std::vector<std::int64_t>& buf_sites, const double* taper,
                            const Extents& freq_dims, std::vector<std::complex<double>>& buf,
                            std::vector<double>& acc) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < buf_sites.size(); ++i)
        buf[static_cast<std::size_t>(buf_sites[i])] =
            taper[i] * field_values[static_cast<std::size_t>(field_sites[i])];
    fft::forward(buf.data(), freq_dims);
    for (std::size_t f = 0; f < acc.size(); ++f) acc[f] += std::norm(buf[f]);
}

void check_field_grid(const FieldSample& field, const Extents& grid_dims) {
    if (field.dims != grid_dims)
        throw contract_error("estimator: field dims do not match the mask grid");
}

} // namespace

SpectralGrid tapered_periodogram(const FieldSample& field, const DomainMask& mask,
                                 const Eigen::VectorXd& taper, const Extents& freq_dims) {
    check_field_grid(field, mask.dims);
    check_freq_dims(freq_dims, mask.dims);
    if (taper.size() != mask.n_omega)
        throw contract_error("tapered_periodogram: taper length != n_omega");
    const double nrm = taper.norm();
    if (std::abs(nrm - 1.0) > 1e-8)
        throw contract_error("tapered_periodogram: taper is not unit norm (|m| = " +
                             std::to_string(nrm) + ")");

    const std::int64_t fsize = flat_size(freq_dims);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fsize));
    std::vector<double> acc(static_cast<std::size_t>(fsize), 0.0);
    auto buf_sites = embed_indices(mask.dims, mask.sites, freq_dims);
    accumulate_periodogram(field.values, mask.sites, buf_sites, taper.data(), freq_dims, buf, acc);

    SpectralGrid out;
    out.freq_dims = freq_dims;
    fftshift(acc, freq_dims, out.values);
    out.meta = {{"kind", "tapered_periodogram"}, {"K", 1}};
    return out;
}

SpectralGrid multitaper_estimate(const FieldSample& field, const TaperSet& tapers,
                                 const Extents& freq_dims) {
    check_field_grid(field, tapers.mask.dims);
    check_freq_dims(freq_dims, tapers.mask.dims);

    const std::int64_t fsize = flat_size(freq_dims);
    const std::int64_t K = tapers.K();
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fsize));
    std::vector<double> acc(static_cast<std::size_t>(fsize), 0.0);
    auto buf_sites = embed_indices(tapers.mask.dims, tapers.mask.sites, freq_dims);
    for (std::int64_t k = 0; k < K; ++k)
        accumulate_periodogram(field.values, tapers.mask.sites, buf_sites,
                               tapers.vectors.col(k).data(), freq_dims, buf, acc);
    const double scale = 1.0 / static_cast<double>(K);
    for (auto& v : acc) v *= scale;

    SpectralGrid out;
    out.freq_dims = freq_dims;
    fftshift(acc, freq_dims, out.values);
    out.meta = {{"kind", "multitaper"},
                {"K", K},
                {"W", tapers.W},
                {"T", tapers.T},
                {"seed", tapers.seed},
                {"taper_kind", taper_kind_name(tapers.kind)}};
    return out;
}

SpectralGrid mper_estimate(const FieldSample& field, const DomainMask& mask,
                           const Extents& freq_dims) {
    Eigen::VectorXd m = Eigen::VectorXd::Constant(
        mask.n_omega, 1.0 / std::sqrt(static_cast<double>(mask.n_omega)));
    SpectralGrid out = tapered_periodogram(field, mask, m, freq_dims);
    out.meta["kind"] = "mper";
    return out;
}

SpectralGrid cmt_estimate(const FieldSample& field, const CornerSubgrids& corners, double W,
                          std::optional<std::int64_t> K_per_rect, const Extents& freq_dims) {
    check_field_grid(field, corners.mask.dims);
    check_freq_dims(freq_dims, corners.mask.dims);
    if (corners.rects.empty()) throw contract_error("cmt_estimate: no rectangles");

    const int d = static_cast<int>(corners.mask.dims.size());
    const std::int64_t fsize = flat_size(freq_dims);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fsize));
    std::vector<double> mean(static_cast<std::size_t>(fsize), 0.0);

    std::int64_t K_used = 0;
    for (const auto& rect : corners.rects) {
        const std::int64_t n_rect = flat_size(rect.dims);
        for (auto n : rect.dims)
            if (n < 1) throw domain_error("cmt_estimate: degenerate rectangle");
        std::int64_t K = K_per_rect.value_or(static_cast<std::int64_t>(
            std::ceil(static_cast<double>(n_rect) * std::pow(W, d) - 1e-12)));
        if (K < 1) K = 1;
        if (K > n_rect) throw domain_error("cmt_estimate: K_per_rect exceeds rectangle size");
        K_used = K;

        TaperSet bank = tensor_tapers(rect.dims, W, K);

        // rect-local sites placed at the rectangle's offset in the field grid
        std::vector<std::int64_t> grid_sites;
        grid_sites.reserve(static_cast<std::size_t>(n_rect));
        std::vector<std::int64_t> c(static_cast<std::size_t>(d), 0);
        for (std::int64_t flat = 0; flat < n_rect; ++flat) {
            std::int64_t idx = 0;
            for (int j = 0; j < d; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                std::int64_t stride = 1;
                for (int l = j + 1; l < d; ++l)
                    stride *= corners.mask.dims[static_cast<std::size_t>(l)];
                idx += (rect.offset[ju] + c[ju]) * stride;
            }
            grid_sites.push_back(idx);
            for (int j = d - 1; j >= 0; --j) {
                const auto ju = static_cast<std::size_t>(j);
                if (++c[ju] < rect.dims[ju]) break;
                c[ju] = 0;
            }
        }

        auto buf_sites = embed_indices(corners.mask.dims, grid_sites, freq_dims);
        std::vector<double> acc(static_cast<std::size_t>(fsize), 0.0);
        for (std::int64_t k = 0; k < K; ++k)
            accumulate_periodogram(field.values, grid_sites, buf_sites, bank.vectors.col(k).data(),
                                   freq_dims, buf, acc);
        const double scale = 1.0 / (static_cast<double>(K) * static_cast<double>(corners.rects.size()));
        for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += acc[f] * scale;
    }

    SpectralGrid out;
    out.freq_dims = freq_dims;
    fftshift(mean, freq_dims, out.values);
    out.meta = {{"kind", "cmt"},
                {"W", W},
                {"K_per_rect", K_used},
                {"rects", corners.rects.size()}};
    return out;
}

} // namespace pmt
