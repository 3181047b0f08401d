#include "pmt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmt/concentration.hpp"
#include "pmt/errors.hpp"
#include "pmt/estimator.hpp"
#include "pmt/grid.hpp"
#include "pmt/parallel.hpp"
#include "pmt/rng.hpp"
#include "pmt/simulate.hpp"
#include "pmt/tapers.hpp"

namespace pmt {

std::vector<double> ExperimentCurve::column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(row[c]);
        return out;
    }
    throw contract_error("curve has no column named '" + name + "'");
}

void ExperimentCurve::validate() const {
    if (columns.empty() || columns.front() != abscissa)
        throw contract_error("curve: column 0 must be the abscissa");
    for (const auto& row : rows)
        if (row.size() != columns.size()) throw contract_error("curve: ragged row");
    const auto xs = column(abscissa);
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw contract_error("curve: abscissae must be strictly increasing");
    for (const auto v : column(statistic))
        if (!std::isfinite(v) || v < 0.0) throw contract_error("curve: statistic must be finite and >= 0");
}

SlopeFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 3) throw contract_error("slope fit needs >= 3 points");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw domain_error("slope fit needs strictly positive values");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw domain_error("slope fit needs distinct abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    const double b0 = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (b0 + fit.slope * lx[i]);
        rss += r * r;
    }
    fit.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    return fit;
}

SlopeFit fit_loglog_slope(const ExperimentCurve& curve) {
    return fit_loglog_slope(curve.column(curve.abscissa), curve.column(curve.statistic));
}

double density_c2_norm(const SpectralGrid& density) {
    const Extents& dims = density.freq_dims;
    const int d = static_cast<int>(dims.size());
    const std::int64_t n = flat_size(dims);
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
    for (int j = d - 2; j >= 0; --j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j + 1)] * dims[static_cast<std::size_t>(j + 1)];

    auto wrapped = [&](std::int64_t flat, int axis, std::int64_t step) {
        const auto ju = static_cast<std::size_t>(axis);
        const std::int64_t k = (flat / stride[ju]) % dims[ju];
        const std::int64_t k2 = ((k + step) % dims[ju] + dims[ju]) % dims[ju];
        return flat + (k2 - k) * stride[ju];
    };

    double sup = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        sup = std::max(sup, std::abs(density.values[static_cast<std::size_t>(i)]));
    // first derivatives: periodic central differences, cell width 1/n_j
    std::vector<std::vector<double>> grads(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        auto& g = grads[static_cast<std::size_t>(j)];
        g.resize(static_cast<std::size_t>(n));
        const double h = 1.0 / static_cast<double>(dims[static_cast<std::size_t>(j)]);
        for (std::int64_t i = 0; i < n; ++i) {
            const double up = density.values[static_cast<std::size_t>(wrapped(i, j, +1))];
            const double dn = density.values[static_cast<std::size_t>(wrapped(i, j, -1))];
            g[static_cast<std::size_t>(i)] = (up - dn) / (2.0 * h);
            sup = std::max(sup, std::abs(g[static_cast<std::size_t>(i)]));
        }
    }
    for (int j = 0; j < d; ++j) {
        const auto& g = grads[static_cast<std::size_t>(j)];
        for (int l = 0; l < d; ++l) {
            const double h = 1.0 / static_cast<double>(dims[static_cast<std::size_t>(l)]);
            for (std::int64_t i = 0; i < n; ++i) {
                const double up = g[static_cast<std::size_t>(wrapped(i, l, +1))];
                const double dn = g[static_cast<std::size_t>(wrapped(i, l, -1))];
                sup = std::max(sup, std::abs((up - dn) / (2.0 * h)));
            }
        }
    }
    return sup;
}

namespace {

std::vector<double> sorted_unique_radii(std::vector<double> radii) {
    if (radii.empty()) throw contract_error("sweep needs at least one radius");
    std::sort(radii.begin(), radii.end());
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw contract_error("sweep radii must be distinct");
    return radii;
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// per-bin error moments of a batch of estimates against the truth
struct MomentMaps {
    std::vector<double> sum_e;  // sum of (est - S)
    std::vector<double> sum_e2; // sum of (est - S)^2
    std::vector<double> sum_e4; // sum of (est - S)^4

    explicit MomentMaps(std::size_t bins) : sum_e(bins, 0.0), sum_e2(bins, 0.0), sum_e4(bins, 0.0) {}

    void add(const std::vector<double>& est, const std::vector<double>& truth) {
        for (std::size_t i = 0; i < est.size(); ++i) {
            const double e = est[i] - truth[i];
            const double e2 = e * e;
            sum_e[i] += e;
            sum_e2[i] += e2;
            sum_e4[i] += e2 * e2;
        }
    }
};

struct MaxMseRow {
    double max_mse = 0.0;
    double bias2_at_max = 0.0;
    double var_at_max = 0.0;
    double mc_var_at_max = 0.0;
};

// mse = <e^2>, bias^2 = <e>^2, var = mse - bias^2 (exact on these moments);
// reported at the frequency bin maximizing mse
MaxMseRow reduce_max_mse(const MomentMaps& mm, std::int64_t M) {
    const double m = static_cast<double>(M);
    MaxMseRow row;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < mm.sum_e2.size(); ++i) {
        const double mse = mm.sum_e2[i] / m;
        if (mse > row.max_mse) {
            row.max_mse = mse;
            arg = i;
        }
    }
    const double bias = mm.sum_e[arg] / m;
    row.bias2_at_max = bias * bias;
    row.var_at_max = row.max_mse - row.bias2_at_max;
    if (M > 1) {
        const double me2 = mm.sum_e2[arg] / m;
        const double me4 = mm.sum_e4[arg] / m;
        row.mc_var_at_max = std::max(0.0, me4 - me2 * me2) / (m - 1.0);
    }
    return row;
}

} // namespace

ExperimentCurve run_specwin_sweep(std::int64_t N, double W, std::vector<double> radii, int T,
                                  std::uint64_t seed, std::int64_t oversample) {
    radii = sorted_unique_radii(radii);
    if (oversample < 1) throw contract_error("specwin sweep: oversample must be >= 1");

    ExperimentCurve curve;
    curve.abscissa = "R";
    curve.statistic = "l1_window_error";
    curve.columns = {"R", "l1_window_error", "bound_rhs", "n_omega", "n_boundary", "K", "W"};
    const Extents freq{N * oversample, N * oversample};
    for (const double R : radii) {
        const DomainMask mask = disk_mask(N, R);
        const BandwidthSpec bw = make_bandwidth_from_W(W, mask);
        const TaperSet tapers =
            proxy_tapers(mask, bw, T, Rng::derive(seed, static_cast<std::uint64_t>(std::llround(R))));
        const double l1 = spectral_window_l1_error(tapers, bw, freq);
        const double nb = static_cast<double>(mask.n_boundary);
        const double bound = nb * W / static_cast<double>(bw.K) *
                             (1.0 + std::log(static_cast<double>(mask.n_omega) / nb));
        curve.rows.push_back({R, l1, bound, static_cast<double>(mask.n_omega), nb,
                              static_cast<double>(bw.K), W});
    }
    curve.meta = {{"sweep", "specwin"}, {"N", N},       {"W", W},
                  {"T", T},             {"seed", seed}, {"oversample", oversample}};
    curve.validate();
    return curve;
}

ExperimentCurve run_mse_sweep(std::int64_t N, std::vector<double> radii, std::int64_t M,
                              std::uint64_t seed) {
    radii = sorted_unique_radii(radii);
    if (M < 8) throw contract_error("mse sweep: M must be >= 8");

    const Extents freq{N, N};
    const SpectralGrid density = triple_disk_density(freq);
    const double c2 = density_c2_norm(density);

    ExperimentCurve curve;
    curve.abscissa = "R";
    curve.statistic = "max_mse_over_log2n";
    curve.columns = {"R",           "max_mse_over_log2n", "max_mse", "bias2_at_max",
                     "variance_at_max", "mc_var_at_max",  "bound_rhs", "n_omega",
                     "n_boundary",  "K",                  "W"};
    const int T = 2; // power-iteration depth; the statistic is insensitive to more rounds

    for (const double R : radii) {
        const DomainMask mask = disk_mask(N, R);
        const double n_omega = static_cast<double>(mask.n_omega);
        const double W = std::pow(n_omega, -1.0 / 6.0);
        const BandwidthSpec bw = make_bandwidth_from_W(W, mask);
        const std::uint64_t r_stream = static_cast<std::uint64_t>(std::llround(R));
        const TaperSet tapers = proxy_tapers(mask, bw, T, Rng::derive(seed, 90000000ull + r_stream));

        std::vector<std::vector<double>> slots(static_cast<std::size_t>(M));
        parallel_for(M, [&](std::int64_t nu) {
            const FieldSample field = sample_field(
                density, Rng::derive(seed, r_stream * 100000ull + static_cast<std::uint64_t>(nu)));
            slots[static_cast<std::size_t>(nu)] = multitaper_estimate(field, tapers, freq).values;
        });
        MomentMaps mm(density.values.size());
        for (const auto& est : slots) mm.add(est, density.values);
        const MaxMseRow row = reduce_max_mse(mm, M);

        const double nb = static_cast<double>(mask.n_boundary);
        const double K = static_cast<double>(bw.K);
        const double logn = std::log(n_omega);
        const double lr = 1.0 + std::log(n_omega / nb);
        const double bound =
            (K * K / (n_omega * n_omega) + nb * nb * lr * lr / (n_omega * K) + 1.0 / K) * c2 * c2;
        curve.rows.push_back({R, row.max_mse / (logn * logn), row.max_mse, row.bias2_at_max,
                              row.var_at_max, row.mc_var_at_max, bound, n_omega, nb, K, W});
    }
    curve.meta = {{"sweep", "mse"},     {"N", N},   {"M", M},
                  {"seed", seed},       {"T", T},   {"density", "triple_disk"},
                  {"density_c2_norm", c2}, {"log", "natural"}};
    curve.validate();
    return curve;
}

SubgridReport run_subgrid_comparison(int T, std::uint64_t seed, std::int64_t N, double W) {
    const Extents freq{N, N};
    const SpectralGrid density = triple_disk_density(freq);
    const FieldSample field = sample_field(density, Rng::derive(seed, 11));

    // centered square subgrid covering 2/3 of the grid side (85x85 at N=128)
    const std::int64_t side = 2 * N / 3;
    const std::int64_t off = (N - side) / 2;
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(N * N), 0);
    for (std::int64_t i = off; i < off + side; ++i)
        for (std::int64_t j = off; j < off + side; ++j)
            occ[static_cast<std::size_t>(i * N + j)] = 1;
    const DomainMask box = DomainMask::from_occupancy(freq, std::move(occ));

    // taper count chosen below the plateau edge so the top-K eigenspace of the
    // box operator has a genuine spectral gap and long power iterations settle
    const std::int64_t K_box = 25;

    CornerSubgrids single;
    single.mask = box;
    single.rects.push_back(Rect{{off, off}, {side, side}});
    const SpectralGrid est_tensor = cmt_estimate(field, single, W, K_box, freq);

    BandwidthSpec bw_box;
    bw_box.K = K_box;
    bw_box.W = W;
    bw_box.n_omega = box.n_omega;
    bw_box.d = box.d();
    const TaperSet proxy_box = proxy_tapers(box, bw_box, T, Rng::derive(seed, 12));
    const SpectralGrid est_proxy = multitaper_estimate(field, proxy_box, freq);

    const double R_dc = static_cast<double>(std::llround(static_cast<double>(N) / 3.0));
    const DomainMask dc = disk_complement_mask(N, R_dc);
    const BandwidthSpec bw_dc = make_bandwidth_from_W(W, dc);
    const TaperSet proxy_dc = proxy_tapers(dc, bw_dc, T, Rng::derive(seed, 13));
    const SpectralGrid est_dc = multitaper_estimate(field, proxy_dc, freq);

    SubgridReport rep;
    const double s_norm = l2_norm(density.values);
    rep.nrmse_tensor = l2_dist(est_tensor.values, density.values) / s_norm;
    rep.nrmse_proxy = l2_dist(est_proxy.values, density.values) / s_norm;
    rep.nrmse_disk_complement = l2_dist(est_dc.values, density.values) / s_norm;
    rep.deviation = l2_dist(est_tensor.values, est_proxy.values) / l2_norm(est_tensor.values);
    rep.meta = {{"N", N},
                {"W", W},
                {"T", T},
                {"seed", seed},
                {"subgrid_side", side},
                {"subgrid_offset", off},
                {"K_subgrid", K_box},
                {"disk_radius", R_dc},
                {"K_disk_complement", bw_dc.K},
                {"density", "triple_disk"}};
    return rep;
}

CryoemCurves run_cryoem_synthetic(std::vector<double> radii, std::int64_t M, std::uint64_t seed,
                                  std::int64_t N) {
    radii = sorted_unique_radii(radii);
    for (const double R : radii)
        if (!(R > 0.0 && R < static_cast<double>(N) / std::sqrt(2.0)))
            throw contract_error("cryoem sweep: radii must lie in (0, N/sqrt(2))");
    if (M < 1) throw contract_error("cryoem sweep: M must be >= 1");

    const Extents freq{N, N};
    const double W = 1.0 / 8.0;

    // noise spectrum: smooth test density rescaled to unit pointwise variance
    SpectralGrid noise_density = triple_disk_density(freq);
    {
        double mean = 0.0;
        for (const double v : noise_density.values) mean += v;
        mean /= static_cast<double>(noise_density.values.size());
        for (auto& v : noise_density.values) v /= mean;
        noise_density.meta["scaled_to_unit_variance"] = true;
    }

    // fields are radius-independent: deterministic projection + stationary noise
    std::vector<std::vector<double>> fields(static_cast<std::size_t>(M));
    parallel_for(M, [&](std::int64_t nu) {
        const auto nv = static_cast<std::uint64_t>(nu);
        FieldSample proj = synthetic_projection(freq, Rng::derive(seed, 40000ull + nv));
        const FieldSample noise = sample_field(noise_density, Rng::derive(seed, 50000ull + nv));
        for (std::size_t i = 0; i < proj.values.size(); ++i) proj.values[i] += noise.values[i];
        fields[static_cast<std::size_t>(nu)] = std::move(proj.values);
    });

    const std::vector<std::string> cols{"R",   "mper",      "cmt",        "pmt",
                                        "n_omega", "n_boundary", "K_pmt",  "W"};
    CryoemCurves out;
    for (ExperimentCurve* c : {&out.bias2, &out.variance, &out.mse}) {
        c->abscissa = "R";
        c->statistic = "pmt";
        c->columns = cols;
    }

    for (const double R : radii) {
        const DomainMask omega = disk_complement_mask(N, R);
        const CornerSubgrids corners = corner_subgrids_mask(N, R);
        const BandwidthSpec bw = make_bandwidth_from_W(W, omega);
        const std::uint64_t r_stream = static_cast<std::uint64_t>(std::llround(R));
        const TaperSet tapers = proxy_tapers(omega, bw, 2, Rng::derive(seed, 1000ull + r_stream));

        const std::size_t bins = static_cast<std::size_t>(flat_size(freq));
        std::vector<std::vector<double>> est_mper(static_cast<std::size_t>(M)),
            est_cmt(static_cast<std::size_t>(M)), est_pmt(static_cast<std::size_t>(M));
        parallel_for(M, [&](std::int64_t nu) {
            FieldSample field;
            field.dims = freq;
            field.values = fields[static_cast<std::size_t>(nu)];
            est_mper[static_cast<std::size_t>(nu)] = mper_estimate(field, omega, freq).values;
            est_cmt[static_cast<std::size_t>(nu)] =
                cmt_estimate(field, corners, W, std::nullopt, freq).values;
            est_pmt[static_cast<std::size_t>(nu)] = multitaper_estimate(field, tapers, freq).values;
        });

        MomentMaps mm_mper(bins), mm_cmt(bins), mm_pmt(bins);
        for (std::int64_t nu = 0; nu < M; ++nu) {
            mm_mper.add(est_mper[static_cast<std::size_t>(nu)], noise_density.values);
            mm_cmt.add(est_cmt[static_cast<std::size_t>(nu)], noise_density.values);
            mm_pmt.add(est_pmt[static_cast<std::size_t>(nu)], noise_density.values);
        }

        // max over frequency, separately per moment map (matching the figure
        // panels rather than a single argmax bin)
        const double m = static_cast<double>(M);
        double b2[3] = {0, 0, 0}, vr[3] = {0, 0, 0}, ms[3] = {0, 0, 0};
        const MomentMaps* maps[3] = {&mm_mper, &mm_cmt, &mm_pmt};
        for (int e = 0; e < 3; ++e) {
            for (std::size_t i = 0; i < bins; ++i) {
                const double mean_e = maps[e]->sum_e[i] / m;
                const double mse = maps[e]->sum_e2[i] / m;
                const double bias2 = mean_e * mean_e;
                b2[e] = std::max(b2[e], bias2);
                vr[e] = std::max(vr[e], mse - bias2);
                ms[e] = std::max(ms[e], mse);
            }
        }

        const double aux[4] = {static_cast<double>(omega.n_omega),
                               static_cast<double>(omega.n_boundary),
                               static_cast<double>(bw.K), W};
        out.bias2.rows.push_back({R, b2[0], b2[1], b2[2], aux[0], aux[1], aux[2], aux[3]});
        out.variance.rows.push_back({R, vr[0], vr[1], vr[2], aux[0], aux[1], aux[2], aux[3]});
        out.mse.rows.push_back({R, ms[0], ms[1], ms[2], aux[0], aux[1], aux[2], aux[3]});
    }

    const nlohmann::json meta = {{"sweep", "cryoem_synthetic"}, {"N", N},       {"M", M},
                                 {"seed", seed},                {"W", W},       {"T", 2},
                                 {"noise", "triple_disk, unit variance"}};
    for (ExperimentCurve* c : {&out.bias2, &out.variance, &out.mse}) {
        c->meta = meta;
        c->validate();
    }
    out.bias2.meta["moment"] = "bias2";
    out.variance.meta["moment"] = "variance";
    out.mse.meta["moment"] = "mse";
    return out;
}

} // namespace pmt
