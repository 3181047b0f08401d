#pragma once
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "pmt/spectral.hpp"

namespace pmt {

// One sweep result: column 0 is the abscissa (strictly increasing), `statistic`
// names the headline column slope fits run on; auxiliary columns carry nΩ, n∂Ω,
// K, W and friends for the bound checks.
struct ExperimentCurve {
    std::string abscissa;
    std::string statistic;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    nlohmann::json meta;

    std::vector<double> column(const std::string& name) const;
    void validate() const;
};

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

// OLS on (log x, log y); needs >= 3 points, all positive
SlopeFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);
SlopeFit fit_loglog_slope(const ExperimentCurve& curve);

// sup over the lattice of |S| and its periodic central-difference first and
// second derivatives; the Holder-type constant the mse bound is stated in
double density_c2_norm(const SpectralGrid& density);

// Spectral-window L1 error of proxy tapers on growing disks, K = ceil(nΩ W^2),
// plus the bound surrogate (n∂Ω W / K)(1 + log(nΩ/n∂Ω)). The window is
// evaluated on an `oversample`x denser lattice than the mask grid.
ExperimentCurve run_specwin_sweep(std::int64_t N, double W, std::vector<double> radii, int T,
                                  std::uint64_t seed, std::int64_t oversample = 4);

// Max-over-frequency mse of the proxy multitaper against the smooth test
// density on growing disks, W = nΩ^{-1/6}, M fields per radius; the headline
// statistic is max-mse / log^2(nΩ). Per-bin error moments also give the
// bias^2/variance split and the Monte-Carlo variance of mse-hat at the argmax.
ExperimentCurve run_mse_sweep(std::int64_t N, std::vector<double> radii, std::int64_t M,
                              std::uint64_t seed);

struct SubgridReport {
    double nrmse_tensor = 0.0;          // exact tensor tapers on the centered 85x85 box
    double nrmse_proxy = 0.0;           // proxy tapers, same box, given T
    double nrmse_disk_complement = 0.0; // proxy tapers outside the R=43 disk
    double deviation = 0.0;             // ||S_tensor - S_proxy|| / ||S_tensor||
    nlohmann::json meta;
};

// One field from the smooth test density; tensor vs proxy multitaper on the
// centered square subgrid and proxy on the disk complement
SubgridReport run_subgrid_comparison(int T, std::uint64_t seed, std::int64_t N = 128,
                                     double W = 1.0 / 16.0);

struct CryoemCurves {
    ExperimentCurve bias2;
    ExperimentCurve variance;
    ExperimentCurve mse;
};

// Noise-spectrum recovery with a deterministic signal in the way: per radius,
// masked periodogram / corner tensor multitaper / proxy multitaper on the disk
// complement, each aggregated as the max over frequency of the Monte-Carlo
// moment maps. Columns mper, cmt, pmt per curve.
CryoemCurves run_cryoem_synthetic(std::vector<double> radii, std::int64_t M, std::uint64_t seed,
                                  std::int64_t N = 128);

} // namespace pmt
