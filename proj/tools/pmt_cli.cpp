// Command-line front end: one binary, subcommand per operation. Artifacts are
// MTSG grids / CSV curves / JSON reports; every artifact gets a JSON sidecar
// with the fully resolved configuration so runs can be reproduced bit-for-bit
// single-threaded.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pmt/concentration.hpp"
#include "pmt/errors.hpp"
#include "pmt/estimator.hpp"
#include "pmt/experiments.hpp"
#include "pmt/grid.hpp"
#include "pmt/io.hpp"
#include "pmt/parallel.hpp"
#include "pmt/rng.hpp"
#include "pmt/simulate.hpp"
#include "pmt/tapers.hpp"

using nlohmann::json;

namespace {

// Per-subcommand configuration loader. JSON values act as defaults; flags given
// on the command line win. The config's "command" must name this subcommand
// (an optional "/variant" suffix carries enum flags like the mask kind, so a
// sidecar alone can reproduce a run).
struct ConfigLayer {
    CLI::App* cmd;
    json doc = json::object();
    std::string variant;

    ConfigLayer(CLI::App* c, const std::string& path) : cmd(c) {
        if (path.empty()) return;
        doc = pmt::io::read_json_file(path);
        doc.erase("derived"); // sidecars annotate runs with outputs; ignore on replay
        doc = pmt::io::validate_config(doc);
        if (doc.contains("command")) {
            std::string want = doc["command"].get<std::string>();
            const auto slash = want.find('/');
            if (slash != std::string::npos) {
                variant = want.substr(slash + 1);
                want = want.substr(0, slash);
            }
            if (want != cmd->get_name())
                throw pmt::contract_error("config: command '" + want + "' does not match subcommand '" +
                                          cmd->get_name() + "'");
        }
    }

    bool flag_given(const std::string& flag) const {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    }

    template <typename T>
    void fill(const std::string& flag, const char* key, T& var) const {
        if (!flag_given(flag) && doc.contains(key)) var = doc[key].get<T>();
    }

    void fill_path(const std::string& flag, const char* key, std::string& var) const {
        if (!flag_given(flag) && doc.contains("paths") && doc["paths"].contains(key))
            var = doc["paths"][key].get<std::string>();
    }

    void fill_variant(const std::string& flag, std::string& var) const {
        if (!flag_given(flag) && !variant.empty()) var = variant;
    }
};

void write_sidecar(const std::string& artifact, json config) {
    pmt::io::write_json_file(artifact + ".json", std::move(config));
}

json spectral_sidecar(const pmt::SpectralGrid& grid) {
    json j = grid.meta.is_null() ? json::object() : grid.meta;
    j["freq_dims"] = grid.freq_dims;
    return j;
}

pmt::BandwidthSpec resolve_bandwidth(const pmt::DomainMask& mask, std::int64_t K, double W) {
    if (K > 0 && W > 0.0) throw pmt::contract_error("give exactly one of --K / --W");
    if (K > 0) return pmt::make_bandwidth_from_K(K, mask);
    if (W > 0.0) return pmt::make_bandwidth_from_W(W, mask);
    throw pmt::contract_error("give exactly one of --K / --W");
}

std::string require(const std::string& value, const char* what) {
    if (value.empty()) throw pmt::contract_error(std::string("missing required ") + what);
    return value;
}

// ---------------------------------------------------------------- subcommands

void cmd_mask(CLI::App& app) {
    auto* cmd = app.add_subcommand("mask", "build an acquisition mask and write it as a grid file");
    auto kind = std::make_shared<std::string>("disk");
    auto N = std::make_shared<std::int64_t>(0);
    auto R = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--kind", *kind, "disk | disk-complement | corner-subgrids | full")
        ->check(CLI::IsMember({"disk", "disk-complement", "corner-subgrids", "full"}));
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--R", *R, "disk radius in cells");
    cmd->add_option("--out", *out, "output grid file");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill_variant("--kind", *kind);
        layer.fill("--N", "N", *N);
        layer.fill("--R", "R", *R);
        layer.fill_path("--out", "out", *out);
        if (*N <= 0) throw pmt::contract_error("mask: --N must be positive");
        require(*out, "--out");

        json sidecar{{"command", "mask/" + *kind}, {"N", *N}, {"paths", {{"out", *out}}}};
        pmt::DomainMask mask;
        std::int64_t n_rects = 0;
        if (*kind == "disk") {
            mask = pmt::disk_mask(*N, *R);
            sidecar["R"] = *R;
        } else if (*kind == "disk-complement") {
            mask = pmt::disk_complement_mask(*N, *R);
            sidecar["R"] = *R;
        } else if (*kind == "corner-subgrids") {
            pmt::CornerSubgrids cs = pmt::corner_subgrids_mask(*N, *R);
            mask = std::move(cs.mask);
            sidecar["R"] = *R;
            json rects = json::array();
            for (const auto& r : cs.rects) rects.push_back({{"offset", r.offset}, {"dims", r.dims}});
            sidecar["derived"] = {{"rects", rects}};
            n_rects = static_cast<std::int64_t>(cs.rects.size());
        } else {
            mask = pmt::DomainMask::from_occupancy(
                {*N, *N}, std::vector<std::uint8_t>(static_cast<std::size_t>(*N * *N), 1));
        }
        pmt::io::write_mask_grid(*out, mask);
        if (!sidecar.contains("derived")) sidecar["derived"] = json::object();
        sidecar["derived"]["n_omega"] = mask.n_omega;
        sidecar["derived"]["n_boundary"] = mask.n_boundary;
        write_sidecar(*out, sidecar);
        std::cout << "mask kind=" << *kind << " N=" << *N << " R=" << *R
                  << " n_omega=" << mask.n_omega << " n_boundary=" << mask.n_boundary
                  << (n_rects ? " rects=" + std::to_string(n_rects) : "") << " -> " << *out << "\n";
    });
}

void cmd_tapers(CLI::App& app) {
    auto* cmd = app.add_subcommand("tapers", "compute proxy tapers on a mask, one grid file each");
    auto mask_path = std::make_shared<std::string>();
    auto K = std::make_shared<std::int64_t>(0);
    auto W = std::make_shared<double>(0.0);
    auto T = std::make_shared<int>(2);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--mask", *mask_path, "mask grid file");
    cmd->add_option("--K", *K, "taper count (sets W = (K/n_omega)^(1/d))");
    cmd->add_option("--W", *W, "bandwidth (sets K = ceil(n_omega W^d))");
    cmd->add_option("--T", *T, "power iteration rounds");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--out", *out, "output directory");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--K", "K", *K);
        layer.fill("--W", "W", *W);
        layer.fill("--T", "T", *T);
        layer.fill("--seed", "seed", *seed);
        layer.fill_path("--mask", "mask", *mask_path);
        layer.fill_path("--out", "out", *out);
        require(*mask_path, "--mask");
        require(*out, "--out");

        const pmt::DomainMask mask = pmt::io::read_mask_grid(*mask_path);
        const pmt::BandwidthSpec bw = resolve_bandwidth(mask, *K, *W);
        const pmt::TaperSet tapers = pmt::proxy_tapers(mask, bw, *T, *seed);

        std::filesystem::create_directories(*out);
        const std::int64_t total = mask.total();
        std::vector<double> embedded(static_cast<std::size_t>(total));
        for (std::int64_t k = 0; k < tapers.K(); ++k) {
            std::fill(embedded.begin(), embedded.end(), 0.0);
            for (std::size_t i = 0; i < mask.sites.size(); ++i)
                embedded[static_cast<std::size_t>(mask.sites[i])] =
                    tapers.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            char name[32];
            std::snprintf(name, sizeof(name), "tap_%03lld.mtsg", static_cast<long long>(k));
            pmt::io::write_grid((std::filesystem::path(*out) / name).string(), mask.dims, embedded);
        }
        json sidecar{{"command", "tapers"},
                     {"T", *T},
                     {"seed", *seed},
                     {"paths", {{"mask", *mask_path}, {"out", *out}}},
                     {"derived",
                      {{"kind", pmt::taper_kind_name(tapers.kind)},
                       {"K", bw.K},
                       {"W", bw.W},
                       {"lambdas", tapers.lambdas},
                       {"n_omega", mask.n_omega},
                       {"rng", "splitmix64+box-muller"}}}};
        // record the bandwidth parameter as given so a replay resolves it the same way
        if (*W > 0.0)
            sidecar["W"] = *W;
        else
            sidecar["K"] = bw.K;
        pmt::io::write_json_file((std::filesystem::path(*out) / "tapers.json").string(), sidecar);
        std::cout << "tapers K=" << bw.K << " W=" << bw.W << " T=" << *T << " seed=" << *seed
                  << " n_omega=" << mask.n_omega << " -> " << *out << "\n";
    });
}

void cmd_window(CLI::App& app) {
    auto* cmd = app.add_subcommand("window", "accumulated spectral window of a proxy taper family");
    auto mask_path = std::make_shared<std::string>();
    auto K = std::make_shared<std::int64_t>(0);
    auto W = std::make_shared<double>(0.0);
    auto T = std::make_shared<int>(2);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto freq = std::make_shared<std::vector<std::int64_t>>();
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--mask", *mask_path, "mask grid file");
    cmd->add_option("--K", *K, "taper count");
    cmd->add_option("--W", *W, "bandwidth");
    cmd->add_option("--T", *T, "power iteration rounds");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--freq", *freq, "window lattice extents (default: mask dims)")->delimiter(',');
    cmd->add_option("--out", *out, "output grid file");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--K", "K", *K);
        layer.fill("--W", "W", *W);
        layer.fill("--T", "T", *T);
        layer.fill("--seed", "seed", *seed);
        layer.fill("--freq", "freq_dims", *freq);
        layer.fill_path("--mask", "mask", *mask_path);
        layer.fill_path("--out", "out", *out);
        require(*mask_path, "--mask");
        require(*out, "--out");

        const pmt::DomainMask mask = pmt::io::read_mask_grid(*mask_path);
        const pmt::BandwidthSpec bw = resolve_bandwidth(mask, *K, *W);
        const pmt::TaperSet tapers = pmt::proxy_tapers(mask, bw, *T, *seed);
        const pmt::Extents freq_dims = freq->empty() ? mask.dims : *freq;
        const pmt::SpectralGrid rho = pmt::accumulated_spectral_window(tapers, freq_dims);

        double integral = 0.0;
        for (const double v : rho.values) integral += v;
        integral /= static_cast<double>(rho.size());
        const double l1 = pmt::spectral_window_l1_error(tapers, bw, freq_dims);

        pmt::io::write_grid(*out, rho.freq_dims, rho.values);
        json sidecar{{"command", "window"},
                     {"T", *T},
                     {"seed", *seed},
                     {"freq_dims", rho.freq_dims},
                     {"paths", {{"mask", *mask_path}, {"out", *out}}},
                     {"derived",
                      {{"K", bw.K},
                       {"W", bw.W},
                       {"integral", integral},
                       {"l1_window_error", l1},
                       {"meta", spectral_sidecar(rho)}}}};
        if (*W > 0.0)
            sidecar["W"] = *W;
        else
            sidecar["K"] = bw.K;
        write_sidecar(*out, sidecar);
        std::cout << "window K=" << bw.K << " W=" << bw.W << " integral=" << integral
                  << " l1_error=" << l1 << " -> " << *out << "\n";
    });
}

void cmd_estimate(CLI::App& app) {
    auto* cmd = app.add_subcommand("estimate", "spectral density estimate of a field on a mask");
    auto method = std::make_shared<std::string>("pmt");
    auto field_path = std::make_shared<std::string>();
    auto mask_path = std::make_shared<std::string>();
    auto N = std::make_shared<std::int64_t>(0);
    auto R = std::make_shared<double>(0.0);
    auto K = std::make_shared<std::int64_t>(0);
    auto W = std::make_shared<double>(0.0);
    auto T = std::make_shared<int>(2);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto freq = std::make_shared<std::vector<std::int64_t>>();
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--method", *method, "pmt | mper | cmt")
        ->check(CLI::IsMember({"pmt", "mper", "cmt"}));
    cmd->add_option("--field", *field_path, "field grid file");
    cmd->add_option("--mask", *mask_path, "mask grid file (pmt, mper)");
    cmd->add_option("--N", *N, "grid side (cmt)");
    cmd->add_option("--R", *R, "disk radius (cmt corner layout)");
    cmd->add_option("--K", *K, "taper count (pmt; per-rect override for cmt)");
    cmd->add_option("--W", *W, "bandwidth");
    cmd->add_option("--T", *T, "power iteration rounds (pmt)");
    cmd->add_option("--seed", *seed, "RNG seed (pmt)");
    cmd->add_option("--freq", *freq, "estimate lattice extents (default: field dims)")->delimiter(',');
    cmd->add_option("--out", *out, "output grid file");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill_variant("--method", *method);
        layer.fill("--N", "N", *N);
        layer.fill("--R", "R", *R);
        layer.fill("--K", "K", *K);
        layer.fill("--W", "W", *W);
        layer.fill("--T", "T", *T);
        layer.fill("--seed", "seed", *seed);
        layer.fill("--freq", "freq_dims", *freq);
        layer.fill_path("--field", "field", *field_path);
        layer.fill_path("--mask", "mask", *mask_path);
        layer.fill_path("--out", "out", *out);
        require(*field_path, "--field");
        require(*out, "--out");

        const pmt::io::Grid fg = pmt::io::read_grid(*field_path);
        pmt::FieldSample field;
        field.dims = fg.dims;
        field.values = fg.values;
        const pmt::Extents freq_dims = freq->empty() ? field.dims : *freq;

        pmt::SpectralGrid est;
        json sidecar{{"command", "estimate/" + *method},
                     {"freq_dims", freq_dims},
                     {"paths", {{"field", *field_path}, {"out", *out}}}};
        if (*method == "mper") {
            require(*mask_path, "--mask");
            const pmt::DomainMask mask = pmt::io::read_mask_grid(*mask_path);
            est = pmt::mper_estimate(field, mask, freq_dims);
            sidecar["paths"]["mask"] = *mask_path;
        } else if (*method == "pmt") {
            require(*mask_path, "--mask");
            const pmt::DomainMask mask = pmt::io::read_mask_grid(*mask_path);
            const pmt::BandwidthSpec bw = resolve_bandwidth(mask, *K, *W);
            const pmt::TaperSet tapers = pmt::proxy_tapers(mask, bw, *T, *seed);
            est = pmt::multitaper_estimate(field, tapers, freq_dims);
            sidecar["paths"]["mask"] = *mask_path;
            if (*W > 0.0)
                sidecar["W"] = *W;
            else
                sidecar["K"] = bw.K;
            sidecar["T"] = *T;
            sidecar["seed"] = *seed;
        } else {
            if (*N <= 0) throw pmt::contract_error("estimate: cmt needs --N and --R");
            if (!(*W > 0.0)) throw pmt::contract_error("estimate: cmt needs --W");
            const pmt::CornerSubgrids corners = pmt::corner_subgrids_mask(*N, *R);
            std::optional<std::int64_t> k_rect;
            if (*K > 0) k_rect = *K;
            est = pmt::cmt_estimate(field, corners, *W, k_rect, freq_dims);
            sidecar["N"] = *N;
            sidecar["R"] = *R;
            sidecar["W"] = *W;
            if (*K > 0) sidecar["K"] = *K;
        }
        pmt::io::write_grid(*out, est.freq_dims, est.values);
        sidecar["derived"] = {{"meta", spectral_sidecar(est)}};
        write_sidecar(*out, sidecar);
        std::cout << "estimate method=" << *method << " bins=" << est.size() << " -> " << *out
                  << "\n";
    });
}

void cmd_simulate(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "draw a field: stationary synthesis or blob phantom");
    auto density = std::make_shared<std::string>("triple-disk");
    auto N = std::make_shared<std::int64_t>(0);
    auto d = std::make_shared<std::int64_t>(2);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--density", *density, "triple-disk | constant (unit level) | projection")
        ->check(CLI::IsMember({"triple-disk", "constant", "projection"}));
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--d", *d, "dimension (constant density only; others are 2-D)");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--out", *out, "output grid file");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill_variant("--density", *density);
        layer.fill("--N", "N", *N);
        layer.fill("--d", "d", *d);
        layer.fill("--seed", "seed", *seed);
        layer.fill_path("--out", "out", *out);
        if (*N <= 0) throw pmt::contract_error("simulate: --N must be positive");
        require(*out, "--out");

        pmt::FieldSample field;
        if (*density == "projection") {
            field = pmt::synthetic_projection({*N, *N}, *seed);
        } else {
            const pmt::Extents dims(static_cast<std::size_t>(*d), *N);
            const pmt::DensitySpec spec = (*density == "constant")
                                              ? pmt::DensitySpec::constant(1.0)
                                              : pmt::DensitySpec::triple_disk();
            field = pmt::sample_field(spec, dims, *seed);
        }
        pmt::io::write_grid(*out, field.dims, field.values);
        json sidecar{{"command", "simulate/" + *density},
                     {"N", *N},
                     {"d", *d},
                     {"seed", *seed},
                     {"paths", {{"out", *out}}},
                     {"derived", {{"rng", "splitmix64+box-muller"}}}};
        write_sidecar(*out, sidecar);
        std::cout << "simulate density=" << *density << " dims=" << field.dims.size() << "x" << *N
                  << " seed=" << *seed << " -> " << *out << "\n";
    });
}

std::vector<double> default_radii_small() { return {16, 32, 64, 128}; }

void cmd_sweep_specwin(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep-specwin", "spectral-window L1 error over growing disks");
    auto N = std::make_shared<std::int64_t>(256);
    auto W = std::make_shared<double>(0.125);
    auto radii = std::make_shared<std::vector<double>>(default_radii_small());
    auto T = std::make_shared<int>(2);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--W", *W, "bandwidth");
    cmd->add_option("--radii", *radii, "disk radii")->delimiter(',');
    cmd->add_option("--T", *T, "power iteration rounds");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--out", *out, "output CSV");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--N", "N", *N);
        layer.fill("--W", "W", *W);
        layer.fill("--radii", "radii", *radii);
        layer.fill("--T", "T", *T);
        layer.fill("--seed", "seed", *seed);
        layer.fill_path("--out", "out", *out);
        require(*out, "--out");

        const pmt::ExperimentCurve curve = pmt::run_specwin_sweep(*N, *W, *radii, *T, *seed);
        const pmt::SlopeFit fit = pmt::fit_loglog_slope(curve);
        pmt::io::write_curve_csv(*out, curve);
        json sidecar{{"command", "sweep-specwin"}, {"N", *N},       {"W", *W},
                     {"radii", *radii},            {"T", *T},       {"seed", *seed},
                     {"paths", {{"out", *out}}},
                     {"derived", {{"slope", fit.slope}, {"stderr", fit.se}, {"meta", curve.meta}}}};
        write_sidecar(*out, sidecar);
        std::cout << "sweep-specwin N=" << *N << " W=" << *W << " slope=" << fit.slope
                  << " stderr=" << fit.se << " -> " << *out << "\n";
    });
}

void cmd_sweep_mse(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep-mse", "max mse of the proxy multitaper over growing disks");
    auto N = std::make_shared<std::int64_t>(256);
    auto radii = std::make_shared<std::vector<double>>(default_radii_small());
    auto M = std::make_shared<std::int64_t>(32);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--radii", *radii, "disk radii")->delimiter(',');
    cmd->add_option("--M", *M, "fields per radius");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--out", *out, "output CSV");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--N", "N", *N);
        layer.fill("--radii", "radii", *radii);
        layer.fill("--M", "M", *M);
        layer.fill("--seed", "seed", *seed);
        layer.fill_path("--out", "out", *out);
        require(*out, "--out");

        const pmt::ExperimentCurve curve = pmt::run_mse_sweep(*N, *radii, *M, *seed);
        const pmt::SlopeFit fit = pmt::fit_loglog_slope(curve);
        pmt::io::write_curve_csv(*out, curve);
        json sidecar{{"command", "sweep-mse"}, {"N", *N},     {"radii", *radii},
                     {"M", *M},                {"seed", *seed},
                     {"paths", {{"out", *out}}},
                     {"derived", {{"slope", fit.slope}, {"stderr", fit.se}, {"meta", curve.meta}}}};
        write_sidecar(*out, sidecar);
        std::cout << "sweep-mse N=" << *N << " M=" << *M << " slope=" << fit.slope
                  << " stderr=" << fit.se << " -> " << *out << "\n";
    });
}

void cmd_compare_subgrid(CLI::App& app) {
    auto* cmd = app.add_subcommand("compare-subgrid",
                                   "tensor vs proxy multitaper on a centered square subgrid");
    auto T = std::make_shared<int>(2);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto N = std::make_shared<std::int64_t>(128);
    auto W = std::make_shared<double>(1.0 / 16.0);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--T", *T, "power iteration rounds");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--W", *W, "bandwidth");
    cmd->add_option("--out", *out, "output JSON report");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--T", "T", *T);
        layer.fill("--seed", "seed", *seed);
        layer.fill("--N", "N", *N);
        layer.fill("--W", "W", *W);
        layer.fill_path("--out", "out", *out);
        require(*out, "--out");

        const pmt::SubgridReport rep = pmt::run_subgrid_comparison(*T, *seed, *N, *W);
        json doc{{"nrmse_tensor", rep.nrmse_tensor},
                 {"nrmse_proxy", rep.nrmse_proxy},
                 {"nrmse_disk_complement", rep.nrmse_disk_complement},
                 {"deviation", rep.deviation},
                 {"meta", rep.meta}};
        pmt::io::write_json_file(*out, doc);
        write_sidecar(*out, json{{"command", "compare-subgrid"},
                                 {"T", *T},
                                 {"seed", *seed},
                                 {"N", *N},
                                 {"W", *W},
                                 {"paths", {{"out", *out}}}});
        std::cout << "compare-subgrid T=" << *T << " nrmse_tensor=" << rep.nrmse_tensor
                  << " nrmse_proxy=" << rep.nrmse_proxy << " deviation=" << rep.deviation
                  << " nrmse_dc=" << rep.nrmse_disk_complement << " -> " << *out << "\n";
    });
}

void cmd_compare_cryoem(CLI::App& app) {
    auto* cmd = app.add_subcommand("compare-cryoem",
                                   "noise-spectrum recovery under a synthetic particle signal");
    auto radii = std::make_shared<std::vector<double>>(std::vector<double>{48, 52, 56, 60, 64, 68, 70});
    auto M = std::make_shared<std::int64_t>(32);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto N = std::make_shared<std::int64_t>(128);
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<std::string>();
    cmd->add_option("--radii", *radii, "mask radii")->delimiter(',');
    cmd->add_option("--M", *M, "fields per radius");
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("--N", *N, "grid side length");
    cmd->add_option("--out", *out, "output CSV prefix");
    cmd->add_option("--config", *cfg, "JSON config; flags override");

    cmd->callback([=]() {
        ConfigLayer layer(cmd, *cfg);
        layer.fill("--radii", "radii", *radii);
        layer.fill("--M", "M", *M);
        layer.fill("--seed", "seed", *seed);
        layer.fill("--N", "N", *N);
        layer.fill_path("--out", "out", *out);
        require(*out, "--out");

        const pmt::CryoemCurves curves = pmt::run_cryoem_synthetic(*radii, *M, *seed, *N);
        pmt::io::write_curve_csv(*out + "_bias2.csv", curves.bias2);
        pmt::io::write_curve_csv(*out + "_variance.csv", curves.variance);
        pmt::io::write_curve_csv(*out + "_mse.csv", curves.mse);

        const auto rcol = curves.mse.column("R");
        const auto mper = curves.mse.column("mper");
        const auto cmt = curves.mse.column("cmt");
        const auto pmtc = curves.mse.column("pmt");
        double pm = 0.0, cm = 0.0, mm = 0.0, pm_all = 0.0, mm_all = 0.0;
        std::int64_t big = 0;
        for (std::size_t i = 0; i < rcol.size(); ++i) {
            pm_all += pmtc[i];
            mm_all += mper[i];
            if (rcol[i] >= 60.0) {
                pm += pmtc[i];
                cm += cmt[i];
                mm += mper[i];
                ++big;
            }
        }
        json sidecar{{"command", "compare-cryoem"},
                     {"radii", *radii},
                     {"M", *M},
                     {"seed", *seed},
                     {"N", *N},
                     {"paths", {{"out", *out}}},
                     {"derived",
                      {{"pmt_over_cmt_mse_R_ge_60", big ? pm / cm : 0.0},
                       {"pmt_over_mper_mse", pm_all / mm_all},
                       {"meta", curves.mse.meta}}}};
        write_sidecar(*out + "_mse.csv", sidecar);
        write_sidecar(*out + "_bias2.csv", sidecar);
        write_sidecar(*out + "_variance.csv", sidecar);
        std::cout << "compare-cryoem radii=" << rcol.size() << " M=" << *M
                  << " pmt/cmt(R>=60)=" << (big ? pm / cm : 0.0) << " pmt/mper=" << pm_all / mm_all
                  << " -> " << *out << "_{bias2,variance,mse}.csv\n";
    });
}

int run_selftest();

void cmd_selftest(CLI::App& app) {
    auto* cmd = app.add_subcommand("selftest", "trace identities, span invariance, oracle equivalence");
    cmd->callback([]() {
        if (run_selftest() != 0) throw pmt::numeric_error("selftest failed");
    });
}

// quick in-process checks: exact trace identities, estimator invariance under
// taper rotation, FFT apply against the dense operator, naive DFT periodogram
int run_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok, double measured, double tol) {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "  measured=" << measured
                  << " tol=" << tol << "\n";
        if (!ok) ++failures;
    };

    { // trace identities on a 1-D interval and a 2-D disk complement
        for (int which = 0; which < 2; ++which) {
            pmt::DomainMask mask;
            double W;
            if (which == 0) {
                mask = pmt::DomainMask::from_occupancy({32}, std::vector<std::uint8_t>(32, 1));
                W = 7.0 / 32.0;
            } else {
                mask = pmt::disk_complement_mask(16, 5.0);
                W = 0.25;
            }
            const pmt::BandwidthSpec bw = pmt::make_bandwidth_from_W(W, mask);
            const pmt::TraceDiagnostics td = pmt::trace_diagnostics(mask, bw);
            const double want = std::pow(W, mask.d()) * static_cast<double>(mask.n_omega);
            const double rel = std::abs(td.trace_T - want) / want;
            report(which == 0 ? "trace identity (1-D interval)" : "trace identity (2-D disk complement)",
                   rel <= 1e-9 && td.defect >= -1e-9, rel, 1e-9);

            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pmt::dense_operator(mask, bw));
            double defect_eig = 0.0;
            for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
                const double l = eig.eigenvalues()[i];
                defect_eig += l * (1.0 - l);
            }
            report("defect vs dense eigenvalues", std::abs(td.defect - defect_eig) <= 1e-8,
                   std::abs(td.defect - defect_eig), 1e-8);
        }
    }

    { // span invariance of the multitaper estimate under basis rotation
        pmt::Rng rng(404);
        const std::int64_t K = 6;
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<std::uint8_t> occ(15 * 17, 0);
            std::int64_t count = 0;
            for (auto& o : occ)
                if (rng.next_unit() < 0.55) {
                    o = 1;
                    ++count;
                }
            if (count < K) continue;
            const pmt::DomainMask mask = pmt::DomainMask::from_occupancy({15, 17}, occ);
            const pmt::TaperSet tapers = pmt::proxy_tapers(mask, K, 2, 1234 + rep);

            Eigen::MatrixXd G(K, K);
            for (Eigen::Index i = 0; i < K; ++i)
                for (Eigen::Index j = 0; j < K; ++j) G(i, j) = rng.next_normal();
            const Eigen::MatrixXd U = pmt::orthonormalize_columns(G);
            const pmt::TaperSet rotated = pmt::rotate_tapers(tapers, U);

            pmt::FieldSample field;
            field.dims = mask.dims;
            field.values.resize(static_cast<std::size_t>(mask.total()));
            for (auto& v : field.values) v = rng.next_normal();

            const pmt::Extents freq{16, 18};
            const auto a = pmt::multitaper_estimate(field, tapers, freq);
            const auto b = pmt::multitaper_estimate(field, rotated, freq);
            double sup = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                sup = std::max(sup, std::abs(a.values[i] - b.values[i]));
                scale = std::max(scale, std::abs(a.values[i]));
            }
            report("span invariance under basis rotation", sup / scale <= 1e-10, sup / scale, 1e-10);
        }
    }

    { // FFT apply vs dense operator on a random 12x12 mask
        pmt::Rng rng(505);
        std::vector<std::uint8_t> occ(144, 0);
        for (auto& o : occ) o = rng.next_unit() < 0.6 ? 1 : 0;
        occ[0] = 1;
        const pmt::DomainMask mask = pmt::DomainMask::from_occupancy({12, 12}, occ);
        const pmt::BandwidthSpec bw = pmt::make_bandwidth_from_W(0.21, mask);
        const Eigen::MatrixXd dense = pmt::dense_operator(mask, bw);
        Eigen::MatrixXd X(mask.n_omega, 3);
        for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.next_normal();
        const pmt::ConcentrationOperator op(mask, bw);
        const Eigen::MatrixXd fast = op.apply_block(X);
        const double rel = (fast - dense * X).norm() / (dense * X).norm();
        report("FFT apply vs dense operator", rel <= 1e-12, rel, 1e-12);
    }

    { // tapered periodogram vs the naive double-sum DFT on an 8x8 mask
        pmt::Rng rng(606);
        std::vector<std::uint8_t> occ(64, 0);
        for (auto& o : occ) o = rng.next_unit() < 0.7 ? 1 : 0;
        occ[10] = 1;
        const pmt::DomainMask mask = pmt::DomainMask::from_occupancy({8, 8}, occ);
        Eigen::VectorXd taper(mask.n_omega);
        for (Eigen::Index i = 0; i < taper.size(); ++i) taper[i] = rng.next_normal();
        taper.normalize();
        pmt::FieldSample field;
        field.dims = mask.dims;
        field.values.resize(64);
        for (auto& v : field.values) v = rng.next_normal();

        const pmt::Extents freq{8, 8};
        const auto fast = pmt::tapered_periodogram(field, mask, taper, freq);
        double worst = 0.0;
        for (std::int64_t k0 = 0; k0 < 8; ++k0)
            for (std::int64_t k1 = 0; k1 < 8; ++k1) {
                const double xi0 = static_cast<double>(k0) / 8.0 - 0.5;
                const double xi1 = static_cast<double>(k1) / 8.0 - 0.5;
                std::complex<double> acc = 0.0;
                for (std::size_t s = 0; s < mask.sites.size(); ++s) {
                    const std::int64_t q0 = mask.sites[s] / 8, q1 = mask.sites[s] % 8;
                    const double phase = -6.283185307179586 * (xi0 * static_cast<double>(q0) +
                                                              xi1 * static_cast<double>(q1));
                    acc += taper[static_cast<Eigen::Index>(s)] *
                           field.values[static_cast<std::size_t>(mask.sites[s])] *
                           std::complex<double>(std::cos(phase), std::sin(phase));
                }
                worst = std::max(worst, std::abs(std::norm(acc) -
                                                 fast.values[static_cast<std::size_t>(k0 * 8 + k1)]));
            }
        report("tapered periodogram vs naive DFT", worst <= 1e-10, worst, 1e-10);
    }

    std::cout << (failures == 0 ? "selftest: all checks passed\n"
                                : "selftest: " + std::to_string(failures) + " checks FAILED\n");
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot multitaper spectral density estimation on irregular grids"};
    app.require_subcommand(1);
    app.add_option_function<int>(
        "--threads", [](int n) { pmt::set_thread_cap(n); },
        "worker thread cap (default: logical cores)");

    cmd_mask(app);
    cmd_tapers(app);
    cmd_window(app);
    cmd_estimate(app);
    cmd_simulate(app);
    cmd_sweep_specwin(app);
    cmd_sweep_mse(app);
    cmd_compare_subgrid(app);
    cmd_compare_cryoem(app);
    cmd_selftest(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 64;
    } catch (const pmt::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
