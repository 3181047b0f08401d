#pragma once
#include <Eigen/Dense>

#include <optional>

#include "pmt/grid.hpp"
#include "pmt/spectral.hpp"
#include "pmt/tapers.hpp"

namespace pmt {

// |DFT of the taper-weighted field|^2 on the shifted lattice. The taper is a
// unit vector in the canonical site order of the mask; the field lives on the
// full grid the mask was built over.
SpectralGrid tapered_periodogram(const FieldSample& field, const DomainMask& mask,
                                 const Eigen::VectorXd& taper, const Extents& freq_dims);

// mean of the K tapered periodograms
SpectralGrid multitaper_estimate(const FieldSample& field, const TaperSet& tapers,
                                 const Extents& freq_dims);

// single-taper baseline with the normalized mask indicator
SpectralGrid mper_estimate(const FieldSample& field, const DomainMask& mask,
                           const Extents& freq_dims);

// tensor multitaper on each corner rectangle, averaged with equal weights;
// K_per_rect defaults to ceil(n_rect * W^d)
SpectralGrid cmt_estimate(const FieldSample& field, const CornerSubgrids& corners, double W,
                          std::optional<std::int64_t> K_per_rect, const Extents& freq_dims);

} // namespace pmt
