#pragma once
#include <complex>

#include "pmt/grid.hpp"

namespace pmt {

// Thin cached-plan front end over FFTW's complex transforms. Plans are created
// once per (dims, direction) and reused; FFTW_UNALIGNED keeps them valid for
// ordinary heap buffers. inverse() is unnormalized (multiply by 1/size yourself).
namespace fft {

void forward(std::complex<double>* data, const Extents& dims);
void inverse(std::complex<double>* data, const Extents& dims);

// smallest 5-smooth size >= n, for convolution padding
std::int64_t next_fast_size(std::int64_t n);

} // namespace fft

} // namespace pmt
