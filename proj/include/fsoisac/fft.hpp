#pragma once

#include <complex>
#include <span>
#include <vector>

// Thin wrapper over FFTW with unitary (1/sqrt(N)) scaling in both directions.
// Plans are cached per length; planning is serialized, execution is reentrant.
namespace fsoisac::fft {

using cplx = std::complex<double>;

std::vector<cplx> forward(std::span<const cplx> in);
std::vector<cplx> inverse(std::span<const cplx> in);

std::vector<cplx> forward_real(std::span<const double> in);

/// Inverse transform of a spectrum assumed Hermitian; returns the real part.
std::vector<double> inverse_real(std::span<const cplx> in);

}  // namespace fsoisac::fft
