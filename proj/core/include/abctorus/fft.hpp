#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace abctorus {

/// Uniform-size N-dimensional complex DFT, rank 1..3, size G per axis,
/// row-major layout. Unnormalized, matching the usual convention:
///   forward:  out[k] = sum_j in[j] e^{-2 pi i <j,k>/G}
///   backward: out[j] = sum_k in[k] e^{+2 pi i <j,k>/G}
/// Plans are cached per (rank, G, direction) and execution is serialized, so
/// repeated transforms are cheap and results are bit-reproducible.
void fft(int rank, int G, const std::complex<double>* in,
         std::complex<double>* out, bool forward);

/// Frequency along one axis for grid index k in [0,G): k for k <= G/2, else
/// k - G (so the representable band is [-(G/2-1), G/2], with G/2 = Nyquist).
inline int fft_freq(int k, int G) { return k <= G / 2 ? k : k - G; }

/// Grid index storing frequency n (requires -G/2 <= n <= G/2 representable).
inline int fft_bin(int n, int G) { return n >= 0 ? n : n + G; }

}  // namespace abctorus
