// JSON serialization of the core value types.
//
// Map documents use the half-spectrum storage convention of FourierMap:
//
//   { "dim": N,
//     "linear":   [N*N integers, row-major],
//     "constant": [N doubles],
//     "modes":    [[frequencies...], [re...], [im...]] }
//
// The three mode arrays are parallel and mode-major (entry m occupies slots
// [m*N, (m+1)*N)), one entry per stored conjugate-pair representative.
// Doubles round-trip bit exactly. Readers accept non-canonical input: a
// mirrored frequency is folded by conjugation and repeated frequencies
// accumulate, matching the FourierMap constructor.
//
// Action files bundle an affine action:
//
//   { "N": ..., "K": ...,
//     "A": [[...]], "B": [[...]],          (N x N integer rows)
//     "rho": [[[...]], ...] }              (K rotation matrices, N x N)
//
// Loading re-certifies every rotation matrix against (A, B) and validates
// the assembled action; malformed documents raise ConfigInvalid.
#pragma once

#include <string>

#include "abctorus/algebra.hpp"
#include "abctorus/fourier_map.hpp"

namespace abctorus {

std::string fourier_map_to_json(const FourierMap& f, int indent = 2);
FourierMap fourier_map_from_json(const std::string& text);

std::string action_to_json(const AffineABCAction& act, int indent = 2);
AffineABCAction action_from_json(const std::string& text, double tol = 1e-9);

/// Whole-file helpers; failures raise ConfigInvalid.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace abctorus
