#pragma once

#include <array>
#include <vector>

#include "tessella/grid.hpp"

namespace tess {

// Complex directional wavelet decomposition built from two real filter trees.
// Level 1 uses symmetric odd-length biorthogonal filters without decimation;
// deeper levels use an orthonormal even-length quarter-sample-shift pair on
// the interleaved tree outputs. Each level yields six complex subbands whose
// spectral peaks sit near {+15, +45, +75, -75, -45, -15} degrees; that list
// order defines subband indices 0..5 (1..6 in file headers and reports).

struct WaveletPyramid {
    int levels = 0;
    int rows = 0, cols = 0;                        // input plane shape
    std::vector<std::array<CGrid, 6>> subbands;    // subbands[l][b], level l+1
    Grid lowpass;                                  // coarsest interleaved lowpass
};

struct MagnitudePyramid {
    int levels = 0;
    std::vector<std::array<Grid, 6>> subbands;
};

// Requires rows and cols divisible by 2^levels and levels >= 1.
WaveletPyramid dtcwt_forward(const Grid& plane, int levels);
Grid dtcwt_inverse(const WaveletPyramid& pyr);

// Coefficient magnitudes of one pyramid.
MagnitudePyramid magnitudes(const WaveletPyramid& pyr);

// Per-node Euclidean fusion of three coordinate planes:
// m = sqrt(|wx|^2 + |wy|^2 + |wz|^2).
MagnitudePyramid fuse_magnitudes(const WaveletPyramid& x, const WaveletPyramid& y,
                                 const WaveletPyramid& z);

// Subband energy (sum of squared magnitudes), for orientation diagnostics.
double subband_energy(const CGrid& band);

namespace filters {
// Analysis/synthesis prototypes. Remaining bank members are derived:
// time reverse for the second tree, alternating-sign modulation for highpass.
extern const std::array<double, 14> kQshiftLowA;
extern const std::array<double, 9> kBiortAnalysisLow;
extern const std::array<double, 7> kBiortSynthesisLow;
}  // namespace filters

}  // namespace tess
