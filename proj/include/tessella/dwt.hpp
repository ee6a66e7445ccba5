#pragma once

#include <array>
#include <vector>

#include "tessella/grid.hpp"

namespace tess {

// Critically sampled separable real wavelet transform with the same 9/7
// level-1 filter pair as the complex transform. Exists purely as the
// aliasing-prone baseline in shift-invariance comparisons.
struct DwtPyramid {
    int levels = 0;
    std::vector<std::array<Grid, 3>> details;  // per level: LH, HL, HH
    Grid approx;
};

DwtPyramid dwt_forward(const Grid& plane, int levels);

}  // namespace tess
