#pragma once

#include <vector>

#include "tessella/config.hpp"

namespace tess {

struct TileIndex {
    int sub_row = 0, sub_col = 0;  // sub-image grid coordinates
    int sub_index = 0;             // row-major over the sub-image grid
    int patch_row = 0, patch_col = 0;  // patch grid coordinates inside the sub-image
    int patch_index = 0;               // row-major inside the sub-image
    long global_id = 0;                // row-major over every patch of the panel
};

struct PatchRef {
    TileIndex index;
    int x0 = 0, y0 = 0;  // top-left pixel of the patch within the panel
};

struct TilePlan {
    int sub_rows = 0, sub_cols = 0;  // sub-image grid shape
    int grid = 0;                    // patches per sub-image side
    std::vector<PatchRef> patches;   // ordered by (sub_index, patch_index)

    int sub_count() const { return sub_rows * sub_cols; }
    int patches_per_sub() const { return grid * grid; }
};

// Row-major sub-image grid anchored at the top-left; right and bottom
// remainders narrower than one sub-image are dropped. Within each sub-image
// the patch grid steps by the stride.
// errors: image smaller than one sub-image -> InputError
TilePlan tile(int width, int height, const RunConfig& config);

}  // namespace tess
