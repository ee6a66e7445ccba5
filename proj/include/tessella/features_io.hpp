#pragma once

#include <string>
#include <vector>

#include "tessella/grid.hpp"
#include "tessella/stage_io.hpp"

namespace tess {

struct PatchKey {
    int panel = 0;  // index into FeatureFile::panels
    int sub_index = 0;
    int patch_row = 0, patch_col = 0;
};

// Per-patch descriptor table.
//
// On disk: a plain-text header, then a little-endian columnar payload.
//   tessella-features 1
//   config <16 hex digits>
//   seed <decimal>
//   dim <d>
//   records <n>
//   panels <p>
//   panel <index> <width> <height> <sub_rows> <sub_cols> <name>  (p lines)
//   end-header
// Payload: int32 columns panel[n], sub_index[n], patch_row[n], patch_col[n],
// then d feature columns of n float64 values each.
struct FeatureFile {
    int dim = 0;
    std::uint64_t config = 0;
    std::uint64_t seed = 0;
    std::vector<PanelInfo> panels;
    std::vector<PatchKey> keys;
    Matrix values;  // keys.size() x dim
};

// Writes to a temporary sibling and renames, so readers never observe a
// half-written file.
void save_features(const std::string& path, const FeatureFile& file);
FeatureFile load_features(const std::string& path);

// CSV mirror: panel,sub_index,patch_row,patch_col,f1..fd with %.17g values.
void export_features_csv(const std::string& path, const FeatureFile& file);

}  // namespace tess
