#pragma once

#include <string>
#include <vector>

#include "tessella/grid.hpp"

namespace tess {

// One input painting panel, decoded to [0, 1] doubles.
struct PanelImage {
    std::string id;  // file stem by default
    int width = 0;
    int height = 0;
    Grid r, g, b;  // height x width
    std::vector<std::string> warnings;  // e.g. discarded alpha channel
};

// Decodes a PNG or TIFF file. 8-bit channels are scaled by 1/255, 16-bit by
// 1/65535. An alpha channel is dropped with a warning; a single-channel
// image is replicated to RGB. Unreadable or unsupported files raise
// InputError.
PanelImage load_panel(const std::string& path);

// 8-bit PNG writer for report assets and synthetic corpora. Values are
// clamped to [0, 1] before quantization.
void save_png(const std::string& path, const Grid& r, const Grid& g, const Grid& b);

}  // namespace tess
