#pragma once

#include <string>
#include <vector>

#include "tessella/grid.hpp"
#include "tessella/stage_io.hpp"

namespace tess {

// Per-panel heatmap cell brightness for a pattern subset: each sub-image
// cell gets the selected patterns' weight sum, mapped linearly from
// [0, corpus-wide max] to [0, 1]. An all-zero corpus stays at 0.
// Result is indexed [panel][sub_index].
std::vector<std::vector<double>> heatmap_brightness(const Matrix& weights,
                                                    const std::vector<int>& doc_panel,
                                                    const std::vector<int>& doc_sub,
                                                    const std::vector<PanelInfo>& panels,
                                                    const std::vector<int>& patterns);

// Standalone SVG documents. All coordinates derive deterministically from
// the inputs.
std::string svg_bar_profile(const std::vector<double>& profile, const std::string& title);
std::string svg_heatmap(const PanelInfo& panel, const std::vector<double>& brightness,
                        const std::string& title);
std::string svg_scatter(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<int>& doc_panel, const std::vector<PanelInfo>& panels,
                        const std::string& title);

// Writes the report bundle into dir: per panel a bar-profile CSV + SVG and a
// heatmap SVG, plus one scatter SVG. Returns the written paths.
struct ReportFiles {
    std::vector<std::string> paths;
};
ReportFiles write_report(const std::string& dir, const StageHeader& header,
                         const std::vector<PanelInfo>& panels,
                         const std::vector<int>& doc_panel, const std::vector<int>& doc_sub,
                         const Matrix& weights, const std::vector<double>& embed_x,
                         const std::vector<double>& embed_y, const std::vector<int>& patterns);

}  // namespace tess
