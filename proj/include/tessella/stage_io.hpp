#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tess {

// Common provenance header carried by every stage artifact: magic string,
// format version, config hash, seed, and the FNV-1a hash of the direct
// upstream file (0 when the stage has no upstream).
struct StageHeader {
    std::string magic;
    int version = 1;
    std::uint64_t config = 0;
    std::uint64_t seed = 0;
    std::uint64_t upstream = 0;
};

// Geometry of one input panel, propagated through the stage files so the
// report can lay out heatmap cells without re-reading the images.
struct PanelInfo {
    std::string name;
    int width = 0, height = 0;
    int sub_rows = 0, sub_cols = 0;
};

// CSV stage files open with '#' comment lines:
//   # <magic> <version>
//   # config <16 hex digits>
//   # seed <decimal>
//   # upstream <16 hex digits>
//   # panel <index> <width> <height> <sub_rows> <sub_cols> <name>   (optional)
void write_stage_comments(std::ostream& out, const StageHeader& header,
                          const std::vector<PanelInfo>* panels = nullptr);

// Consumes the comment block, leaving the stream at the first data line.
// Malformed headers raise InputError.
StageHeader read_stage_comments(std::istream& in, std::vector<PanelInfo>* panels = nullptr);

// Magic/version/config agreement between a stage input and the active
// configuration. Mismatch raises PipelineError asking for an upstream
// re-run.
void check_stage_header(const StageHeader& header, const std::string& magic, int version,
                        std::uint64_t config, const std::string& path);

// Recorded upstream hash against the file actually on disk. Skipped when the
// upstream file no longer exists. Mismatch raises PipelineError.
void check_upstream(const StageHeader& header, const std::string& upstream_path,
                    const std::string& path);

// CSV field helpers shared by the stage writers/readers.
std::string csv_double(double v);  // %.17g, round-trip exact
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace tess
