#pragma once

#include <string>
#include <vector>

#include "tessella/config.hpp"
#include "tessella/features_io.hpp"
#include "tessella/grid.hpp"
#include "tessella/stage_io.hpp"

namespace tess {

// descriptor width: 6 orientations x (6 scales x 2 mixture variances +
// 4 parent scales x 2 persistence diagonals)
constexpr int kFeatureDim = 120;

// Stage artifact locations under one output directory.
struct StagePaths {
    std::string features;      // features.bin
    std::string features_csv;  // features.csv (optional export)
    std::string journal;       // features.journal (extract resume state)
    std::string extract_log;   // extract_log.txt
    std::string vocab;         // vocab.json
    std::string labels;        // labels.csv
    std::string model;         // model.json
    std::string weights;       // weights.csv
    std::string embedding;     // embedding.csv
    std::string report_dir;    // report/
};
StagePaths stage_paths(const std::string& out_dir);

struct ExtractOutcome {
    std::string features_path;
    int panels_ok = 0;
    int panels_failed = 0;
    std::size_t records = 0;
    bool skipped = false;  // a matching complete feature file was already present
    std::vector<std::string> notes;  // per-file ok/error/warning lines, also written to the log
};

// Feature extraction over config.images. Unreadable or undersized images
// are reported and skipped; the run fails only if nothing survives.
// Completed sub-images are journaled, so an interrupted run resumes where
// it stopped. Deterministic for any jobs value.
ExtractOutcome run_extract(const RunConfig& config, bool export_csv = false);

void run_vocab(const RunConfig& config);
void run_topics(const RunConfig& config);
void run_embed(const RunConfig& config);
void run_report(const RunConfig& config);
void run_all(const RunConfig& config);

// Stage table readers used by downstream stages, the report, and tests.
struct LabelsTable {
    StageHeader header;
    std::vector<PanelInfo> panels;
    std::vector<PatchKey> keys;
    std::vector<int> labels;
};
LabelsTable load_labels(const std::string& path);

struct WeightsTable {
    StageHeader header;
    std::vector<PanelInfo> panels;
    std::vector<int> doc_panel, doc_sub;
    Matrix weights;
};
WeightsTable load_weights(const std::string& path);

struct EmbeddingTable {
    StageHeader header;
    std::vector<PanelInfo> panels;
    std::vector<int> doc_panel, doc_sub;
    std::vector<double> x, y;
};
EmbeddingTable load_embedding(const std::string& path);

// Single-patch descriptor: coordinate conversion, 6-level dual-tree
// transform, fused magnitudes, one tree fit per orientation. The building
// block run_extract parallelizes over.
std::vector<double> extract_patch_features(const Grid& r, const Grid& g, const Grid& b,
                                           const RunConfig& config);

}  // namespace tess
