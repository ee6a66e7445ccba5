#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tessella/rng.hpp"

namespace tess {

// Full run description. The analysis fields (everything that influences
// stage artifact bytes) feed the config hash; orchestration fields (images,
// out_dir, jobs, stage toggles, report pattern subset) do not, so toggling a
// stage or moving the output directory never invalidates existing artifacts.
struct RunConfig {
    // tiling and transform
    int patch = 64;
    int stride = 32;
    int subimage = 480;
    int levels = 6;

    // vocabulary and topic model
    int vocab_depth = 10;
    int topics = 20;
    double alpha = 1.0;
    double beta = 0.01;

    // embedding
    double perplexity = 30.0;

    // feature assembly
    bool log_variance = true;

    // master seed; stages derive their own unless pinned explicitly
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> vocab_seed;
    std::optional<std::uint64_t> topics_seed;
    std::optional<std::uint64_t> embed_seed;

    std::uint64_t effective_vocab_seed() const {
        return vocab_seed ? *vocab_seed : mix_seed(seed, 2);
    }
    std::uint64_t effective_topics_seed() const {
        return topics_seed ? *topics_seed : mix_seed(seed, 3);
    }
    std::uint64_t effective_embed_seed() const {
        return embed_seed ? *embed_seed : mix_seed(seed, 4);
    }

    // stage toggles, honored by run-all
    struct Stages {
        bool extract = true;
        bool vocab = true;
        bool topics = true;
        bool embed = true;
        bool report = true;
    } stages;

    // orchestration
    std::vector<std::string> images;
    std::string out_dir = "out";
    int jobs = 1;
    std::vector<int> patterns;  // 1-based heatmap subset; empty = all K

    int patch_grid() const { return (subimage - patch) / stride + 1; }
    int vocab_size() const { return 1 << vocab_depth; }
};

// Parses the JSON run description. Unknown keys, wrong types, or malformed
// text raise ConfigError. Missing keys keep their defaults.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& config);

// Structural invariants: levels fixed at 6 with patch == 2^levels (the
// descriptor layout needs complete six-scale quadtrees), stride <= patch,
// sub-image compatible with the patch grid, positive hyperparameters.
// Violations raise ConfigError.
void validate_config(const RunConfig& config);

// FNV-1a over the canonical rendering of the analysis fields and effective
// per-stage seeds. Stage files embed this value; stages refuse inputs whose
// recorded hash differs.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace tess
